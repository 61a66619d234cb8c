#include "reasonedit/edit_model.hpp"

#include <istream>
#include <ostream>
#include <set>

#include "reasonedit/errors.hpp"

namespace reasonedit {

using nlohmann::json;

namespace {

const json& require(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) throw ValidationError(std::string("missing field '") + key + "'");
    return *it;
}

std::string require_string(const json& j, const char* key) {
    const json& v = require(j, key);
    if (!v.is_string()) throw ValidationError(std::string("field '") + key + "' must be a string");
    return v.get<std::string>();
}

std::vector<std::string> string_array(const json& v, const char* key) {
    if (!v.is_array()) throw ValidationError(std::string("field '") + key + "' must be an array");
    std::vector<std::string> out;
    out.reserve(v.size());
    for (const auto& item : v) {
        if (!item.is_string())
            throw ValidationError(std::string("field '") + key + "' must contain strings");
        out.push_back(item.get<std::string>());
    }
    return out;
}

std::uint32_t non_negative(const json& j, const char* key) {
    const json& v = require(j, key);
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0 ||
        v.get<std::int64_t>() > std::int64_t{UINT32_MAX})
        throw ValidationError(std::string("bbox field '") + key + "' must be a non-negative integer");
    return static_cast<std::uint32_t>(v.get<std::int64_t>());
}

template <class T, class FromJson, class Validate>
std::vector<T> parse_lines(std::istream& in, FromJson from_json, Validate check) {
    std::vector<T> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(line_no, e.what());
        }
        if (!j.is_object()) throw ParseError(line_no, "record is not an object");
        try {
            T item = from_json(j);
            check(item);
            out.push_back(std::move(item));
        } catch (const ValidationError& e) {
            throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace

std::vector<BBox> Edit::evidence_for(std::size_t statement_index) const {
    std::vector<BBox> boxes;
    if (!evidence) return boxes;
    for (const auto& ev : *evidence)
        if (ev.statement_index == statement_index) boxes.push_back(ev.bbox);
    return boxes;
}

std::string_view to_string(SampleKind kind) noexcept {
    switch (kind) {
        case SampleKind::edit: return "edit";
        case SampleKind::t_gen: return "t_gen";
        case SampleKind::i_gen: return "i_gen";
        case SampleKind::r_gen: return "r_gen";
        case SampleKind::coe_gen: return "coe_gen";
        case SampleKind::unrelated: return "unrelated";
    }
    return "unknown";
}

SampleKind parse_sample_kind(std::string_view name) {
    for (SampleKind k : kAllSampleKinds)
        if (to_string(k) == name) return k;
    throw ArgumentError("unknown sample kind '" + std::string(name) + "'");
}

void validate(const Edit& edit) {
    if (edit.edit_id.empty()) throw ValidationError("edit_id must be nonempty");
    if (edit.question.empty()) throw ValidationError("edit " + edit.edit_id + ": empty question");
    if (edit.answer.empty()) throw ValidationError("edit " + edit.edit_id + ": empty answer");
    if (edit.evidence) {
        for (const auto& ev : *edit.evidence) {
            if (ev.statement_index >= edit.reasoning.size())
                throw ValidationError("edit " + edit.edit_id + ": evidence statement_index " +
                                      std::to_string(ev.statement_index) + " out of range (" +
                                      std::to_string(edit.reasoning.size()) + " statements)");
            if (ev.bbox.w == 0 || ev.bbox.h == 0)
                throw ValidationError("edit " + edit.edit_id + ": evidence bbox has zero area");
        }
    }
}

void validate(const EvalSample& sample) {
    if (sample.sample_id.empty()) throw ValidationError("sample_id must be nonempty");
    if (!sample.candidates.empty()) {
        bool found = false;
        for (const auto& c : sample.candidates) found = found || c == sample.reference_answer;
        if (!found)
            throw ValidationError("sample " + sample.sample_id +
                                  ": reference_answer not among candidates");
    }
}

json to_json(const BBox& box) {
    return json{{"x", box.x}, {"y", box.y}, {"w", box.w}, {"h", box.h}};
}

BBox bbox_from_json(const json& j) {
    if (!j.is_object()) throw ValidationError("bbox must be an object");
    return BBox{non_negative(j, "x"), non_negative(j, "y"), non_negative(j, "w"),
                non_negative(j, "h")};
}

json to_json(const Edit& edit) {
    json j{{"edit_id", edit.edit_id},   {"image_ref", edit.image_ref},
           {"question", edit.question}, {"answer", edit.answer},
           {"reasoning", edit.reasoning}};
    if (edit.evidence) {
        json arr = json::array();
        for (const auto& ev : *edit.evidence)
            arr.push_back({{"statement_index", ev.statement_index}, {"bbox", to_json(ev.bbox)}});
        j["evidence"] = std::move(arr);
    }
    return j;
}

Edit edit_from_json(const json& j) {
    Edit e;
    e.edit_id = require_string(j, "edit_id");
    e.image_ref = require_string(j, "image_ref");
    e.question = require_string(j, "question");
    e.answer = require_string(j, "answer");
    if (auto it = j.find("reasoning"); it != j.end()) e.reasoning = string_array(*it, "reasoning");
    if (auto it = j.find("evidence"); it != j.end() && !it->is_null()) {
        if (!it->is_array()) throw ValidationError("field 'evidence' must be an array");
        std::vector<Evidence> evidence;
        for (const auto& item : *it) {
            const json& idx = require(item, "statement_index");
            if (!idx.is_number_integer() || idx.get<std::int64_t>() < 0)
                throw ValidationError("statement_index must be a non-negative integer");
            evidence.push_back(
                Evidence{static_cast<std::size_t>(idx.get<std::int64_t>()),
                         bbox_from_json(require(item, "bbox"))});
        }
        e.evidence = std::move(evidence);
    }
    return e;
}

json to_json(const EvalSample& s) {
    json j{{"sample_id", s.sample_id},
           {"kind", std::string(to_string(s.kind))},
           {"image_ref", s.image_ref},
           {"question", s.question},
           {"reference_answer", s.reference_answer},
           {"candidates", s.candidates}};
    j["parent_edit_id"] = s.parent_edit_id ? json(*s.parent_edit_id) : json(nullptr);
    return j;
}

EvalSample eval_sample_from_json(const json& j) {
    EvalSample s;
    s.sample_id = require_string(j, "sample_id");
    try {
        s.kind = parse_sample_kind(require_string(j, "kind"));
    } catch (const ArgumentError& e) {
        throw ValidationError(e.what());
    }
    if (auto it = j.find("parent_edit_id"); it != j.end() && !it->is_null()) {
        if (!it->is_string()) throw ValidationError("field 'parent_edit_id' must be a string");
        s.parent_edit_id = it->get<std::string>();
    }
    s.image_ref = require_string(j, "image_ref");
    s.question = require_string(j, "question");
    s.reference_answer = require_string(j, "reference_answer");
    if (auto it = j.find("candidates"); it != j.end()) s.candidates = string_array(*it, "candidates");
    return s;
}

std::vector<Edit> parse_edits(std::istream& in) {
    std::set<std::string> seen;
    return parse_lines<Edit>(in, edit_from_json, [&seen](const Edit& e) {
        validate(e);
        if (!seen.insert(e.edit_id).second)
            throw ValidationError("duplicate edit_id '" + e.edit_id + "'");
    });
}

std::vector<EvalSample> parse_eval_samples(std::istream& in) {
    std::set<std::string> seen;
    return parse_lines<EvalSample>(in, eval_sample_from_json, [&seen](const EvalSample& s) {
        validate(s);
        if (!seen.insert(s.sample_id).second)
            throw ValidationError("duplicate sample_id '" + s.sample_id + "'");
    });
}

void write_edits(std::ostream& out, const std::vector<Edit>& edits) {
    for (const auto& e : edits) out << to_json(e).dump() << '\n';
}

void write_eval_samples(std::ostream& out, const std::vector<EvalSample>& samples) {
    for (const auto& s : samples) out << to_json(s).dump() << '\n';
}

std::string answer_sentence(std::string_view question, std::string_view answer) {
    if (question.empty() || answer.empty())
        throw ArgumentError("answer_sentence requires a nonempty question and answer");
    std::string out = "The answer to question ";
    out += question;
    out += " about the image is ";
    out += answer;
    out += '.';
    return out;
}

}  // namespace reasonedit
