#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace reasonedit {

struct BBox {
    std::uint32_t x = 0;
    std::uint32_t y = 0;
    std::uint32_t w = 0;
    std::uint32_t h = 0;

    bool operator==(const BBox&) const = default;

    std::uint64_t area() const noexcept { return std::uint64_t{w} * h; }
    bool fits_within(std::uint32_t width, std::uint32_t height) const noexcept {
        return std::uint64_t{x} + w <= width && std::uint64_t{y} + h <= height;
    }
};

struct Evidence {
    std::size_t statement_index = 0;
    BBox bbox;

    bool operator==(const Evidence&) const = default;
};

// One user correction: image, question, correct answer and the ordered
// reasoning statements that justify it.
struct Edit {
    std::string edit_id;
    std::string image_ref;
    std::string question;
    std::string answer;
    std::vector<std::string> reasoning;
    std::optional<std::vector<Evidence>> evidence;

    bool operator==(const Edit&) const = default;

    // User-supplied boxes for one statement, in file order.
    std::vector<BBox> evidence_for(std::size_t statement_index) const;
};

enum class SampleKind { edit, t_gen, i_gen, r_gen, coe_gen, unrelated };

inline constexpr SampleKind kAllSampleKinds[] = {SampleKind::edit,  SampleKind::t_gen,
                                                 SampleKind::i_gen, SampleKind::r_gen,
                                                 SampleKind::coe_gen, SampleKind::unrelated};

std::string_view to_string(SampleKind kind) noexcept;
// Throws ArgumentError on an unknown name.
SampleKind parse_sample_kind(std::string_view name);

struct EvalSample {
    std::string sample_id;
    SampleKind kind = SampleKind::edit;
    std::optional<std::string> parent_edit_id;
    std::string image_ref;
    std::string question;
    std::string reference_answer;
    std::vector<std::string> candidates;

    bool operator==(const EvalSample&) const = default;
};

// Checks a single edit's field invariants. Throws ValidationError.
void validate(const Edit& edit);
void validate(const EvalSample& sample);

nlohmann::json to_json(const BBox& box);
BBox bbox_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Edit& edit);
Edit edit_from_json(const nlohmann::json& j);

nlohmann::json to_json(const EvalSample& sample);
EvalSample eval_sample_from_json(const nlohmann::json& j);

// Line-delimited readers. Blank lines are skipped. Malformed lines raise
// ParseError carrying the 1-based line number; invariant violations raise
// ValidationError (also prefixed with the line number).
std::vector<Edit> parse_edits(std::istream& in);
std::vector<EvalSample> parse_eval_samples(std::istream& in);

void write_edits(std::ostream& out, const std::vector<Edit>& edits);
void write_eval_samples(std::ostream& out, const std::vector<EvalSample>& samples);

// Value sentence of an answer entry.
std::string answer_sentence(std::string_view question, std::string_view answer);

}  // namespace reasonedit
