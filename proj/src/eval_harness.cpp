#include "reasonedit/eval_harness.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "reasonedit/errors.hpp"
#include "reasonedit/patchify.hpp"
#include "reasonedit/rng.hpp"

namespace reasonedit {

using nlohmann::json;

namespace {

std::size_t kind_slot(SampleKind kind) noexcept { return static_cast<std::size_t>(kind); }

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

void validate(const PredictionRecord& r) {
    if (r.sample_id.empty()) throw ValidationError("prediction without sample_id");
    if (r.kind == SampleKind::unrelated && !r.pre_edit_predicted)
        throw ValidationError("unrelated prediction " + r.sample_id + " lacks pre_edit_predicted");
}

bool labels_match(std::string_view a, std::string_view b, const MatchOptions& options) {
    std::string x = options.trim ? trim(a) : std::string(a);
    std::string y = options.trim ? trim(b) : std::string(b);
    if (options.casefold) {
        auto lower = [](std::string& s) {
            for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        };
        lower(x);
        lower(y);
    }
    return x == y;
}

std::optional<double> metric(std::span<const PredictionRecord> records, SampleKind kind,
                             const MatchOptions& options) {
    if (records.empty()) return std::nullopt;
    std::size_t hits = 0;
    for (const auto& r : records) {
        if (r.kind != kind)
            throw ArgumentError("metric over " + std::string(to_string(kind)) +
                                " received a " + std::string(to_string(r.kind)) + " record");
        validate(r);
        const std::string& target = kind == SampleKind::unrelated ? *r.pre_edit_predicted : r.reference;
        if (labels_match(r.predicted, target, options)) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(records.size());
}

std::string_view metric_name(SampleKind kind) noexcept {
    switch (kind) {
        case SampleKind::edit: return "reliability";
        case SampleKind::unrelated: return "locality";
        default: return to_string(kind);
    }
}

std::optional<double> MetricReport::value(SampleKind kind) const { return values[kind_slot(kind)]; }
std::size_t MetricReport::count(SampleKind kind) const { return counts[kind_slot(kind)]; }

MetricReport compute_report(std::span<const PredictionRecord> records, const MatchOptions& options) {
    std::array<std::vector<PredictionRecord>, 6> by_kind;
    for (const auto& r : records) by_kind[kind_slot(r.kind)].push_back(r);
    MetricReport report;
    for (SampleKind k : kAllSampleKinds) {
        const auto& group = by_kind[kind_slot(k)];
        report.values[kind_slot(k)] = metric(group, k, options);
        report.counts[kind_slot(k)] = group.size();
    }
    return report;
}

json to_json(const MetricReport& report) {
    json j = json::object();
    json counts = json::object();
    for (SampleKind k : kAllSampleKinds) {
        j[std::string(metric_name(k))] = optional_number(report.value(k));
        counts[std::string(metric_name(k))] = report.count(k);
    }
    j["counts"] = std::move(counts);
    j["storage_kb_per_edit"] = optional_number(report.storage_kb_per_edit);
    return j;
}

json to_json(const PredictionRecord& r) {
    json j{{"sample_id", r.sample_id},
           {"kind", std::string(to_string(r.kind))},
           {"predicted", r.predicted},
           {"reference", r.reference}};
    j["parent_edit_id"] = r.parent_edit_id ? json(*r.parent_edit_id) : json(nullptr);
    j["pre_edit_predicted"] = r.pre_edit_predicted ? json(*r.pre_edit_predicted) : json(nullptr);
    return j;
}

PredictionRecord prediction_from_json(const json& j) {
    PredictionRecord r;
    try {
        r.sample_id = j.at("sample_id").get<std::string>();
        r.kind = parse_sample_kind(j.at("kind").get<std::string>());
        r.predicted = j.at("predicted").get<std::string>();
        r.reference = j.at("reference").get<std::string>();
        if (auto it = j.find("parent_edit_id"); it != j.end() && !it->is_null())
            r.parent_edit_id = it->get<std::string>();
        if (auto it = j.find("pre_edit_predicted"); it != j.end() && !it->is_null())
            r.pre_edit_predicted = it->get<std::string>();
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed prediction record: ") + e.what());
    } catch (const ArgumentError& e) {
        throw ValidationError(e.what());
    }
    validate(r);
    return r;
}

ErrorChain error_chain(const Edit& edit, Provider& oracle, const std::string& image_ref,
                       const std::string& prompt_template) {
    const std::size_t n = edit.reasoning.size();
    if (n > kMaxChainStatements)
        throw ArgumentError("error chain enumeration is limited to " +
                            std::to_string(kMaxChainStatements) + " statements, edit " +
                            edit.edit_id + " has " + std::to_string(n));
    ErrorChain chain;
    chain.edit_id = edit.edit_id;
    if (n == 0) return chain;
    std::vector<bool> failing(n, false);
    const std::uint64_t subsets = (std::uint64_t{1} << n) - 1;
    for (std::uint64_t mask = 1; mask <= subsets; ++mask) {
        std::string statement;
        for (std::size_t i = 0; i < n; ++i) {
            if (!(mask & (std::uint64_t{1} << i))) continue;
            if (!statement.empty()) statement += ' ';
            statement += edit.reasoning[i];
        }
        const double p_no = 1.0 - yesno_prob(oracle.yesno(image_ref, std::nullopt, statement, prompt_template));
        if (p_no > 0.5)
            for (std::size_t i = 0; i < n; ++i)
                if (mask & (std::uint64_t{1} << i)) failing[i] = true;
        ++chain.subset_count_checked;
    }
    for (std::size_t i = 0; i < n; ++i)
        if (failing[i]) chain.sentences.push_back(edit.reasoning[i]);
    return chain;
}

std::string MockAnswerer::answer(const EvalSample& sample, const RetrievalResult& retrieval,
                                 const std::string&) {
    if (retrieval.retrieved) {
        for (const auto& c : sample.candidates) {
            const std::string tail = " about the image is " + c + ".";
            for (const auto& s : retrieval.sentences)
                if (s.size() >= tail.size() && s.compare(s.size() - tail.size(), tail.size(), tail) == 0)
                    return c;
        }
    }
    return answer_unedited(sample);
}

std::string MockAnswerer::answer_unedited(const EvalSample& sample) {
    if (sample.candidates.empty()) return {};
    const std::uint64_t h = fnv1a64(sample.image_ref + "\x1f" + sample.question, seed_);
    return sample.candidates[h % sample.candidates.size()];
}

std::vector<PredictionRecord> predict(const Codebook& cb, Provider& provider, Answerer& answerer,
                                      std::span<const EvalSample> samples,
                                      const RetrievalConfig& retrieval, const PromptFormat& prompt) {
    std::vector<PredictionRecord> out;
    out.reserve(samples.size());
    for (const auto& s : samples) {
        const auto query = embed_dual(provider, cb.config(), s.image_ref, std::nullopt, s.question);
        const auto result = retrieve(cb, query, retrieval);
        const std::string final_prompt = assemble_prompt(result.sentences, s.question, prompt);
        PredictionRecord r;
        r.sample_id = s.sample_id;
        r.kind = s.kind;
        r.parent_edit_id = s.parent_edit_id;
        r.reference = s.reference_answer;
        r.predicted = answerer.answer(s, result, final_prompt);
        if (s.kind == SampleKind::unrelated) r.pre_edit_predicted = answerer.answer_unedited(s);
        out.push_back(std::move(r));
    }
    return out;
}

Trajectory sequential_run(std::span<const Edit> edits, std::span<const EvalSample> eval_pool,
                          Codebook& cb, Provider& provider, Answerer& answerer,
                          const SequentialConfig& cfg) {
    if (edits.empty()) throw ArgumentError("sequential run needs a nonempty edit stream");
    if (cfg.eval_every == 0 || cfg.batch == 0)
        throw ArgumentError("eval_every and batch must be positive");
    Trajectory traj;
    std::vector<std::string> applied;
    double edit_seconds = 0.0;
    using clock = std::chrono::steady_clock;

    for (std::size_t i = 0; i < edits.size(); ++i) {
        try {
            const auto start = clock::now();
            add_edit(cb, edits[i], provider, cfg.edit);
            edit_seconds += std::chrono::duration<double>(clock::now() - start).count();
        } catch (const Error& e) {
            traj.error = "edit " + edits[i].edit_id + ": " + e.what();
            traj.failure = std::current_exception();
            break;
        }
        applied.push_back(edits[i].edit_id);
        traj.edits_applied = applied.size();
        if (applied.size() % cfg.eval_every != 0) continue;

        // Seeded batch of accumulated edits.
        std::vector<std::size_t> order(applied.size());
        for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
        Rng rng(fnv1a64("checkpoint", cfg.seed) ^ applied.size());
        rng.shuffle(std::span<std::size_t>(order));
        const std::size_t take = std::min<std::size_t>(cfg.batch, applied.size());
        std::unordered_set<std::string> chosen;
        for (std::size_t k = 0; k < take; ++k) chosen.insert(applied[order[k]]);

        std::vector<EvalSample> samples;
        for (const auto& s : eval_pool) {
            const bool parentless_unrelated = s.kind == SampleKind::unrelated && !s.parent_edit_id;
            if (parentless_unrelated || (s.parent_edit_id && chosen.contains(*s.parent_edit_id)))
                samples.push_back(s);
        }

        TrajectoryPoint point;
        point.step = applied.size();
        try {
            const auto preds = predict(cb, provider, answerer, samples, cfg.retrieval, cfg.prompt);
            point.report = compute_report(preds, cfg.match);
        } catch (const Error& e) {
            traj.error = "evaluation at step " + std::to_string(point.step) + ": " + e.what();
            traj.failure = std::current_exception();
            break;
        }
        point.kb_per_edit = storage_per_edit(cb);
        point.report.storage_kb_per_edit = point.kb_per_edit;
        point.entries = cb.entries().size();
        point.seconds_per_edit = cfg.record_timing ? edit_seconds / static_cast<double>(applied.size()) : 0.0;
        traj.points.push_back(std::move(point));
    }
    return traj;
}

json to_json(const TrajectoryPoint& point) {
    json j = to_json(point.report);
    j["step"] = point.step;
    j["seconds_per_edit"] = point.seconds_per_edit;
    j["kb_per_edit"] = point.kb_per_edit;
    j["entries"] = point.entries;
    return j;
}

void write_trajectory(std::ostream& out, const Trajectory& trajectory) {
    for (const auto& p : trajectory.points) out << to_json(p).dump() << '\n';
    if (trajectory.error)
        out << json{{"error", *trajectory.error}, {"edits_applied", trajectory.edits_applied}}.dump()
            << '\n';
}

double word_overlap(std::string_view a, std::string_view b) {
    auto tokens = [](std::string_view s) {
        std::set<std::string> out;
        std::istringstream in{std::string(s)};
        std::string t;
        while (in >> t) out.insert(t);
        return out;
    };
    const auto ta = tokens(a);
    const auto tb = tokens(b);
    if (ta.empty() && tb.empty()) return 0.0;
    std::size_t common = 0;
    for (const auto& t : ta) common += tb.count(t);
    return static_cast<double>(common) / static_cast<double>(ta.size() + tb.size() - common);
}

std::vector<EvalSample> build_locality_set(std::span<const Edit> edits,
                                           std::span<const EvalSample> correct,
                                           const LocalityOptions& options) {
    std::vector<bool> used(correct.size(), false);
    std::vector<EvalSample> similar;
    for (const auto& e : edits) {
        if (similar.size() >= options.similar_count) break;
        std::vector<std::pair<double, std::size_t>> ranked;
        for (std::size_t i = 0; i < correct.size(); ++i)
            if (!used[i]) ranked.emplace_back(word_overlap(e.question, correct[i].question), i);
        std::stable_sort(ranked.begin(), ranked.end(),
                         [](const auto& x, const auto& y) { return x.first > y.first; });
        for (std::size_t k = 0; k < ranked.size() && k < options.per_edit; ++k) {
            if (similar.size() >= options.similar_count) break;
            const std::size_t i = ranked[k].second;
            used[i] = true;
            EvalSample s = correct[i];
            s.kind = SampleKind::unrelated;
            s.parent_edit_id = e.edit_id;
            similar.push_back(std::move(s));
        }
    }

    std::vector<std::size_t> rest;
    for (std::size_t i = 0; i < correct.size(); ++i)
        if (!used[i]) rest.push_back(i);
    Rng rng(fnv1a64("locality", options.seed));
    rng.shuffle(std::span<std::size_t>(rest));
    rest.resize(std::min(rest.size(), options.random_count));
    std::sort(rest.begin(), rest.end());

    std::vector<EvalSample> out;
    for (std::size_t i : rest) {
        EvalSample s = correct[i];
        s.kind = SampleKind::unrelated;
        s.parent_edit_id.reset();
        out.push_back(std::move(s));
    }
    out.insert(out.end(), similar.begin(), similar.end());
    return out;
}

}  // namespace reasonedit
