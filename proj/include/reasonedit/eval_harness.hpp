#pragma once

#include <array>
#include <cstdint>
#include <exception>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "reasonedit/codebook.hpp"
#include "reasonedit/edit_model.hpp"
#include "reasonedit/retrieval.hpp"

namespace reasonedit {

struct PredictionRecord {
    std::string sample_id;
    SampleKind kind = SampleKind::edit;
    std::optional<std::string> parent_edit_id;
    std::string predicted;
    std::string reference;
    std::optional<std::string> pre_edit_predicted;  // required for unrelated

    bool operator==(const PredictionRecord&) const = default;
};

void validate(const PredictionRecord& record);

// Optional answer normalization; exact label equality by default.
struct MatchOptions {
    bool trim = false;
    bool casefold = false;
};

bool labels_match(std::string_view a, std::string_view b, const MatchOptions& options = {});

// Success rate over records of one kind: predicted == reference, or for
// unrelated samples predicted == pre_edit_predicted. nullopt when empty.
// Throws ArgumentError if any record has a different kind.
std::optional<double> metric(std::span<const PredictionRecord> records, SampleKind kind,
                             const MatchOptions& options = {});

// "reliability", "locality", "t_gen", ...
std::string_view metric_name(SampleKind kind) noexcept;

struct MetricReport {
    std::array<std::optional<double>, 6> values{};
    std::array<std::size_t, 6> counts{};
    std::optional<double> storage_kb_per_edit;

    std::optional<double> value(SampleKind kind) const;
    std::size_t count(SampleKind kind) const;
    bool operator==(const MetricReport&) const = default;
};

MetricReport compute_report(std::span<const PredictionRecord> records, const MatchOptions& options = {});
nlohmann::json to_json(const MetricReport& report);

nlohmann::json to_json(const PredictionRecord& record);
PredictionRecord prediction_from_json(const nlohmann::json& j);

struct ErrorChain {
    std::string edit_id;
    std::vector<std::string> sentences;  // edit order
    std::uint64_t subset_count_checked = 0;
};

inline constexpr std::size_t kMaxChainStatements = 16;

// Verifies all 2^N - 1 nonempty ordered subsets of the reasoning (sentences
// joined by single spaces) and unions the subsets with P(No) > 0.5.
ErrorChain error_chain(const Edit& edit, Provider& oracle, const std::string& image_ref,
                       const std::string& prompt_template = std::string(kErrorChainTemplate));

// Produces answer labels for evaluation samples. The engine never hosts the
// answering model; this is where an external model or a stand-in plugs in.
class Answerer {
public:
    virtual ~Answerer() = default;
    // Answer given the retrieval outcome for the sample's query.
    virtual std::string answer(const EvalSample& sample, const RetrievalResult& retrieval,
                               const std::string& prompt) = 0;
    // Answer of the model before any edit.
    virtual std::string answer_unedited(const EvalSample& sample) = 0;
};

// Picks the candidate named by a retrieved answer sentence, otherwise a
// seeded-hash candidate standing in for the unedited model.
class MockAnswerer final : public Answerer {
public:
    explicit MockAnswerer(std::uint64_t seed = 0) : seed_(seed) {}
    std::string answer(const EvalSample& sample, const RetrievalResult& retrieval,
                       const std::string& prompt) override;
    std::string answer_unedited(const EvalSample& sample) override;

private:
    std::uint64_t seed_;
};

struct SequentialConfig {
    std::uint32_t eval_every = 200;
    std::uint32_t batch = 50;
    std::uint64_t seed = 0;
    RetrievalConfig retrieval;
    PromptFormat prompt;
    EditOptions edit;
    MatchOptions match;
    bool record_timing = true;
};

struct TrajectoryPoint {
    std::uint64_t step = 0;
    MetricReport report;
    double seconds_per_edit = 0.0;
    double kb_per_edit = 0.0;
    std::size_t entries = 0;

    bool operator==(const TrajectoryPoint&) const = default;
};

struct Trajectory {
    std::vector<TrajectoryPoint> points;
    std::uint64_t edits_applied = 0;
    std::optional<std::string> error;
    std::exception_ptr failure;  // the exception behind `error`
};

// Retrieval + answer for every sample, producing prediction records.
std::vector<PredictionRecord> predict(const Codebook& cb, Provider& provider, Answerer& answerer,
                                      std::span<const EvalSample> samples,
                                      const RetrievalConfig& retrieval, const PromptFormat& prompt);

// Applies edits in order and evaluates every `eval_every` edits on samples
// belonging to a seeded random batch of the accumulated edits (plus
// parentless unrelated samples). Stops at the first provider failure.
Trajectory sequential_run(std::span<const Edit> edits, std::span<const EvalSample> eval_pool,
                          Codebook& cb, Provider& provider, Answerer& answerer,
                          const SequentialConfig& cfg);

nlohmann::json to_json(const TrajectoryPoint& point);
void write_trajectory(std::ostream& out, const Trajectory& trajectory);

// Jaccard similarity over whitespace tokens.
double word_overlap(std::string_view a, std::string_view b);

struct LocalityOptions {
    std::size_t random_count = 100;
    std::size_t similar_count = 100;
    std::size_t per_edit = 3;
    std::uint64_t seed = 0;
};

// Unrelated-set construction from correctly answered samples: the top
// `per_edit` word-overlap matches per edit question (up to similar_count),
// plus `random_count` random other samples.
std::vector<EvalSample> build_locality_set(std::span<const Edit> edits,
                                           std::span<const EvalSample> correct,
                                           const LocalityOptions& options = {});

}  // namespace reasonedit
