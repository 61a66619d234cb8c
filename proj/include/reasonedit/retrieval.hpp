#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "reasonedit/codebook.hpp"

namespace reasonedit {

struct RetrievalConfig {
    std::uint32_t k = 5;
    double p = 50.0;  // percentile in (0, 100]

    void validate() const;
};

struct Neighbor {
    std::size_t entry = 0;  // index into Codebook::entries()
    double distance = 0.0;
};

struct RetrievalResult {
    bool retrieved = false;
    std::vector<std::string> sentences;
    std::vector<Neighbor> neighbors;  // ascending distance
    double threshold = 0.0;
    double min_distance = 0.0;
};

// Keys beyond this count are subsampled before taking pairwise distances.
inline constexpr std::size_t kMaxThresholdKeys = 2048;

// Nearest-rank percentile: sorted ascending, the element at 1-based rank
// ceil(p/100 * M). Throws ArgumentError on an empty list or p outside (0, 100].
double nearest_rank_percentile(std::vector<double> values, double p);

// p-th percentile of pairwise key distances; +inf for fewer than two keys.
// Cached on the codebook until its next mutation.
double rejection_threshold(const Codebook& cb, double p);

// KNN over keys with percentile rejection. Ties in distance go to the
// earlier entry.
RetrievalResult retrieve(const Codebook& cb, const EmbeddingVector& query,
                         const RetrievalConfig& cfg = {});

// The K smallest (distance, index) pairs, ascending.
std::vector<Neighbor> nearest_neighbors(const Codebook& cb, const EmbeddingVector& query,
                                        std::uint32_t k);

// Values of `neighbors` in order, trimmed, exact duplicates dropped.
std::vector<std::string> collect_sentences(const Codebook& cb, std::span<const Neighbor> neighbors);

std::string trim(std::string_view s);

struct PromptFormat {
    std::string joiner = " ";
    std::string separator = "\n";
};

// Sentences joined by `joiner`, then `separator`, then the question.
// Empty context leaves the question unchanged.
std::string assemble_prompt(std::span<const std::string> sentences, std::string_view question,
                            const PromptFormat& format = {});

struct QueryRecord {
    std::string sample_id;
    std::string image_ref;
    std::string question;
};

QueryRecord query_from_json(const nlohmann::json& j);
nlohmann::json result_to_json(const std::string& sample_id, const RetrievalResult& result,
                              const std::string& final_prompt);

}  // namespace reasonedit
