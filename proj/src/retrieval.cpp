#include "reasonedit/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "reasonedit/errors.hpp"
#include "reasonedit/rng.hpp"

namespace reasonedit {

using nlohmann::json;

void RetrievalConfig::validate() const {
    if (k < 1) throw ArgumentError("K must be >= 1");
    if (!(p > 0.0 && p <= 100.0)) throw ArgumentError("percentile p must lie in (0, 100]");
}

double nearest_rank_percentile(std::vector<double> values, double p) {
    if (values.empty()) throw ArgumentError("percentile of an empty list");
    if (!(p > 0.0 && p <= 100.0)) throw ArgumentError("percentile p must lie in (0, 100]");
    const auto m = static_cast<double>(values.size());
    auto rank = static_cast<std::size_t>(std::ceil(p * m / 100.0));
    rank = std::clamp<std::size_t>(rank, 1, values.size());
    auto nth = values.begin() + static_cast<std::ptrdiff_t>(rank - 1);
    std::nth_element(values.begin(), nth, values.end());
    return *nth;
}

double rejection_threshold(const Codebook& cb, double p) {
    const auto& entries = cb.entries();
    if (entries.size() < 2) return std::numeric_limits<double>::infinity();
    if (auto cached = cb.threshold_cache().get(p)) return *cached;

    std::vector<std::size_t> keys(entries.size());
    std::iota(keys.begin(), keys.end(), std::size_t{0});
    if (keys.size() > kMaxThresholdKeys) {
        Rng rng(fnv1a64("threshold-sample", entries.size()));
        rng.shuffle(std::span<std::size_t>(keys));
        keys.resize(kMaxThresholdKeys);
    }
    std::vector<double> distances;
    distances.reserve(keys.size() * (keys.size() - 1) / 2);
    for (std::size_t a = 0; a < keys.size(); ++a)
        for (std::size_t b = a + 1; b < keys.size(); ++b)
            distances.push_back(
                euclidean_distance(entries[keys[a]].key.values, entries[keys[b]].key.values));
    const double threshold = nearest_rank_percentile(std::move(distances), p);
    cb.threshold_cache().put(p, threshold);
    return threshold;
}

std::vector<Neighbor> nearest_neighbors(const Codebook& cb, const EmbeddingVector& query,
                                        std::uint32_t k) {
    const auto& entries = cb.entries();
    std::vector<Neighbor> all;
    all.reserve(entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i)
        all.push_back(Neighbor{i, euclidean_distance(entries[i].key.values, query.values)});
    const auto by_distance = [](const Neighbor& a, const Neighbor& b) {
        return a.distance < b.distance || (a.distance == b.distance && a.entry < b.entry);
    };
    const std::size_t take = std::min<std::size_t>(k, all.size());
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(take), all.end(),
                      by_distance);
    all.resize(take);
    return all;
}

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n\f\v");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n\f\v");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> collect_sentences(const Codebook& cb, std::span<const Neighbor> neighbors) {
    std::vector<std::string> out;
    for (const auto& n : neighbors) {
        for (const auto& v : cb.entries().at(n.entry).values) {
            std::string s = trim(v);
            if (s.empty()) continue;
            if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(std::move(s));
        }
    }
    return out;
}

RetrievalResult retrieve(const Codebook& cb, const EmbeddingVector& query,
                         const RetrievalConfig& cfg) {
    cfg.validate();
    if (query.dim() != cb.config().dim())
        throw ArgumentError("query dim " + std::to_string(query.dim()) +
                            " does not match codebook dim " + std::to_string(cb.config().dim()));
    require_finite(query);
    RetrievalResult result;
    if (cb.entries().empty()) {
        result.threshold = std::numeric_limits<double>::infinity();
        result.min_distance = std::numeric_limits<double>::infinity();
        return result;
    }
    result.threshold = rejection_threshold(cb, cfg.p);
    auto neighbors = nearest_neighbors(cb, query, cfg.k);
    result.min_distance = neighbors.front().distance;
    if (result.min_distance > result.threshold) return result;
    result.retrieved = true;
    result.sentences = collect_sentences(cb, neighbors);
    result.neighbors = std::move(neighbors);
    return result;
}

std::string assemble_prompt(std::span<const std::string> sentences, std::string_view question,
                            const PromptFormat& format) {
    if (sentences.empty()) return std::string(question);
    std::string out;
    for (std::size_t i = 0; i < sentences.size(); ++i) {
        if (i > 0) out += format.joiner;
        out += sentences[i];
    }
    out += format.separator;
    out += question;
    return out;
}

QueryRecord query_from_json(const json& j) {
    if (!j.is_object()) throw ValidationError("query record is not an object");
    QueryRecord q;
    try {
        q.sample_id = j.at("sample_id").get<std::string>();
        q.image_ref = j.at("image_ref").get<std::string>();
        q.question = j.at("question").get<std::string>();
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed query: ") + e.what());
    }
    if (q.question.empty()) throw ValidationError("query question is empty");
    return q;
}

json result_to_json(const std::string& sample_id, const RetrievalResult& result,
                    const std::string& final_prompt) {
    json ids = json::array();
    json distances = json::array();
    for (const auto& n : result.neighbors) {
        ids.push_back(n.entry);
        distances.push_back(n.distance);
    }
    return json{{"sample_id", sample_id},   {"retrieved", result.retrieved},
                {"sentences", result.sentences}, {"neighbor_ids", ids},
                {"distances", distances},   {"final_prompt", final_prompt}};
}

}  // namespace reasonedit
