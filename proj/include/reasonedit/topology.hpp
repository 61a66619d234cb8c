#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "reasonedit/provider.hpp"
#include "reasonedit/similarity_network.hpp"

namespace reasonedit {

enum class ModularityMode { vision, language, bimodal };
std::string_view to_string(ModularityMode mode) noexcept;

struct BatchSpec {
    std::uint32_t n = 10;            // pairs per batch
    std::uint32_t batches = 10;      // B
    std::uint64_t seed = 0;
    std::uint32_t aug_per_anchor = 0;  // 0 means 2(n-1)
    bool parallel = true;

    std::uint32_t effective_aug_per_anchor() const noexcept {
        return aug_per_anchor != 0 ? aug_per_anchor : 2 * (n - 1);
    }
    void validate() const;
};

// Nodes of one sample network together with its expected partition.
struct NodeSet {
    std::vector<ImageText> nodes;
    std::vector<std::string> ids;
    Partition partition;
};

// n^2 cross-product nodes <i_a, t_b> labelled by image index a.
NodeSet build_vision_nodes(std::span<const ImageText> batch);
// Same nodes labelled by text index b.
NodeSet build_language_nodes(std::span<const ImageText> batch);
// n anchors, 2n(n-1) mismatched combinations and `aug_per_anchor` augmented
// views per anchor (first half image-augmented, rest text-augmented). Each
// anchor shares its label with its views; mismatched nodes are singletons.
NodeSet build_bimodal_nodes(std::span<const ImageText> batch, Provider& provider,
                            std::uint32_t aug_per_anchor = 0);

constexpr std::uint64_t bimodal_node_count(std::uint64_t n) noexcept { return n + 4 * n * (n - 1); }

struct PairCount {
    std::uint64_t within = 0;
    std::uint64_t total = 0;
};
// Unordered node pairs sharing a cluster, and all unordered pairs.
PairCount within_cluster_pairs(const Partition& partition);

// Draws B batches of n distinct pool members. Batches consume a seeded
// permutation of the pool without replacement; once it runs out a fresh
// permutation is started.
std::vector<std::vector<ImageText>> sample_batches(std::span<const ImageText> pool,
                                                   const BatchSpec& spec);

using PairEmbedder = std::function<EmbeddingVector(const ImageText&)>;

// Embedder reading one provider layer.
PairEmbedder layer_embedder(Provider& provider, const LayerSpec& layer);

struct ModularityEstimate {
    double mean = 0.0;
    double std = 0.0;  // population std across batches
    std::vector<double> per_batch;
    ModularityMode mode = ModularityMode::vision;
};

// Monte Carlo sample modularity over B batches. `augmenter` is required
// for bimodal mode.
ModularityEstimate sample_modularity(std::span<const ImageText> pool, ModularityMode mode,
                                     const BatchSpec& spec, const PairEmbedder& embedder,
                                     Provider* augmenter = nullptr);

// Modularity of one already-built node set.
double node_set_modularity(const NodeSet& set, const PairEmbedder& embedder);

struct BiasOptions {
    std::uint32_t augmented_variants = 4;
    std::uint32_t mismatched_variants = 8;
};

struct BiasEstimate {
    double mean = 0.0;
    double std = 0.0;
    std::size_t anchors = 0;
    ModularityMode mode = ModularityMode::vision;
};

// Per anchor <i,t>: mean distance to <aug(i), t> minus mean distance to
// <i, t'> with t' drawn from `mismatch_texts`.
BiasEstimate vision_bias(std::span<const ImageText> pool, const BatchSpec& spec,
                         const PairEmbedder& embedder, std::span<const std::string> mismatch_texts,
                         Provider& provider, const BiasOptions& options = {});

// Per anchor <i,t>: mean distance to <i, aug(t)> minus mean distance to
// <i', t> with i' drawn from `mismatch_images`.
BiasEstimate language_bias(std::span<const ImageText> pool, const BatchSpec& spec,
                           const PairEmbedder& embedder,
                           std::span<const std::string> mismatch_images, Provider& provider,
                           const BiasOptions& options = {});

double mean_of(std::span<const double> values);
double population_std(std::span<const double> values);

}  // namespace reasonedit
