#include "reasonedit/topology.hpp"

#include <cmath>
#include <numeric>
#include <set>

#include "reasonedit/errors.hpp"
#include "reasonedit/parallel.hpp"
#include "reasonedit/rng.hpp"

namespace reasonedit {

namespace {

void require_distinct(std::span<const ImageText> batch, bool images) {
    std::set<std::string> seen;
    for (const auto& p : batch) {
        const std::string& key = images ? p.image_ref : p.text;
        if (!seen.insert(key).second)
            throw ArgumentError(std::string("duplicate ") + (images ? "image" : "text") +
                                " in batch: '" + key + "'");
    }
}

NodeSet cross_product(std::span<const ImageText> batch, bool label_by_image) {
    const std::size_t n = batch.size();
    if (n < 2) throw ArgumentError("a batch needs at least 2 pairs");
    require_distinct(batch, label_by_image);
    NodeSet set;
    set.nodes.reserve(n * n);
    set.partition.labels.reserve(n * n);
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = 0; b < n; ++b) {
            set.nodes.push_back(ImageText{batch[a].image_ref, batch[b].text});
            set.ids.push_back("i" + std::to_string(a) + "t" + std::to_string(b));
            set.partition.labels.push_back(label_by_image ? a : b);
        }
    }
    return set;
}

std::uint64_t batch_seed(std::uint64_t seed, std::string_view tag, std::size_t batch) {
    std::uint64_t s = fnv1a64(tag, seed);
    s ^= 0x9e3779b97f4a7c15ull * (batch + 1);
    return splitmix64(s);
}

// Draws `count` members of `pool`, skipping `exclude`. Without replacement
// while the pool allows it.
std::vector<std::string> draw_mismatched(std::span<const std::string> pool,
                                         const std::string& exclude, std::uint32_t count, Rng& rng) {
    std::vector<std::size_t> eligible;
    for (std::size_t i = 0; i < pool.size(); ++i)
        if (pool[i] != exclude) eligible.push_back(i);
    if (eligible.empty()) throw ArgumentError("mismatch pool has no usable entries");
    std::vector<std::string> out;
    out.reserve(count);
    if (eligible.size() >= count) {
        // Partial Fisher-Yates.
        for (std::uint32_t k = 0; k < count; ++k) {
            const auto j = k + static_cast<std::size_t>(rng.below(eligible.size() - k));
            std::swap(eligible[k], eligible[j]);
            out.push_back(pool[eligible[k]]);
        }
    } else {
        for (std::uint32_t k = 0; k < count; ++k)
            out.push_back(pool[eligible[rng.below(eligible.size())]]);
    }
    return out;
}

BiasEstimate star_bias(std::span<const ImageText> pool, const BatchSpec& spec,
                       const PairEmbedder& embedder, std::span<const std::string> mismatch_pool,
                       Provider& provider, const BiasOptions& options, ModularityMode mode) {
    if (mismatch_pool.empty()) throw ArgumentError("mismatch pool is empty");
    if (options.augmented_variants == 0 || options.mismatched_variants == 0)
        throw ArgumentError("bias variant counts must be positive");
    const bool vision = mode == ModularityMode::vision;
    const auto batches = sample_batches(pool, spec);
    std::vector<std::vector<double>> per_batch(batches.size());

    parallel_for(batches.size(), spec.parallel, [&](std::size_t b) {
        Rng rng(batch_seed(spec.seed, vision ? "vision-bias" : "language-bias", b));
        for (const auto& anchor : batches[b]) {
            const auto z = embedder(anchor);
            const auto variants =
                provider.augment(anchor.image_ref, anchor.text, options.augmented_variants);
            double positive = 0.0;
            for (const auto& v : variants) {
                const ImageText perturbed = vision ? ImageText{v.image_ref, anchor.text}
                                                   : ImageText{anchor.image_ref, v.text};
                positive += euclidean_distance(z.values, embedder(perturbed).values);
            }
            positive /= static_cast<double>(variants.size());

            const auto others = draw_mismatched(mismatch_pool, vision ? anchor.text : anchor.image_ref,
                                                options.mismatched_variants, rng);
            double negative = 0.0;
            for (const auto& o : others) {
                const ImageText mismatched =
                    vision ? ImageText{anchor.image_ref, o} : ImageText{o, anchor.text};
                negative += euclidean_distance(z.values, embedder(mismatched).values);
            }
            negative /= static_cast<double>(others.size());
            per_batch[b].push_back(positive - negative);
        }
    });

    std::vector<double> all;
    for (const auto& v : per_batch) all.insert(all.end(), v.begin(), v.end());
    return BiasEstimate{mean_of(all), population_std(all), all.size(), mode};
}

}  // namespace

std::string_view to_string(ModularityMode mode) noexcept {
    switch (mode) {
        case ModularityMode::vision: return "vision";
        case ModularityMode::language: return "language";
        case ModularityMode::bimodal: return "bimodal";
    }
    return "unknown";
}

void BatchSpec::validate() const {
    if (n < 2) throw ArgumentError("batch size n must be >= 2");
    if (batches < 1) throw ArgumentError("batch count B must be >= 1");
}

NodeSet build_vision_nodes(std::span<const ImageText> batch) { return cross_product(batch, true); }

NodeSet build_language_nodes(std::span<const ImageText> batch) {
    return cross_product(batch, false);
}

NodeSet build_bimodal_nodes(std::span<const ImageText> batch, Provider& provider,
                            std::uint32_t aug_per_anchor) {
    const std::size_t n = batch.size();
    if (n < 2) throw ArgumentError("a batch needs at least 2 pairs");
    require_distinct(batch, true);
    require_distinct(batch, false);
    if (aug_per_anchor == 0) aug_per_anchor = static_cast<std::uint32_t>(2 * (n - 1));
    const std::uint32_t image_views = (aug_per_anchor + 1) / 2;

    NodeSet set;
    std::size_t next_singleton = n;
    auto add = [&set](ImageText node, std::string id, std::size_t label) {
        set.nodes.push_back(std::move(node));
        set.ids.push_back(std::move(id));
        set.partition.labels.push_back(label);
    };
    for (std::size_t k = 0; k < n; ++k) add(batch[k], "anchor" + std::to_string(k), k);
    for (std::size_t k = 0; k < n; ++k) {
        const std::string ks = std::to_string(k);
        for (std::size_t j = 0; j < n; ++j) {
            if (j == k) continue;
            add(ImageText{batch[k].image_ref, batch[j].text}, "same_image" + ks + "_t" + std::to_string(j),
                next_singleton++);
        }
        for (std::size_t j = 0; j < n; ++j) {
            if (j == k) continue;
            add(ImageText{batch[j].image_ref, batch[k].text}, "same_text" + ks + "_i" + std::to_string(j),
                next_singleton++);
        }
        const auto views = provider.augment(batch[k].image_ref, batch[k].text, aug_per_anchor);
        if (views.size() != aug_per_anchor)
            throw TransportError("provider returned the wrong number of augmentations");
        for (std::uint32_t r = 0; r < aug_per_anchor; ++r) {
            const bool image_view = r < image_views;
            add(image_view ? ImageText{views[r].image_ref, batch[k].text}
                           : ImageText{batch[k].image_ref, views[r].text},
                "aug" + ks + "_" + std::to_string(r), k);
        }
    }
    return set;
}

PairCount within_cluster_pairs(const Partition& partition) {
    std::vector<std::uint64_t> sizes(partition.cluster_count(), 0);
    for (auto l : partition.labels) ++sizes[l];
    PairCount c;
    const std::uint64_t n = partition.labels.size();
    c.total = n * (n - 1) / 2;
    for (auto s : sizes) c.within += s * (s - 1) / 2;
    return c;
}

std::vector<std::vector<ImageText>> sample_batches(std::span<const ImageText> pool,
                                                   const BatchSpec& spec) {
    spec.validate();
    if (pool.size() < spec.n)
        throw ArgumentError("pair pool has " + std::to_string(pool.size()) +
                            " entries, fewer than the batch size " + std::to_string(spec.n));
    Rng rng(batch_seed(spec.seed, "batches", 0));
    std::vector<std::size_t> order(pool.size());
    std::size_t cursor = order.size();
    std::vector<std::vector<ImageText>> batches;
    batches.reserve(spec.batches);
    for (std::uint32_t b = 0; b < spec.batches; ++b) {
        if (order.size() - cursor < spec.n) {
            std::iota(order.begin(), order.end(), std::size_t{0});
            rng.shuffle(std::span<std::size_t>(order));
            cursor = 0;
        }
        std::vector<ImageText> batch;
        batch.reserve(spec.n);
        for (std::uint32_t k = 0; k < spec.n; ++k) batch.push_back(pool[order[cursor++]]);
        batches.push_back(std::move(batch));
    }
    return batches;
}

PairEmbedder layer_embedder(Provider& provider, const LayerSpec& layer) {
    return [&provider, layer](const ImageText& p) {
        auto v = provider.embed_pair(p.image_ref, std::nullopt, p.text, layer);
        require_finite(v);
        return v;
    };
}

double node_set_modularity(const NodeSet& set, const PairEmbedder& embedder) {
    std::vector<EmbeddingVector> vectors;
    vectors.reserve(set.nodes.size());
    for (const auto& node : set.nodes) vectors.push_back(embedder(node));
    const auto net = build_adjacency(std::span<const EmbeddingVector>(vectors), set.ids);
    return modularity(net, set.partition);
}

ModularityEstimate sample_modularity(std::span<const ImageText> pool, ModularityMode mode,
                                     const BatchSpec& spec, const PairEmbedder& embedder,
                                     Provider* augmenter) {
    if (mode == ModularityMode::bimodal && augmenter == nullptr)
        throw ArgumentError("bimodal modularity needs a provider for augmentation");
    const auto batches = sample_batches(pool, spec);
    ModularityEstimate est;
    est.mode = mode;
    est.per_batch.assign(batches.size(), 0.0);
    parallel_for(batches.size(), spec.parallel, [&](std::size_t b) {
        NodeSet set;
        switch (mode) {
            case ModularityMode::vision: set = build_vision_nodes(batches[b]); break;
            case ModularityMode::language: set = build_language_nodes(batches[b]); break;
            case ModularityMode::bimodal:
                set = build_bimodal_nodes(batches[b], *augmenter, spec.effective_aug_per_anchor());
                break;
        }
        est.per_batch[b] = node_set_modularity(set, embedder);
    });
    est.mean = mean_of(est.per_batch);
    est.std = population_std(est.per_batch);
    return est;
}

BiasEstimate vision_bias(std::span<const ImageText> pool, const BatchSpec& spec,
                         const PairEmbedder& embedder, std::span<const std::string> mismatch_texts,
                         Provider& provider, const BiasOptions& options) {
    return star_bias(pool, spec, embedder, mismatch_texts, provider, options, ModularityMode::vision);
}

BiasEstimate language_bias(std::span<const ImageText> pool, const BatchSpec& spec,
                           const PairEmbedder& embedder,
                           std::span<const std::string> mismatch_images, Provider& provider,
                           const BiasOptions& options) {
    return star_bias(pool, spec, embedder, mismatch_images, provider, options,
                     ModularityMode::language);
}

double mean_of(std::span<const double> values) {
    if (values.empty()) return 0.0;
    return pairwise_sum(values) / static_cast<double>(values.size());
}

double population_std(std::span<const double> values) {
    if (values.size() < 2) return 0.0;
    const double m = mean_of(values);
    std::vector<double> sq;
    sq.reserve(values.size());
    for (double v : values) sq.push_back((v - m) * (v - m));
    return std::sqrt(pairwise_sum(sq) / static_cast<double>(values.size()));
}

}  // namespace reasonedit
