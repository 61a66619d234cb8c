#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include <json.hpp>

#include "reasonedit/provider.hpp"
#include "reasonedit/topology.hpp"

namespace reasonedit {

// Fitted dual embedding: [E_vision^(layer)(i,t) ; w * E_sentence(t)].
struct DualConfig {
    LayerSpec layer;
    double w = 1.0;
    std::uint32_t vision_dim = 0;
    std::uint32_t text_dim = 0;
    std::uint64_t manifest_hash = 0;

    std::uint32_t dim() const noexcept { return vision_dim + text_dim; }
    // Stable hash over every field; codebooks record it.
    std::uint64_t hash() const;
    void validate() const;
    bool operator==(const DualConfig&) const = default;
};

nlohmann::json to_json(const DualConfig& config);
DualConfig dual_config_from_json(const nlohmann::json& j);

// Builds a DualConfig for `layer` and `w` from the provider's manifest.
DualConfig make_dual_config(Provider& provider, const LayerSpec& layer, double w);

struct LayerScore {
    LayerSpec layer;
    double q_bimodal = 0.0;
};

// argmax of bimodal sample modularity over vision layers; ties go to the
// lowest index.
LayerSpec select_layer(std::span<const LayerScore> sweep);

EmbeddingVector assemble(const EmbeddingVector& vision, const EmbeddingVector& text, double w);

// E_dual for one (image, text) pair, optionally cropped.
EmbeddingVector embed_dual(Provider& provider, const DualConfig& config, const std::string& image_ref,
                           const std::optional<BBox>& bbox, const std::string& text);
PairEmbedder dual_embedder(Provider& provider, const DualConfig& config);

// 21 geometric points from 1/16 to 16.
std::vector<double> default_w_grid();

struct WPoint {
    double w = 0.0;
    double q_vision = 0.0;
    double q_language = 0.0;
    double score = 0.0;  // harmonic mean, -inf when either modularity <= 0
};

struct WSelection {
    double w = 0.0;
    std::vector<WPoint> curve;
};

double harmonic_mean_score(double q_vision, double q_language) noexcept;

// Evaluates the harmonic mean of (Q_vis, Q_lang) on every grid point and
// returns the argmax (first on ties). Throws InfeasibleError when no point
// has both modularities positive.
WSelection select_w(std::span<const double> grid,
                    const std::function<std::pair<double, double>(double)>& evaluator);

}  // namespace reasonedit
