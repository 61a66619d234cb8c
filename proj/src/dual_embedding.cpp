#include "reasonedit/dual_embedding.hpp"

#include <cmath>
#include <limits>

#include "reasonedit/errors.hpp"
#include "reasonedit/rng.hpp"

namespace reasonedit {

using nlohmann::json;

std::uint64_t DualConfig::hash() const {
    json j = to_json(*this);
    j.erase("config_hash");
    return fnv1a64(j.dump());
}

void DualConfig::validate() const {
    if (!(w > 0.0) || !std::isfinite(w)) throw ArgumentError("dual weight w must be positive");
    if (layer.block != Block::vision) throw ArgumentError("dual embedding needs a vision-block layer");
    if (vision_dim == 0 || text_dim == 0) throw ArgumentError("dual embedding dims must be positive");
}

json to_json(const DualConfig& c) {
    json j{{"layer", to_json(c.layer)},
           {"w", c.w},
           {"vision_dim", c.vision_dim},
           {"text_dim", c.text_dim},
           {"manifest_hash", std::to_string(c.manifest_hash)}};
    j["config_hash"] = std::to_string(fnv1a64(j.dump()));
    return j;
}

DualConfig dual_config_from_json(const json& j) {
    DualConfig c;
    try {
        c.layer = layer_spec_from_json(j.at("layer"));
        c.w = j.at("w").get<double>();
        c.vision_dim = j.at("vision_dim").get<std::uint32_t>();
        c.text_dim = j.at("text_dim").get<std::uint32_t>();
        c.manifest_hash = std::stoull(j.at("manifest_hash").get<std::string>());
    } catch (const std::exception& e) {
        throw FormatError(std::string("malformed dual config: ") + e.what());
    }
    c.validate();
    if (auto it = j.find("config_hash"); it != j.end() && it->get<std::string>() != std::to_string(c.hash()))
        throw FormatError("dual config hash does not match its contents");
    return c;
}

DualConfig make_dual_config(Provider& provider, const LayerSpec& layer, double w) {
    const Manifest m = provider.manifest();
    DualConfig c;
    c.layer = layer;
    c.w = w;
    c.vision_dim = m.dim_for(layer);
    c.text_dim = m.sentence_dim;
    c.manifest_hash = m.hash();
    c.validate();
    return c;
}

LayerSpec select_layer(std::span<const LayerScore> sweep) {
    if (sweep.empty()) throw ArgumentError("layer sweep is empty");
    const LayerScore* best = nullptr;
    for (const auto& s : sweep) {
        if (s.layer.block != Block::vision)
            throw ArgumentError("layer selection only considers vision-block layers, got " +
                                to_string(s.layer));
        if (best == nullptr || s.q_bimodal > best->q_bimodal ||
            (s.q_bimodal == best->q_bimodal && s.layer.index < best->layer.index))
            best = &s;
    }
    return best->layer;
}

EmbeddingVector assemble(const EmbeddingVector& vision, const EmbeddingVector& text, double w) {
    if (!(w > 0.0)) throw ArgumentError("text weight w must be positive");
    EmbeddingVector out;
    out.layer = vision.layer;
    out.values.reserve(vision.dim() + text.dim());
    out.values.insert(out.values.end(), vision.values.begin(), vision.values.end());
    for (double x : text.values) out.values.push_back(w * x);
    return out;
}

EmbeddingVector embed_dual(Provider& provider, const DualConfig& config, const std::string& image_ref,
                           const std::optional<BBox>& bbox, const std::string& text) {
    auto vision = provider.embed_pair(image_ref, bbox, text, config.layer);
    auto sentence = provider.embed_text(text);
    if (vision.dim() != config.vision_dim || sentence.dim() != config.text_dim)
        throw CompatibilityError("provider dims differ from the fitted dual config");
    auto out = assemble(vision, sentence, config.w);
    require_finite(out);
    return out;
}

PairEmbedder dual_embedder(Provider& provider, const DualConfig& config) {
    return [&provider, config](const ImageText& p) {
        return embed_dual(provider, config, p.image_ref, std::nullopt, p.text);
    };
}

std::vector<double> default_w_grid() {
    std::vector<double> grid;
    grid.reserve(21);
    for (int k = 0; k <= 20; ++k) grid.push_back(std::exp2(-4.0 + 8.0 * k / 20.0));
    return grid;
}

double harmonic_mean_score(double q_vision, double q_language) noexcept {
    if (!(q_vision > 0.0) || !(q_language > 0.0)) return -std::numeric_limits<double>::infinity();
    return 2.0 * q_vision * q_language / (q_vision + q_language);
}

WSelection select_w(std::span<const double> grid,
                    const std::function<std::pair<double, double>(double)>& evaluator) {
    if (grid.empty()) throw ArgumentError("w grid is empty");
    for (double w : grid)
        if (!(w > 0.0)) throw ArgumentError("w grid values must be positive");
    WSelection sel;
    const WPoint* best = nullptr;
    sel.curve.reserve(grid.size());
    for (double w : grid) {
        const auto [qv, ql] = evaluator(w);
        sel.curve.push_back(WPoint{w, qv, ql, harmonic_mean_score(qv, ql)});
    }
    for (const auto& p : sel.curve)
        if (std::isfinite(p.score) && (best == nullptr || p.score > best->score)) best = &p;
    if (best == nullptr)
        throw InfeasibleError("no w on the grid gives positive vision and language modularity");
    sel.w = best->w;
    return sel;
}

}  // namespace reasonedit
