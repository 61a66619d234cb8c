#include "reasonedit/provider.hpp"

#include <cmath>

#include "reasonedit/errors.hpp"
#include "reasonedit/rng.hpp"

namespace reasonedit {

using nlohmann::json;

std::string_view to_string(Block block) noexcept {
    switch (block) {
        case Block::vision: return "vision";
        case Block::merger: return "merger";
        case Block::language: return "language";
        case Block::sentence_encoder: return "sentence_encoder";
    }
    return "unknown";
}

std::string_view to_string(Pooling pooling) noexcept {
    return pooling == Pooling::mean ? "mean" : "last_token";
}

Block parse_block(std::string_view name) {
    for (Block b : {Block::vision, Block::merger, Block::language, Block::sentence_encoder})
        if (to_string(b) == name) return b;
    throw ArgumentError("unknown block '" + std::string(name) + "'");
}

Pooling parse_pooling(std::string_view name) {
    if (name == "mean") return Pooling::mean;
    if (name == "last_token") return Pooling::last_token;
    throw ArgumentError("unknown pooling '" + std::string(name) + "'");
}

std::string to_string(const LayerSpec& layer) {
    if (layer.block == Block::sentence_encoder) return "sentence_encoder";
    return std::string(to_string(layer.block)) + ":" + std::to_string(layer.index) + ":" +
           std::string(to_string(layer.pooling));
}

LayerSpec parse_layer_spec(std::string_view text) {
    LayerSpec spec;
    const auto first = text.find(':');
    spec.block = parse_block(text.substr(0, first));
    if (spec.block == Block::sentence_encoder) return spec;
    if (first == std::string_view::npos)
        throw ArgumentError("layer spec '" + std::string(text) + "' needs an index");
    const auto second = text.find(':', first + 1);
    const std::string index(text.substr(first + 1, second == std::string_view::npos
                                                        ? std::string_view::npos
                                                        : second - first - 1));
    try {
        std::size_t used = 0;
        const long v = std::stol(index, &used);
        if (used != index.size() || v < 0) throw std::invalid_argument(index);
        spec.index = static_cast<std::uint32_t>(v);
    } catch (const std::logic_error&) {
        throw ArgumentError("bad layer index in '" + std::string(text) + "'");
    }
    if (second != std::string_view::npos) spec.pooling = parse_pooling(text.substr(second + 1));
    return spec;
}

json to_json(const LayerSpec& layer) {
    return json{{"block", std::string(to_string(layer.block))},
                {"index", layer.index},
                {"pooling", std::string(to_string(layer.pooling))}};
}

LayerSpec layer_spec_from_json(const json& j) {
    LayerSpec spec;
    spec.block = parse_block(j.at("block").get<std::string>());
    spec.index = j.value("index", 0u);
    spec.pooling = parse_pooling(j.value("pooling", std::string("mean")));
    return spec;
}

void require_finite(const EmbeddingVector& v) {
    for (double x : v.values)
        if (!std::isfinite(x)) throw ArgumentError("embedding contains non-finite entries");
}

double euclidean_distance(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size())
        throw ArgumentError("dimension mismatch: " + std::to_string(a.size()) + " vs " +
                            std::to_string(b.size()));
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        sum += d * d;
    }
    return std::sqrt(sum);
}

const BlockInfo& Manifest::block(Block b) const {
    switch (b) {
        case Block::vision: return vision;
        case Block::merger: return merger;
        case Block::language: return language;
        case Block::sentence_encoder: break;
    }
    throw ManifestError("sentence encoder has no layered block");
}

std::uint32_t Manifest::dim_for(const LayerSpec& layer) const {
    if (layer.block == Block::sentence_encoder) return sentence_dim;
    const BlockInfo& info = block(layer.block);
    if (layer.index >= info.layers)
        throw ManifestError("layer " + to_string(layer) + " outside manifest (" +
                            std::to_string(info.layers) + " " +
                            std::string(to_string(layer.block)) + " layers)");
    return info.dim;
}

std::uint64_t Manifest::hash() const { return fnv1a64(to_json(*this).dump()); }

json to_json(const Manifest& m) {
    auto block = [](const BlockInfo& b) { return json{{"layers", b.layers}, {"dim", b.dim}}; };
    return json{{"model", m.model},
                {"blocks",
                 {{"vision", block(m.vision)},
                  {"merger", block(m.merger)},
                  {"language", block(m.language)}}},
                {"sentence_encoder_dim", m.sentence_dim},
                {"mock", m.mock},
                {"seed", m.seed}};
}

Manifest manifest_from_json(const json& j) {
    auto block = [](const json& b) {
        return BlockInfo{b.at("layers").get<std::uint32_t>(), b.at("dim").get<std::uint32_t>()};
    };
    Manifest m;
    try {
        m.model = j.at("model").get<std::string>();
        const json& blocks = j.at("blocks");
        m.vision = block(blocks.at("vision"));
        m.merger = block(blocks.at("merger"));
        m.language = block(blocks.at("language"));
        m.sentence_dim = j.at("sentence_encoder_dim").get<std::uint32_t>();
        m.mock = j.value("mock", false);
        m.seed = j.value("seed", std::uint64_t{0});
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed manifest: ") + e.what());
    }
    return m;
}

std::optional<ImageSize> Provider::image_size(const std::string&) { return std::nullopt; }

std::string pair_request_key(const std::string& image_ref, const std::optional<BBox>& bbox,
                             const std::string& text, const LayerSpec& layer) {
    return json::array({"pair", image_ref, bbox ? to_json(*bbox) : json(nullptr), text,
                        to_string(layer)})
        .dump();
}

std::string text_request_key(const std::string& text) {
    return json::array({"text", text}).dump();
}

}  // namespace reasonedit
