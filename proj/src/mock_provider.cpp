#include "reasonedit/mock_provider.hpp"

#include <cmath>
#include <limits>

#include "reasonedit/errors.hpp"
#include "reasonedit/rng.hpp"

namespace reasonedit {

using nlohmann::json;

namespace {

constexpr std::string_view kAugMarker = "~aug";

// Splits "base~aug<k>" into (base, k). Returns k = 0 when unaugmented.
std::pair<std::string, std::uint32_t> split_aug(const std::string& ref) {
    const auto pos = ref.rfind(kAugMarker);
    if (pos == std::string::npos) return {ref, 0};
    const std::string digits = ref.substr(pos + kAugMarker.size());
    if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos)
        return {ref, 0};
    return {ref.substr(0, pos), static_cast<std::uint32_t>(std::stoul(digits))};
}

std::string root_of(std::string ref) {
    for (;;) {
        auto [base, k] = split_aug(ref);
        if (k == 0) return ref;
        ref = std::move(base);
    }
}

void add_scaled(std::vector<double>& acc, const std::vector<double>& v, double s) {
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += s * v[i];
}

// Direction for `ref`, following "~aug<k>" suffixes back to their anchor and
// adding a fixed-norm noise vector per augmentation level.
template <class BaseFn>
std::vector<double> with_aug_noise(std::uint64_t seed, std::string_view tag, const std::string& ref,
                                   std::uint32_t dim, double noise, BaseFn base_fn) {
    auto [base, k] = split_aug(ref);
    if (k == 0) return base_fn(ref);
    auto v = with_aug_noise(seed, tag, base, dim, noise, base_fn);
    const auto u = hash_to_sphere(seed, std::string(tag) + "-noise", ref, dim);
    add_scaled(v, u, noise);
    return v;
}

double p_to_nll(double p) {
    if (p <= 0.0) return std::numeric_limits<double>::infinity();
    return -std::log(p);
}

}  // namespace

std::vector<double> hash_to_sphere(std::uint64_t seed, std::string_view tag, std::string_view key,
                                   std::uint32_t dim) {
    std::uint64_t h = fnv1a64(tag);
    h = fnv1a64(std::string_view("\x1f"), h ^ seed);
    h = fnv1a64(key, h);
    h = fnv1a64(std::to_string(dim), h);
    Rng rng(h);
    std::vector<double> v(dim);
    double norm2 = 0.0;
    while (norm2 == 0.0) {
        norm2 = 0.0;
        for (auto& x : v) {
            x = rng.normal();
            norm2 += x * x;
        }
    }
    const double inv = 1.0 / std::sqrt(norm2);
    for (auto& x : v) x *= inv;
    return v;
}

std::string mock_rule_key(const std::string& statement, const BBox& b) {
    return statement + "@" + std::to_string(b.x) + "," + std::to_string(b.y) + "," +
           std::to_string(b.w) + "," + std::to_string(b.h);
}

MockConfig mock_config_from_json(const json& j) {
    MockConfig c;
    c.seed = j.value("seed", c.seed);
    c.image_dim = j.value("image_dim", c.image_dim);
    c.text_dim = j.value("text_dim", c.text_dim);
    c.sentence_dim = j.value("sentence_dim", c.sentence_dim);
    auto weights = [&j](const char* key, std::vector<MockLayerWeights>& out) {
        auto it = j.find(key);
        if (it == j.end()) return;
        out.clear();
        for (const auto& w : *it)
            out.push_back(MockLayerWeights{w.value("image", 1.0), w.value("text", 1.0)});
    };
    weights("vision", c.vision);
    weights("merger", c.merger);
    weights("language", c.language);
    c.aug_noise = j.value("aug_noise", c.aug_noise);
    if (auto it = j.find("image_size"); it != j.end())
        c.image_size = ImageSize{it->at("width").get<std::uint32_t>(),
                                 it->at("height").get<std::uint32_t>()};
    if (auto it = j.find("known_images"); it != j.end())
        c.known_images = it->get<std::set<std::string>>();
    if (auto it = j.find("image_scale"); it != j.end())
        c.image_scale = it->get<std::map<std::string, double>>();
    c.default_p_yes = j.value("default_p_yes", c.default_p_yes);
    if (auto it = j.find("p_yes"); it != j.end()) c.p_yes = it->get<std::map<std::string, double>>();
    if (auto it = j.find("loglik"); it != j.end())
        c.loglik = it->get<std::map<std::string, double>>();
    return c;
}

MockProvider::MockProvider(MockConfig config) : config_(std::move(config)) {
    if (config_.image_dim == 0 || config_.text_dim == 0 || config_.sentence_dim == 0)
        throw ArgumentError("mock dims must be positive");
    if (config_.default_p_yes < 0.0 || config_.default_p_yes > 1.0)
        throw ArgumentError("mock default_p_yes must lie in [0,1]");
}

Manifest MockProvider::manifest() {
    const std::uint32_t dim = config_.image_dim + config_.text_dim;
    Manifest m;
    m.model = "mock";
    m.vision = {static_cast<std::uint32_t>(config_.vision.size()), dim};
    m.merger = {static_cast<std::uint32_t>(config_.merger.size()), dim};
    m.language = {static_cast<std::uint32_t>(config_.language.size()), dim};
    m.sentence_dim = config_.sentence_dim;
    m.mock = true;
    m.seed = config_.seed;
    return m;
}

const MockLayerWeights& MockProvider::weights_for(const LayerSpec& layer) const {
    const std::vector<MockLayerWeights>* block = nullptr;
    switch (layer.block) {
        case Block::vision: block = &config_.vision; break;
        case Block::merger: block = &config_.merger; break;
        case Block::language: block = &config_.language; break;
        case Block::sentence_encoder:
            throw ManifestError("pair embeddings are not served from the sentence encoder");
    }
    if (layer.index >= block->size())
        throw ManifestError("layer " + to_string(layer) + " outside mock manifest");
    return (*block)[layer.index];
}

void MockProvider::check_image(const std::string& image_ref) const {
    if (image_ref.empty()) throw NotFoundError("empty image ref");
    if (!config_.known_images.empty() && !config_.known_images.contains(root_of(image_ref)))
        throw NotFoundError("unknown image '" + image_ref + "'");
}

std::vector<double> MockProvider::image_direction(const std::string& image_ref,
                                                  const std::optional<BBox>& bbox) const {
    const std::uint32_t dim = config_.image_dim;
    auto base = [&](const std::string& ref) {
        auto v = hash_to_sphere(config_.seed, "image", ref, dim);
        const bool full = !bbox || (bbox->x == 0 && bbox->y == 0 &&
                                    bbox->w == config_.image_size.width &&
                                    bbox->h == config_.image_size.height);
        if (!full) {
            // A patch shares half its direction with the whole image.
            add_scaled(v, hash_to_sphere(config_.seed, "patch", mock_rule_key(ref, *bbox), dim), 1.0);
            double n2 = 0.0;
            for (double x : v) n2 += x * x;
            const double inv = 1.0 / std::sqrt(n2);
            for (auto& x : v) x *= inv;
        }
        return v;
    };
    auto v = with_aug_noise(config_.seed, "image", image_ref, dim, config_.aug_noise, base);
    if (auto it = config_.image_scale.find(root_of(image_ref)); it != config_.image_scale.end())
        for (auto& x : v) x *= it->second;
    return v;
}

std::vector<double> MockProvider::text_direction(const std::string& text, std::uint32_t dim) const {
    return with_aug_noise(config_.seed, "text", text, dim, config_.aug_noise,
                          [&](const std::string& t) { return hash_to_sphere(config_.seed, "text", t, dim); });
}

EmbeddingVector MockProvider::embed_pair(const std::string& image_ref,
                                         const std::optional<BBox>& bbox, const std::string& text,
                                         const LayerSpec& layer) {
    const MockLayerWeights& w = weights_for(layer);
    check_image(image_ref);
    if (bbox && (bbox->w == 0 || bbox->h == 0)) throw ArgumentError("bbox has zero area");
    EmbeddingVector out;
    out.layer = layer;
    out.values.reserve(config_.image_dim + config_.text_dim);
    for (double x : image_direction(image_ref, bbox)) out.values.push_back(w.image * x);
    for (double x : text_direction(text, config_.text_dim)) out.values.push_back(w.text * x);
    return out;
}

EmbeddingVector MockProvider::embed_text(const std::string& text) {
    if (text.empty()) throw ArgumentError("embed_text requires nonempty text");
    EmbeddingVector out;
    out.layer = LayerSpec{Block::sentence_encoder, 0, Pooling::mean};
    out.values = text_direction(text, config_.sentence_dim);
    return out;
}

YesNoScore MockProvider::yesno(const std::string& image_ref, const std::optional<BBox>& bbox,
                               const std::string& statement, const std::string&) {
    if (statement.empty()) throw ArgumentError("yesno requires a nonempty statement");
    check_image(image_ref);
    double p = config_.default_p_yes;
    if (auto it = config_.p_yes.find(statement); it != config_.p_yes.end()) p = it->second;
    if (bbox) {
        if (auto it = config_.p_yes.find(mock_rule_key(statement, *bbox)); it != config_.p_yes.end())
            p = it->second;
    }
    return YesNoScore{p_to_nll(p), p_to_nll(1.0 - p)};
}

double MockProvider::loglik(const std::string& image_ref, const BBox& bbox,
                            const std::string& sentence) {
    if (bbox.w == 0 || bbox.h == 0) throw ArgumentError("bbox has zero area");
    check_image(image_ref);
    if (auto it = config_.loglik.find(mock_rule_key(sentence, bbox)); it != config_.loglik.end())
        return it->second;
    if (auto it = config_.loglik.find(sentence); it != config_.loglik.end()) return it->second;
    Rng rng(fnv1a64(mock_rule_key(image_ref + "\x1f" + sentence, bbox), config_.seed));
    return -(1.0 + 49.0 * rng.uniform());
}

std::vector<ImageText> MockProvider::augment(const std::string& image_ref, const std::string& text,
                                             std::uint32_t count) {
    if (count == 0) throw ArgumentError("augment count must be >= 1");
    check_image(image_ref);
    std::vector<ImageText> out;
    out.reserve(count);
    for (std::uint32_t k = 1; k <= count; ++k) {
        const std::string suffix = std::string(kAugMarker) + std::to_string(k);
        out.push_back(ImageText{image_ref + suffix, text + suffix});
    }
    return out;
}

std::optional<ImageSize> MockProvider::image_size(const std::string& image_ref) {
    check_image(image_ref);
    return config_.image_size;
}

}  // namespace reasonedit
