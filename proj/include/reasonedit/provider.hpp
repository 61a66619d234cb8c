#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "reasonedit/edit_model.hpp"

namespace reasonedit {

enum class Block { vision, merger, language, sentence_encoder };
enum class Pooling { mean, last_token };

std::string_view to_string(Block block) noexcept;
std::string_view to_string(Pooling pooling) noexcept;
Block parse_block(std::string_view name);
Pooling parse_pooling(std::string_view name);

// Which hidden state a pair embedding is read from.
struct LayerSpec {
    Block block = Block::vision;
    std::uint32_t index = 0;  // ignored for sentence_encoder
    Pooling pooling = Pooling::mean;

    bool operator==(const LayerSpec&) const = default;
};

// "vision:3:mean", "sentence_encoder", ...
std::string to_string(const LayerSpec& layer);
LayerSpec parse_layer_spec(std::string_view text);
nlohmann::json to_json(const LayerSpec& layer);
LayerSpec layer_spec_from_json(const nlohmann::json& j);

struct EmbeddingVector {
    std::vector<double> values;
    LayerSpec layer;

    std::size_t dim() const noexcept { return values.size(); }
    bool operator==(const EmbeddingVector&) const = default;
};

// Throws ArgumentError if any entry is NaN or infinite.
void require_finite(const EmbeddingVector& v);

double euclidean_distance(const std::vector<double>& a, const std::vector<double>& b);

struct YesNoScore {
    double nll_yes = 0.0;
    double nll_no = 0.0;
};

struct ImageText {
    std::string image_ref;
    std::string text;

    bool operator==(const ImageText&) const = default;
};

struct ImageSize {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
};

struct BlockInfo {
    std::uint32_t layers = 0;
    std::uint32_t dim = 0;
};

struct Manifest {
    std::string model;
    BlockInfo vision;
    BlockInfo merger;
    BlockInfo language;
    std::uint32_t sentence_dim = 0;
    bool mock = false;
    std::uint64_t seed = 0;

    const BlockInfo& block(Block b) const;
    // Output dimension for a layer; throws ManifestError when the layer
    // is outside the advertised range.
    std::uint32_t dim_for(const LayerSpec& layer) const;
    // Stable content hash of the canonical JSON form.
    std::uint64_t hash() const;
};

nlohmann::json to_json(const Manifest& m);
Manifest manifest_from_json(const nlohmann::json& j);

inline constexpr std::string_view kVerifyTemplate = "Does the image show {statement}?";
inline constexpr std::string_view kErrorChainTemplate =
    "Given the image, is the following statement correct? Statement:'{sentence_subset}'";

// Source of every model-derived quantity. Implementations must be safe to
// call concurrently.
class Provider {
public:
    virtual ~Provider() = default;

    virtual Manifest manifest() = 0;

    virtual EmbeddingVector embed_pair(const std::string& image_ref, const std::optional<BBox>& bbox,
                                       const std::string& text, const LayerSpec& layer) = 0;
    virtual EmbeddingVector embed_text(const std::string& text) = 0;

    // NLLs of the single-token answers "Yes" and "No" for the rendered prompt.
    virtual YesNoScore yesno(const std::string& image_ref, const std::optional<BBox>& bbox,
                             const std::string& statement, const std::string& prompt_template) = 0;

    // Log-likelihood of `sentence` given the (cropped) image under the
    // "Describe this image." prompt. Higher is more likely.
    virtual double loglik(const std::string& image_ref, const BBox& bbox,
                          const std::string& sentence) = 0;

    // Semantics-preserving (image, text) variants.
    virtual std::vector<ImageText> augment(const std::string& image_ref, const std::string& text,
                                           std::uint32_t count) = 0;

    // Pixel dimensions if the provider knows them.
    virtual std::optional<ImageSize> image_size(const std::string& image_ref);
};

// Canonical request keys, shared by the cache and the embedding-dump file mode.
std::string pair_request_key(const std::string& image_ref, const std::optional<BBox>& bbox,
                             const std::string& text, const LayerSpec& layer);
std::string text_request_key(const std::string& text);

}  // namespace reasonedit
