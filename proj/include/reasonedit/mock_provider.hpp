#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "reasonedit/provider.hpp"

namespace reasonedit {

// Per-layer block scales: a layer embeds a pair as [image * g(i); text * h(t)].
struct MockLayerWeights {
    double image = 1.0;
    double text = 1.0;
};

struct MockConfig {
    std::uint64_t seed = 0;
    std::uint32_t image_dim = 16;
    std::uint32_t text_dim = 16;
    std::uint32_t sentence_dim = 16;
    std::vector<MockLayerWeights> vision{4};
    std::vector<MockLayerWeights> merger{1};
    std::vector<MockLayerWeights> language{4};
    // Norm of the noise added per augmented modality.
    double aug_noise = 0.05;
    ImageSize image_size{448, 448};
    // When nonempty, any other image ref is unknown.
    std::set<std::string> known_images;
    // Norm multiplier for g(i) of specific images, used to plant outliers.
    std::map<std::string, double> image_scale;
    double default_p_yes = 0.5;
    // P(yes) keyed by "statement" or "statement@x,y,w,h" (box-specific wins).
    std::map<std::string, double> p_yes;
    // Log-likelihood keyed the same way; unmatched requests get a seeded value.
    std::map<std::string, double> loglik;
};

MockConfig mock_config_from_json(const nlohmann::json& j);

// Rule key for box-specific mock entries.
std::string mock_rule_key(const std::string& statement, const BBox& bbox);

// Deterministic in-process provider. Pair embeddings concatenate seeded
// hash-to-sphere maps of the image and the text, so tests can dial the
// geometry toward either modality. Augmented refs carry a "~aug<k>" suffix
// and embed as the anchor plus noise of norm `aug_noise` per modality.
class MockProvider final : public Provider {
public:
    explicit MockProvider(MockConfig config = {});

    const MockConfig& config() const noexcept { return config_; }

    Manifest manifest() override;
    EmbeddingVector embed_pair(const std::string& image_ref, const std::optional<BBox>& bbox,
                               const std::string& text, const LayerSpec& layer) override;
    EmbeddingVector embed_text(const std::string& text) override;
    YesNoScore yesno(const std::string& image_ref, const std::optional<BBox>& bbox,
                     const std::string& statement, const std::string& prompt_template) override;
    double loglik(const std::string& image_ref, const BBox& bbox,
                  const std::string& sentence) override;
    std::vector<ImageText> augment(const std::string& image_ref, const std::string& text,
                                   std::uint32_t count) override;
    std::optional<ImageSize> image_size(const std::string& image_ref) override;

    // Unit direction the mock assigns to an image (before augmentation noise).
    std::vector<double> image_direction(const std::string& image_ref,
                                        const std::optional<BBox>& bbox) const;
    std::vector<double> text_direction(const std::string& text, std::uint32_t dim) const;

private:
    const MockLayerWeights& weights_for(const LayerSpec& layer) const;
    void check_image(const std::string& image_ref) const;

    MockConfig config_;
};

// Unit vector drawn from a seeded Gaussian; pure function of its arguments.
std::vector<double> hash_to_sphere(std::uint64_t seed, std::string_view tag, std::string_view key,
                                   std::uint32_t dim);

}  // namespace reasonedit
