#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "reasonedit/edit_model.hpp"
#include "reasonedit/mock_provider.hpp"
#include "reasonedit/provider.hpp"
#include "reasonedit/rng.hpp"
#include "reasonedit/similarity_network.hpp"

namespace testing {

// Straight transcription of the modularity double sum, no shortcuts.
inline double brute_modularity(const std::vector<std::vector<double>>& a,
                               const std::vector<std::size_t>& g) {
    const std::size_t n = a.size();
    std::vector<double> strength(n, 0.0);
    double two_m = 0.0;
    for (std::size_t u = 0; u < n; ++u)
        for (std::size_t v = 0; v < n; ++v) {
            strength[u] += a[u][v];
            two_m += a[u][v];
        }
    double q = 0.0;
    for (std::size_t u = 0; u < n; ++u)
        for (std::size_t v = 0; v < n; ++v)
            if (g[u] == g[v]) q += a[u][v] - strength[u] * strength[v] / two_m;
    return q / two_m;
}

inline std::vector<std::vector<double>> random_points(reasonedit::Rng& rng, std::size_t n,
                                                      std::size_t dim, double scale = 1.0) {
    std::vector<std::vector<double>> out(n, std::vector<double>(dim));
    for (auto& p : out)
        for (auto& x : p) x = scale * rng.normal();
    return out;
}

inline std::vector<std::vector<double>> dense(const reasonedit::SimilarityNetwork& net) {
    std::vector<std::vector<double>> a(net.size(), std::vector<double>(net.size()));
    for (std::size_t u = 0; u < net.size(); ++u)
        for (std::size_t v = 0; v < net.size(); ++v) a[u][v] = net.at(u, v);
    return a;
}

inline reasonedit::Edit make_edit(const std::string& id, const std::string& image,
                                  std::vector<std::string> reasoning = {}) {
    reasonedit::Edit e;
    e.edit_id = id;
    e.image_ref = image;
    e.question = "What is shown in " + image + "?";
    e.answer = "answer " + id;
    e.reasoning = std::move(reasoning);
    return e;
}

inline std::vector<reasonedit::ImageText> pair_pool(std::size_t n, const std::string& prefix = "") {
    std::vector<reasonedit::ImageText> pool;
    for (std::size_t i = 0; i < n; ++i)
        pool.push_back({prefix + "img" + std::to_string(i), prefix + "text " + std::to_string(i)});
    return pool;
}

// Forwards to a MockProvider; tests override single calls to inject faults.
class DelegatingProvider : public reasonedit::Provider {
public:
    explicit DelegatingProvider(reasonedit::MockConfig config = {}) : inner(std::move(config)) {}

    reasonedit::Manifest manifest() override { return inner.manifest(); }
    reasonedit::EmbeddingVector embed_pair(const std::string& image_ref,
                                           const std::optional<reasonedit::BBox>& bbox,
                                           const std::string& text,
                                           const reasonedit::LayerSpec& layer) override {
        return inner.embed_pair(image_ref, bbox, text, layer);
    }
    reasonedit::EmbeddingVector embed_text(const std::string& text) override {
        return inner.embed_text(text);
    }
    reasonedit::YesNoScore yesno(const std::string& image_ref,
                                 const std::optional<reasonedit::BBox>& bbox,
                                 const std::string& statement,
                                 const std::string& prompt_template) override {
        return inner.yesno(image_ref, bbox, statement, prompt_template);
    }
    double loglik(const std::string& image_ref, const reasonedit::BBox& bbox,
                  const std::string& sentence) override {
        return inner.loglik(image_ref, bbox, sentence);
    }
    std::vector<reasonedit::ImageText> augment(const std::string& image_ref, const std::string& text,
                                               std::uint32_t count) override {
        return inner.augment(image_ref, text, count);
    }
    std::optional<reasonedit::ImageSize> image_size(const std::string& image_ref) override {
        return inner.image_size(image_ref);
    }

    reasonedit::MockProvider inner;
};

}  // namespace testing
