#pragma once

#include <cstdint>
#include <functional>
#include <future>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>

#include <json.hpp>

#include "reasonedit/provider.hpp"

namespace reasonedit {

// Memoizes another provider. Results are keyed by a content hash of the
// request (plus the inner manifest hash) and, when a cache file is given,
// appended to it as JSON lines and reloaded on construction. Concurrent
// identical requests share one upstream call.
class CachingProvider final : public Provider {
public:
    explicit CachingProvider(std::shared_ptr<Provider> inner,
                             std::optional<std::string> cache_file = std::nullopt);

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

    std::size_t hits() const;
    std::size_t misses() const;
    std::size_t size() const;

private:
    nlohmann::json fetch(const std::string& request, const std::function<nlohmann::json()>& compute);

    std::shared_ptr<Provider> inner_;
    std::optional<std::string> cache_file_;
    std::uint64_t manifest_hash_ = 0;
    std::optional<Manifest> manifest_;

    mutable std::mutex mutex_;
    std::unordered_map<std::string, nlohmann::json> cache_;
    std::unordered_map<std::string, std::shared_future<nlohmann::json>> in_flight_;
    std::size_t hits_ = 0;
    std::size_t misses_ = 0;
};

}  // namespace reasonedit
