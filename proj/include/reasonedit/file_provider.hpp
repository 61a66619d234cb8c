#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "reasonedit/embedding_dump.hpp"
#include "reasonedit/provider.hpp"

namespace reasonedit {

// Serves embeddings from precomputed dumps. Record ids are the canonical
// request keys (pair_request_key / text_request_key). Likelihood and
// augmentation requests raise UnsupportedError.
class FileProvider final : public Provider {
public:
    FileProvider(Manifest manifest, const std::vector<EmbeddingDump>& dumps);
    // Loads each path as an embedding dump.
    static FileProvider from_files(Manifest manifest, const std::vector<std::string>& paths);

    Manifest manifest() override { return manifest_; }
    EmbeddingVector embed_pair(const std::string& image_ref, const std::optional<BBox>& bbox,
                               const std::string& text, const LayerSpec& layer) override;
    EmbeddingVector embed_text(const std::string& text) override;
    YesNoScore yesno(const std::string& image_ref, const std::optional<BBox>& bbox,
                     const std::string& statement, const std::string& prompt_template) override;
    double loglik(const std::string& image_ref, const BBox& bbox,
                  const std::string& sentence) override;
    std::vector<ImageText> augment(const std::string& image_ref, const std::string& text,
                                   std::uint32_t count) override;

    std::size_t size() const noexcept { return vectors_.size(); }

private:
    EmbeddingVector lookup(const std::string& key, const LayerSpec& layer, std::uint32_t dim) const;

    Manifest manifest_;
    std::unordered_map<std::string, std::vector<float>> vectors_;
};

}  // namespace reasonedit
