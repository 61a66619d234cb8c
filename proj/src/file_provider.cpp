#include "reasonedit/file_provider.hpp"

#include "reasonedit/binary_io.hpp"
#include "reasonedit/errors.hpp"

namespace reasonedit {

FileProvider::FileProvider(Manifest manifest, const std::vector<EmbeddingDump>& dumps)
    : manifest_(std::move(manifest)) {
    for (const auto& dump : dumps)
        for (const auto& rec : dump.records) vectors_[rec.id] = rec.values;
}

FileProvider FileProvider::from_files(Manifest manifest, const std::vector<std::string>& paths) {
    std::vector<EmbeddingDump> dumps;
    dumps.reserve(paths.size());
    for (const auto& p : paths) dumps.push_back(decode_embedding_dump(read_file_bytes(p)));
    return FileProvider(std::move(manifest), dumps);
}

EmbeddingVector FileProvider::lookup(const std::string& key, const LayerSpec& layer,
                                     std::uint32_t dim) const {
    auto it = vectors_.find(key);
    if (it == vectors_.end()) throw NotFoundError("no precomputed embedding for " + key);
    if (it->second.size() != dim)
        throw ManifestError("precomputed embedding for " + key + " has dim " +
                            std::to_string(it->second.size()) + ", manifest says " +
                            std::to_string(dim));
    EmbeddingVector v{std::vector<double>(it->second.begin(), it->second.end()), layer};
    require_finite(v);
    return v;
}

EmbeddingVector FileProvider::embed_pair(const std::string& image_ref,
                                         const std::optional<BBox>& bbox, const std::string& text,
                                         const LayerSpec& layer) {
    const std::uint32_t dim = manifest_.dim_for(layer);
    return lookup(pair_request_key(image_ref, bbox, text, layer), layer, dim);
}

EmbeddingVector FileProvider::embed_text(const std::string& text) {
    if (text.empty()) throw ArgumentError("embed_text requires nonempty text");
    return lookup(text_request_key(text), LayerSpec{Block::sentence_encoder, 0, Pooling::mean},
                  manifest_.sentence_dim);
}

YesNoScore FileProvider::yesno(const std::string&, const std::optional<BBox>&, const std::string&,
                               const std::string&) {
    throw UnsupportedError("file provider cannot score yes/no prompts");
}

double FileProvider::loglik(const std::string&, const BBox&, const std::string&) {
    throw UnsupportedError("file provider cannot compute log-likelihoods");
}

std::vector<ImageText> FileProvider::augment(const std::string&, const std::string&, std::uint32_t) {
    throw UnsupportedError("file provider cannot augment");
}

}  // namespace reasonedit
