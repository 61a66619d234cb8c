#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "reasonedit/provider.hpp"

namespace reasonedit {

struct RemoteOptions {
    std::string endpoint = "http://127.0.0.1:8080";  // scheme://host:port
    int timeout_seconds = 60;
    int retries = 2;  // extra attempts on transport failure
};

// HTTP client for the provider service.
//
//   GET  /v1/manifest
//   POST /v1/embed       {image_ref, bbox?, text, layer:{block,index,pooling}} -> {vector, dim}
//   POST /v1/embed_text  {text}                                              -> {vector, dim}
//   POST /v1/nll_yesno   {image_ref, bbox?, statement, template}             -> {nll_yes, nll_no}
//   POST /v1/loglik      {image_ref, bbox, sentence}                         -> {loglik}
//   POST /v1/augment     {image_ref, text, count}       -> [{image_ref, text}, ...]
//
// 404 maps to NotFoundError, 422 to ArgumentError, everything else
// (including 503 and connection failures) to TransportError. An infinite
// NLL travels as null or the string "inf".
class RemoteProvider final : public Provider {
public:
    explicit RemoteProvider(RemoteOptions options);

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

private:
    nlohmann::json call(const std::string& method, const std::string& path,
                        const nlohmann::json* body);

    RemoteOptions options_;
};

// Wire helpers, shared with test servers.
nlohmann::json nll_to_json(double nll);
double nll_from_json(const nlohmann::json& j);
EmbeddingVector vector_from_response(const nlohmann::json& j, const LayerSpec& layer);

}  // namespace reasonedit
