#include "reasonedit/remote_provider.hpp"

#include <cmath>
#include <limits>

#include <httplib.h>

#include "reasonedit/errors.hpp"

namespace reasonedit {

using nlohmann::json;

json nll_to_json(double nll) {
    if (std::isinf(nll)) return json("inf");
    return json(nll);
}

double nll_from_json(const json& j) {
    if (j.is_null()) return std::numeric_limits<double>::infinity();
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf" || s == "Infinity") return std::numeric_limits<double>::infinity();
        throw FormatError("bad NLL value '" + s + "'");
    }
    if (!j.is_number()) throw FormatError("NLL must be a number");
    return j.get<double>();
}

EmbeddingVector vector_from_response(const json& j, const LayerSpec& layer) {
    EmbeddingVector v;
    v.layer = layer;
    try {
        v.values = j.at("vector").get<std::vector<double>>();
        if (auto it = j.find("dim"); it != j.end() && it->get<std::size_t>() != v.values.size())
            throw FormatError("response dim disagrees with vector length");
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed embedding response: ") + e.what());
    }
    require_finite(v);
    return v;
}

RemoteProvider::RemoteProvider(RemoteOptions options) : options_(std::move(options)) {}

json RemoteProvider::call(const std::string& method, const std::string& path, const json* body) {
    std::string last_error;
    for (int attempt = 0; attempt <= options_.retries; ++attempt) {
        httplib::Client client(options_.endpoint);
        client.set_connection_timeout(options_.timeout_seconds, 0);
        client.set_read_timeout(options_.timeout_seconds, 0);
        httplib::Result res = method == "GET"
                                  ? client.Get(path)
                                  : client.Post(path, body->dump(), "application/json");
        if (!res) {
            last_error = "cannot reach provider at " + options_.endpoint + path + ": " +
                         httplib::to_string(res.error());
            continue;
        }
        const int status = res->status;
        if (status == 200) {
            try {
                return json::parse(res->body);
            } catch (const json::parse_error& e) {
                throw FormatError("provider returned malformed body: " + std::string(e.what()));
            }
        }
        std::string detail = res->body;
        try {
            auto j = json::parse(res->body);
            if (j.is_object() && j.contains("detail")) detail = j["detail"].dump();
        } catch (const json::parse_error&) {
        }
        if (status == 404) throw NotFoundError(path + ": " + detail);
        if (status == 422) throw ArgumentError(path + ": " + detail);
        last_error = path + ": HTTP " + std::to_string(status) + " " + detail;
        if (status < 500) break;
    }
    throw TransportError(last_error);
}

Manifest RemoteProvider::manifest() { return manifest_from_json(call("GET", "/v1/manifest", nullptr)); }

EmbeddingVector RemoteProvider::embed_pair(const std::string& image_ref,
                                           const std::optional<BBox>& bbox, const std::string& text,
                                           const LayerSpec& layer) {
    json body{{"image_ref", image_ref}, {"text", text}, {"layer", to_json(layer)}};
    if (bbox) body["bbox"] = to_json(*bbox);
    return vector_from_response(call("POST", "/v1/embed", &body), layer);
}

EmbeddingVector RemoteProvider::embed_text(const std::string& text) {
    if (text.empty()) throw ArgumentError("embed_text requires nonempty text");
    json body{{"text", text}};
    return vector_from_response(call("POST", "/v1/embed_text", &body),
                                LayerSpec{Block::sentence_encoder, 0, Pooling::mean});
}

YesNoScore RemoteProvider::yesno(const std::string& image_ref, const std::optional<BBox>& bbox,
                                 const std::string& statement, const std::string& prompt_template) {
    if (statement.empty()) throw ArgumentError("yesno requires a nonempty statement");
    json body{{"image_ref", image_ref}, {"statement", statement}, {"template", prompt_template}};
    if (bbox) body["bbox"] = to_json(*bbox);
    const json res = call("POST", "/v1/nll_yesno", &body);
    try {
        return YesNoScore{nll_from_json(res.at("nll_yes")), nll_from_json(res.at("nll_no"))};
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed nll_yesno response: ") + e.what());
    }
}

double RemoteProvider::loglik(const std::string& image_ref, const BBox& bbox,
                              const std::string& sentence) {
    if (bbox.w == 0 || bbox.h == 0) throw ArgumentError("bbox has zero area");
    json body{{"image_ref", image_ref}, {"bbox", to_json(bbox)}, {"sentence", sentence}};
    const json res = call("POST", "/v1/loglik", &body);
    try {
        const double v = res.at("loglik").get<double>();
        if (!std::isfinite(v)) throw FormatError("loglik is not finite");
        return v;
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed loglik response: ") + e.what());
    }
}

std::vector<ImageText> RemoteProvider::augment(const std::string& image_ref,
                                               const std::string& text, std::uint32_t count) {
    if (count == 0) throw ArgumentError("augment count must be >= 1");
    json body{{"image_ref", image_ref}, {"text", text}, {"count", count}};
    json res = call("POST", "/v1/augment", &body);
    if (res.is_object() && res.contains("variants")) res = res["variants"];
    std::vector<ImageText> out;
    try {
        for (const auto& v : res)
            out.push_back(ImageText{v.at("image_ref").get<std::string>(), v.at("text").get<std::string>()});
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed augment response: ") + e.what());
    }
    if (out.size() != count) throw FormatError("augment returned the wrong number of variants");
    return out;
}

}  // namespace reasonedit
