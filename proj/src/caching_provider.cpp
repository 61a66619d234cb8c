#include "reasonedit/caching_provider.hpp"

#include <cstdio>
#include <fstream>

#include "reasonedit/errors.hpp"
#include "reasonedit/remote_provider.hpp"
#include "reasonedit/rng.hpp"

namespace reasonedit {

using nlohmann::json;

namespace {

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace

CachingProvider::CachingProvider(std::shared_ptr<Provider> inner,
                                 std::optional<std::string> cache_file)
    : inner_(std::move(inner)), cache_file_(std::move(cache_file)) {
    if (!inner_) throw ArgumentError("caching provider needs an inner provider");
    manifest_ = inner_->manifest();
    manifest_hash_ = manifest_->hash();
    if (!cache_file_) return;
    std::ifstream in(*cache_file_);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            auto j = json::parse(line);
            cache_.emplace(j.at("k").get<std::string>(), std::move(j.at("v")));
        } catch (const json::exception&) {
            // A torn final line from an interrupted run; later lines rewrite it.
        }
    }
}

json CachingProvider::fetch(const std::string& request, const std::function<json()>& compute) {
    const std::string key = hex64(fnv1a64(request, manifest_hash_));
    std::promise<json> promise;
    {
        std::unique_lock lock(mutex_);
        if (auto it = cache_.find(key); it != cache_.end()) {
            ++hits_;
            return it->second;
        }
        if (auto it = in_flight_.find(key); it != in_flight_.end()) {
            auto fut = it->second;
            ++hits_;
            lock.unlock();
            return fut.get();
        }
        ++misses_;
        in_flight_.emplace(key, promise.get_future().share());
    }
    json value;
    try {
        value = compute();
    } catch (...) {
        std::lock_guard lock(mutex_);
        promise.set_exception(std::current_exception());
        in_flight_.erase(key);
        throw;
    }
    std::lock_guard lock(mutex_);
    cache_.emplace(key, value);
    if (cache_file_) {
        std::ofstream out(*cache_file_, std::ios::app);
        out << json{{"k", key}, {"v", value}}.dump() << '\n';
    }
    promise.set_value(value);
    in_flight_.erase(key);
    return value;
}

Manifest CachingProvider::manifest() { return *manifest_; }

EmbeddingVector CachingProvider::embed_pair(const std::string& image_ref,
                                            const std::optional<BBox>& bbox,
                                            const std::string& text, const LayerSpec& layer) {
    const json v = fetch(pair_request_key(image_ref, bbox, text, layer), [&] {
        return json(inner_->embed_pair(image_ref, bbox, text, layer).values);
    });
    EmbeddingVector out{v.get<std::vector<double>>(), layer};
    require_finite(out);
    return out;
}

EmbeddingVector CachingProvider::embed_text(const std::string& text) {
    if (text.empty()) throw ArgumentError("embed_text requires nonempty text");
    const json v = fetch(text_request_key(text), [&] { return json(inner_->embed_text(text).values); });
    EmbeddingVector out{v.get<std::vector<double>>(), LayerSpec{Block::sentence_encoder, 0, Pooling::mean}};
    require_finite(out);
    return out;
}

YesNoScore CachingProvider::yesno(const std::string& image_ref, const std::optional<BBox>& bbox,
                                  const std::string& statement,
                                  const std::string& prompt_template) {
    const std::string request =
        json::array({"yesno", image_ref, bbox ? to_json(*bbox) : json(nullptr), statement,
                     prompt_template})
            .dump();
    const json v = fetch(request, [&] {
        const auto s = inner_->yesno(image_ref, bbox, statement, prompt_template);
        return json{{"nll_yes", nll_to_json(s.nll_yes)}, {"nll_no", nll_to_json(s.nll_no)}};
    });
    return YesNoScore{nll_from_json(v.at("nll_yes")), nll_from_json(v.at("nll_no"))};
}

double CachingProvider::loglik(const std::string& image_ref, const BBox& bbox,
                               const std::string& sentence) {
    const std::string request = json::array({"loglik", image_ref, to_json(bbox), sentence}).dump();
    return fetch(request, [&] { return json(inner_->loglik(image_ref, bbox, sentence)); })
        .get<double>();
}

std::vector<ImageText> CachingProvider::augment(const std::string& image_ref,
                                                const std::string& text, std::uint32_t count) {
    const std::string request = json::array({"augment", image_ref, text, count}).dump();
    const json v = fetch(request, [&] {
        json arr = json::array();
        for (const auto& it : inner_->augment(image_ref, text, count))
            arr.push_back({{"image_ref", it.image_ref}, {"text", it.text}});
        return arr;
    });
    std::vector<ImageText> out;
    for (const auto& it : v)
        out.push_back(ImageText{it.at("image_ref").get<std::string>(), it.at("text").get<std::string>()});
    return out;
}

std::optional<ImageSize> CachingProvider::image_size(const std::string& image_ref) {
    return inner_->image_size(image_ref);
}

std::size_t CachingProvider::hits() const {
    std::lock_guard lock(mutex_);
    return hits_;
}

std::size_t CachingProvider::misses() const {
    std::lock_guard lock(mutex_);
    return misses_;
}

std::size_t CachingProvider::size() const {
    std::lock_guard lock(mutex_);
    return cache_.size();
}

}  // namespace reasonedit
