#include "reasonedit/engine_config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>

#include "reasonedit/caching_provider.hpp"
#include "reasonedit/errors.hpp"
#include "reasonedit/file_provider.hpp"
#include "reasonedit/remote_provider.hpp"

namespace reasonedit {

using nlohmann::json;

std::string_view to_string(ProviderMode mode) noexcept {
    switch (mode) {
        case ProviderMode::mock: return "mock";
        case ProviderMode::remote: return "remote";
        case ProviderMode::file: return "file";
    }
    return "?";
}

ProviderMode parse_provider_mode(std::string_view name) {
    if (name == "mock") return ProviderMode::mock;
    if (name == "remote") return ProviderMode::remote;
    if (name == "file") return ProviderMode::file;
    throw ValidationError("unknown provider mode '" + std::string(name) + "'");
}

EditOptions EngineConfig::edit_options() const {
    EditOptions o;
    o.patch = patch;
    o.radius_variants = radius_variants;
    return o;
}

SequentialConfig EngineConfig::sequential_config() const {
    SequentialConfig c;
    c.eval_every = sequential.eval_every;
    c.batch = sequential.batch;
    c.seed = sequential.seed;
    c.retrieval = retrieval;
    c.prompt = prompt;
    c.edit = edit_options();
    c.match = match;
    return c;
}

void EngineConfig::validate() const {
    batch.validate();
    retrieval.validate();
    if (w_grid.empty()) throw ValidationError("w grid is empty");
    for (double w : w_grid)
        if (!(w > 0.0) || !std::isfinite(w)) throw ValidationError("w grid values must be positive");
    if (patch.scales.empty()) throw ValidationError("patch scales are empty");
    for (auto s : patch.scales)
        if (s == 0) throw ValidationError("patch scales must be positive");
    if (radius_variants == 0) throw ValidationError("radius_variants must be positive");
    if (bias.augmented_variants == 0 || bias.mismatched_variants == 0)
        throw ValidationError("bias variant counts must be positive");
    if (sequential.eval_every == 0 || sequential.batch == 0)
        throw ValidationError("sequential eval_every and batch must be positive");
}

namespace {

template <class T>
void read_if(const json& j, const char* key, T& out) {
    if (auto it = j.find(key); it != j.end() && !it->is_null()) out = it->get<T>();
}

void read_path(const json& j, const char* key, std::optional<std::string>& out) {
    if (auto it = j.find(key); it != j.end() && !it->is_null()) out = it->get<std::string>();
}

ProviderConfig provider_from_json(const json& j) {
    ProviderConfig p;
    if (auto it = j.find("mode"); it != j.end()) p.mode = parse_provider_mode(it->get<std::string>());
    read_if(j, "endpoint", p.endpoint);
    read_if(j, "seed", p.seed);
    read_if(j, "timeout_seconds", p.timeout_seconds);
    read_if(j, "retries", p.retries);
    read_if(j, "dumps", p.dumps);
    read_path(j, "manifest", p.manifest);
    read_path(j, "cache", p.cache);
    if (auto it = j.find("mock"); it != j.end()) p.mock = mock_config_from_json(*it);
    // One seed for the whole provider section.
    p.mock.seed = p.seed;
    return p;
}

}  // namespace

EngineConfig engine_config_from_json(const json& j) {
    if (!j.is_object()) throw ValidationError("config must be a JSON object");
    static const std::set<std::string> known{"provider", "batch",  "bias",       "retrieval",
                                             "merge_enabled", "w_grid", "patch", "radius_variants",
                                             "prompt",   "match",  "sequential", "paths"};
    for (const auto& [key, _] : j.items())
        if (!known.contains(key)) throw ValidationError("unknown config key '" + key + "'");

    EngineConfig c;
    try {
        if (auto it = j.find("provider"); it != j.end()) c.provider = provider_from_json(*it);
        if (auto it = j.find("batch"); it != j.end()) {
            read_if(*it, "n", c.batch.n);
            read_if(*it, "batches", c.batch.batches);
            read_if(*it, "seed", c.batch.seed);
            read_if(*it, "aug_per_anchor", c.batch.aug_per_anchor);
            read_if(*it, "parallel", c.batch.parallel);
        }
        if (auto it = j.find("bias"); it != j.end()) {
            read_if(*it, "augmented", c.bias.augmented_variants);
            read_if(*it, "mismatched", c.bias.mismatched_variants);
        }
        if (auto it = j.find("retrieval"); it != j.end()) {
            read_if(*it, "k", c.retrieval.k);
            read_if(*it, "p", c.retrieval.p);
        }
        read_if(j, "merge_enabled", c.merge_enabled);
        read_if(j, "w_grid", c.w_grid);
        if (auto it = j.find("patch"); it != j.end()) {
            read_if(*it, "scales", c.patch.scales);
            read_if(*it, "threshold", c.patch.verify_threshold);
            read_if(*it, "template", c.patch.verify_template);
            read_if(*it, "parallel", c.patch.parallel);
            if (auto sz = it->find("default_image_size"); sz != it->end())
                c.patch.default_image_size = ImageSize{sz->at("width").get<std::uint32_t>(),
                                                       sz->at("height").get<std::uint32_t>()};
        }
        read_if(j, "radius_variants", c.radius_variants);
        if (auto it = j.find("prompt"); it != j.end()) {
            read_if(*it, "joiner", c.prompt.joiner);
            read_if(*it, "separator", c.prompt.separator);
        }
        if (auto it = j.find("match"); it != j.end()) {
            read_if(*it, "trim", c.match.trim);
            read_if(*it, "casefold", c.match.casefold);
        }
        if (auto it = j.find("sequential"); it != j.end()) {
            read_if(*it, "eval_every", c.sequential.eval_every);
            read_if(*it, "batch", c.sequential.batch);
            read_if(*it, "seed", c.sequential.seed);
        }
        if (auto it = j.find("paths"); it != j.end()) {
            read_path(*it, "pair_pool", c.paths.pair_pool);
            read_path(*it, "mismatch_texts", c.paths.mismatch_texts);
            read_path(*it, "mismatch_images", c.paths.mismatch_images);
            read_path(*it, "dual_config", c.paths.dual_config);
            read_path(*it, "codebook", c.paths.codebook);
            read_path(*it, "output", c.paths.output);
        }
    } catch (const json::exception& e) {
        throw ValidationError(std::string("bad config value: ") + e.what());
    }
    c.validate();
    return c;
}

EngineConfig load_engine_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw NotFoundError("cannot open config '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ValidationError("config '" + path + "' is not valid JSON: " + e.what());
    }
    return engine_config_from_json(j);
}

std::shared_ptr<Provider> make_provider(const ProviderConfig& config) {
    std::shared_ptr<Provider> inner;
    switch (config.mode) {
        case ProviderMode::mock: inner = std::make_shared<MockProvider>(config.mock); break;
        case ProviderMode::remote: {
            RemoteOptions o;
            o.endpoint = config.endpoint;
            if (const char* env = std::getenv(kProviderUrlEnv); env && *env) o.endpoint = env;
            o.timeout_seconds = config.timeout_seconds;
            o.retries = config.retries;
            inner = std::make_shared<RemoteProvider>(o);
            break;
        }
        case ProviderMode::file: {
            if (!config.manifest) throw ValidationError("file provider needs a manifest path");
            std::ifstream in(*config.manifest);
            if (!in) throw NotFoundError("cannot open manifest '" + *config.manifest + "'");
            json j;
            try {
                j = json::parse(in);
            } catch (const json::exception& e) {
                throw ValidationError("manifest is not valid JSON: " + std::string(e.what()));
            }
            inner = std::make_shared<FileProvider>(
                FileProvider::from_files(manifest_from_json(j), config.dumps));
            break;
        }
    }
    return std::make_shared<CachingProvider>(std::move(inner), config.cache);
}

std::vector<ImageText> read_pair_pool(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw NotFoundError("cannot open pair pool '" + path + "'");
    std::vector<ImageText> pool;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = json::parse(line);
            pool.push_back(ImageText{j.at("image_ref").get<std::string>(), j.at("text").get<std::string>()});
        } catch (const json::exception& e) {
            throw ParseError(n, std::string("bad pair record: ") + e.what());
        }
    }
    return pool;
}

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw NotFoundError("cannot open '" + path + "'");
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) out.push_back(line);
    }
    return out;
}

}  // namespace reasonedit
