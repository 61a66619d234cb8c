#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "reasonedit/eval_harness.hpp"
#include "reasonedit/mock_provider.hpp"
#include "reasonedit/patchify.hpp"
#include "reasonedit/retrieval.hpp"
#include "reasonedit/topology.hpp"

namespace reasonedit {

enum class ProviderMode { mock, remote, file };
std::string_view to_string(ProviderMode mode) noexcept;
ProviderMode parse_provider_mode(std::string_view name);

struct ProviderConfig {
    ProviderMode mode = ProviderMode::mock;
    std::string endpoint = "http://127.0.0.1:8080";
    std::uint64_t seed = 0;
    int timeout_seconds = 60;
    int retries = 2;
    std::vector<std::string> dumps;        // file mode
    std::optional<std::string> manifest;   // file mode, manifest JSON path
    std::optional<std::string> cache;      // JSON-lines response cache
    MockConfig mock;
};

struct EnginePaths {
    std::optional<std::string> pair_pool;        // JSONL {image_ref, text}
    std::optional<std::string> mismatch_texts;   // one text per line
    std::optional<std::string> mismatch_images;  // one image ref per line
    std::optional<std::string> dual_config;
    std::optional<std::string> codebook;
    std::optional<std::string> output;
};

struct SequentialSettings {
    std::uint32_t eval_every = 200;
    std::uint32_t batch = 50;
    std::uint64_t seed = 0;
};

struct EngineConfig {
    ProviderConfig provider;
    BatchSpec batch;
    BiasOptions bias;
    RetrievalConfig retrieval;
    bool merge_enabled = true;
    std::vector<double> w_grid = default_w_grid();
    PatchConfig patch;
    std::uint32_t radius_variants = 4;
    PromptFormat prompt;
    MatchOptions match;
    SequentialSettings sequential;
    EnginePaths paths;

    EditOptions edit_options() const;
    SequentialConfig sequential_config() const;
    void validate() const;
};

// Missing keys keep their defaults; unknown top-level keys are rejected.
EngineConfig engine_config_from_json(const nlohmann::json& j);
EngineConfig load_engine_config(const std::string& path);

// Environment variable that overrides the remote endpoint.
inline constexpr const char* kProviderUrlEnv = "REASONEDIT_PROVIDER_URL";

// Builds the configured provider behind an in-memory (or file-backed) cache.
std::shared_ptr<Provider> make_provider(const ProviderConfig& config);

// Input files shared by several subcommands.
std::vector<ImageText> read_pair_pool(const std::string& path);
std::vector<std::string> read_lines(const std::string& path);

}  // namespace reasonedit
