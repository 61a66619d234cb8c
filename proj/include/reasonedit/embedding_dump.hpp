#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace reasonedit {

// Precomputed embeddings for the "file" provider mode.
//
// Layout (little-endian): magic "REEM", u32 version, u32 dim, u64 count,
// then per record: u32 id length, id bytes, dim float32 values.
struct EmbeddingRecord {
    std::string id;
    std::vector<float> values;

    bool operator==(const EmbeddingRecord&) const = default;
};

struct EmbeddingDump {
    std::uint32_t dim = 0;
    std::vector<EmbeddingRecord> records;
};

inline constexpr std::uint32_t kEmbeddingDumpVersion = 1;

std::vector<std::uint8_t> encode_embedding_dump(const EmbeddingDump& dump);
// Throws FormatError on bad magic, unknown version, truncation or trailing bytes.
EmbeddingDump decode_embedding_dump(std::span<const std::uint8_t> bytes);

}  // namespace reasonedit
