#include "reasonedit/embedding_dump.hpp"

#include <fstream>
#include <iterator>

#include "reasonedit/binary_io.hpp"

namespace reasonedit {

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw NotFoundError("cannot open '" + path + "'");
    return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                     std::istreambuf_iterator<char>());
}

void write_file_bytes(const std::string& path, std::span<const std::uint8_t> data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ArgumentError("cannot write '" + path + "'");
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!out) throw ArgumentError("short write to '" + path + "'");
}

std::vector<std::uint8_t> encode_embedding_dump(const EmbeddingDump& dump) {
    ByteWriter w;
    w.bytes("REEM");
    w.u32(kEmbeddingDumpVersion);
    w.u32(dump.dim);
    w.u64(dump.records.size());
    for (const auto& rec : dump.records) {
        if (rec.values.size() != dump.dim)
            throw ArgumentError("record '" + rec.id + "' has wrong dimension");
        w.str(rec.id);
        for (float v : rec.values) w.f32(v);
    }
    return w.take();
}

EmbeddingDump decode_embedding_dump(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    if (r.bytes(4) != "REEM") throw FormatError("not an embedding dump (bad magic)");
    if (const auto version = r.u32(); version != kEmbeddingDumpVersion)
        throw FormatError("unsupported embedding dump version " + std::to_string(version));
    EmbeddingDump dump;
    dump.dim = r.u32();
    const std::uint64_t count = r.u64();
    // Each record needs at least a length prefix and its values.
    if (count > r.remaining() / (4 + std::uint64_t{dump.dim} * 4))
        throw FormatError("record count exceeds data size");
    dump.records.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        EmbeddingRecord rec;
        rec.id = r.str();
        rec.values.resize(dump.dim);
        for (auto& v : rec.values) v = r.f32();
        dump.records.push_back(std::move(rec));
    }
    if (!r.done()) throw FormatError("trailing bytes after embedding dump");
    return dump;
}

}  // namespace reasonedit
