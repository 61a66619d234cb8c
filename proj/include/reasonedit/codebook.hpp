#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "reasonedit/dual_embedding.hpp"
#include "reasonedit/edit_model.hpp"
#include "reasonedit/patchify.hpp"
#include "reasonedit/provider.hpp"

namespace reasonedit {

enum class EntryKind : std::uint8_t { answer = 0, reasoning = 1 };

struct Provenance {
    std::string edit_id;
    EntryKind kind = EntryKind::answer;
    std::int32_t statement_index = -1;  // -1 for answer entries
    std::optional<BBox> bbox;

    bool operator==(const Provenance&) const = default;
};

struct CodebookEntry {
    EmbeddingVector key;
    double radius = 0.0;
    std::vector<std::string> values;
    std::vector<Provenance> provenance;
    std::uint32_t merge_count = 1;

    bool operator==(const CodebookEntry&) const = default;
};

struct CodebookStats {
    std::uint64_t merges = 0;
    std::uint64_t radius_fallbacks = 0;

    bool operator==(const CodebookStats&) const = default;
};

// Per-codebook memo of rejection thresholds by percentile. Copies start empty.
class ThresholdCache {
public:
    ThresholdCache() = default;
    ThresholdCache(const ThresholdCache&) {}
    ThresholdCache& operator=(const ThresholdCache&) {
        clear();
        return *this;
    }

    std::optional<double> get(double p) const;
    void put(double p, double threshold) const;
    void clear() const;

private:
    mutable std::mutex mutex_;
    mutable std::map<double, double> values_;
};

// Lifelong key-value store. Single writer; concurrent readers are fine
// between mutations.
class Codebook {
public:
    explicit Codebook(DualConfig config, bool merge_enabled = true);

    const DualConfig& config() const noexcept { return config_; }
    const std::vector<CodebookEntry>& entries() const noexcept { return entries_; }
    std::uint64_t edit_count() const noexcept { return edit_count_; }
    const CodebookStats& stats() const noexcept { return stats_; }
    bool merge_enabled() const noexcept { return merge_enabled_; }
    void set_merge_enabled(bool enabled) noexcept { merge_enabled_ = enabled; }

    struct InsertResult {
        std::size_t index = 0;
        bool merged = false;
    };
    // Merges into the first overlapping entry (insertion order) when merging
    // is enabled, else appends. The key is rounded to float precision.
    InsertResult insert(CodebookEntry entry);

    void record_edit() noexcept { ++edit_count_; }
    void record_radius_fallback() noexcept { ++stats_.radius_fallbacks; }

    // Median radius of current entries, 0 when empty.
    double default_radius() const;

    const ThresholdCache& threshold_cache() const noexcept { return cache_; }

    // Used by the snapshot loader.
    static Codebook restore(DualConfig config, bool merge_enabled, std::vector<CodebookEntry> entries,
                            std::uint64_t edit_count, CodebookStats stats);

private:
    DualConfig config_;
    bool merge_enabled_;
    std::vector<CodebookEntry> entries_;
    std::uint64_t edit_count_ = 0;
    CodebookStats stats_;
    ThresholdCache cache_;
};

// Rounds every component to the nearest float, matching snapshot storage.
void quantize(EmbeddingVector& v);

// Fraction of entry e's interval [-r_e, r_e] (placed along the line through
// both centers) covered by the other entry's interval.
double overlap_fraction(double distance, double r_self, double r_other) noexcept;

// Merges when d < 0.1 r and d < 0.1 r_k and both overlap fractions exceed
// 0.9. The merged key is the mean, the radius the max, the values the
// ordered union, and merge counts add up.
std::optional<CodebookEntry> try_merge(const CodebookEntry& existing, const CodebookEntry& candidate);

// Mean Euclidean distance from `anchor` to the dual embeddings of
// `variants` augmentations of (image, bbox, text).
double estimate_radius(const EmbeddingVector& anchor, const std::string& image_ref,
                       const std::optional<BBox>& bbox, const std::string& text, Provider& provider,
                       const DualConfig& dual, std::uint32_t variants = 4);

struct EditOptions {
    PatchConfig patch;
    std::uint32_t radius_variants = 4;
};

struct AddEditReport {
    std::size_t entries_added = 0;
    std::size_t entries_merged = 0;
    std::size_t low_confidence_statements = 0;
};

// One codebook update: an answer entry, then one reasoning entry per
// (statement, evidence box). Provider failures leave `cb` unchanged.
AddEditReport add_edit(Codebook& cb, const Edit& edit, Provider& provider,
                       const EditOptions& options = {});

inline constexpr std::uint32_t kSnapshotVersion = 1;

// Layout (little-endian): "RECB", u32 version, u64 dual-config hash,
// u64 edit count, u64 merges, u64 radius fallbacks, u64 entry count, then
// per entry: u32 dim, dim float32, f64 radius, u32 value count + (u32 len,
// UTF-8), u32 provenance count + (u32 len, edit id, u8 kind, i32 statement,
// u8 has_bbox [, 4 x u32 bbox]), u32 merge count.
std::vector<std::uint8_t> snapshot(const Codebook& cb);
// Throws FormatError on corrupt data and CompatibilityError when the
// snapshot was built under a different dual config.
Codebook load_codebook(std::span<const std::uint8_t> bytes, const DualConfig& config,
                       bool merge_enabled = true);

// Reads just the dual-config hash from a snapshot header.
std::uint64_t snapshot_config_hash(std::span<const std::uint8_t> bytes);

// Snapshot size in KiB divided by the number of applied edits.
double storage_per_edit(const Codebook& cb);

}  // namespace reasonedit
