#include "reasonedit/codebook.hpp"

#include <algorithm>
#include <cmath>

#include "reasonedit/binary_io.hpp"
#include "reasonedit/errors.hpp"

namespace reasonedit {

std::optional<double> ThresholdCache::get(double p) const {
    std::lock_guard lock(mutex_);
    if (auto it = values_.find(p); it != values_.end()) return it->second;
    return std::nullopt;
}

void ThresholdCache::put(double p, double threshold) const {
    std::lock_guard lock(mutex_);
    values_[p] = threshold;
}

void ThresholdCache::clear() const {
    std::lock_guard lock(mutex_);
    values_.clear();
}

Codebook::Codebook(DualConfig config, bool merge_enabled)
    : config_(std::move(config)), merge_enabled_(merge_enabled) {
    config_.validate();
}

void quantize(EmbeddingVector& v) {
    for (auto& x : v.values) x = static_cast<double>(static_cast<float>(x));
}

Codebook::InsertResult Codebook::insert(CodebookEntry entry) {
    if (entry.key.dim() != config_.dim())
        throw ArgumentError("entry key dim " + std::to_string(entry.key.dim()) +
                            " does not match codebook dim " + std::to_string(config_.dim()));
    if (entry.values.empty()) throw ArgumentError("codebook entry needs at least one value");
    if (!(entry.radius >= 0.0)) throw ArgumentError("entry radius must be non-negative");
    entry.key.layer = config_.layer;
    quantize(entry.key);
    cache_.clear();
    if (merge_enabled_) {
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            if (auto merged = try_merge(entries_[i], entry)) {
                entries_[i] = std::move(*merged);
                ++stats_.merges;
                return {i, true};
            }
        }
    }
    entries_.push_back(std::move(entry));
    return {entries_.size() - 1, false};
}

double Codebook::default_radius() const {
    if (entries_.empty()) return 0.0;
    std::vector<double> radii;
    radii.reserve(entries_.size());
    for (const auto& e : entries_) radii.push_back(e.radius);
    std::sort(radii.begin(), radii.end());
    const std::size_t mid = radii.size() / 2;
    return radii.size() % 2 == 1 ? radii[mid] : 0.5 * (radii[mid - 1] + radii[mid]);
}

Codebook Codebook::restore(DualConfig config, bool merge_enabled,
                           std::vector<CodebookEntry> entries, std::uint64_t edit_count,
                           CodebookStats stats) {
    Codebook cb(std::move(config), merge_enabled);
    for (auto& e : entries) e.key.layer = cb.config_.layer;
    cb.entries_ = std::move(entries);
    cb.edit_count_ = edit_count;
    cb.stats_ = stats;
    return cb;
}

double overlap_fraction(double distance, double r_self, double r_other) noexcept {
    if (!(r_self > 0.0)) return 0.0;
    const double lo = std::max(-r_other, distance - r_self);
    const double hi = std::min(r_other, distance + r_self);
    return std::max(0.0, hi - lo) / (2.0 * r_self);
}

std::optional<CodebookEntry> try_merge(const CodebookEntry& existing, const CodebookEntry& candidate) {
    const double d = euclidean_distance(existing.key.values, candidate.key.values);
    const double rk = existing.radius;
    const double r = candidate.radius;
    if (!(d < 0.1 * r && d < 0.1 * rk)) return std::nullopt;
    if (!(overlap_fraction(d, rk, r) > 0.9 && overlap_fraction(d, r, rk) > 0.9)) return std::nullopt;

    CodebookEntry merged = existing;
    for (std::size_t i = 0; i < merged.key.values.size(); ++i)
        merged.key.values[i] = 0.5 * (existing.key.values[i] + candidate.key.values[i]);
    quantize(merged.key);
    merged.radius = std::max(r, rk);
    for (const auto& v : candidate.values)
        if (std::find(merged.values.begin(), merged.values.end(), v) == merged.values.end())
            merged.values.push_back(v);
    merged.provenance.insert(merged.provenance.end(), candidate.provenance.begin(),
                             candidate.provenance.end());
    merged.merge_count = existing.merge_count + candidate.merge_count;
    return merged;
}

double estimate_radius(const EmbeddingVector& anchor, const std::string& image_ref,
                       const std::optional<BBox>& bbox, const std::string& text, Provider& provider,
                       const DualConfig& dual, std::uint32_t variants) {
    const auto views = provider.augment(image_ref, text, variants);
    if (views.empty()) throw TransportError("provider returned no augmentations");
    double sum = 0.0;
    for (const auto& v : views)
        sum += euclidean_distance(anchor.values,
                                  embed_dual(provider, dual, v.image_ref, bbox, v.text).values);
    return sum / static_cast<double>(views.size());
}

namespace {

// Entry prepared against the provider; inserted only once every provider
// call for the edit has succeeded.
struct PendingEntry {
    CodebookEntry entry;
    bool needs_default_radius = false;
};

PendingEntry prepare_entry(const Edit& edit, const std::optional<BBox>& bbox, const std::string& text,
                           std::string value, Provenance provenance, Provider& provider,
                           const DualConfig& dual, const EditOptions& options) {
    PendingEntry p;
    p.entry.key = embed_dual(provider, dual, edit.image_ref, bbox, text);
    quantize(p.entry.key);
    try {
        p.entry.radius = estimate_radius(p.entry.key, edit.image_ref, bbox, text, provider, dual,
                                         options.radius_variants);
    } catch (const UnsupportedError&) {
        p.needs_default_radius = true;
    } catch (const TransportError&) {
        p.needs_default_radius = true;
    }
    p.entry.values.push_back(std::move(value));
    p.entry.provenance.push_back(std::move(provenance));
    return p;
}

}  // namespace

AddEditReport add_edit(Codebook& cb, const Edit& edit, Provider& provider,
                       const EditOptions& options) {
    validate(edit);
    const DualConfig& dual = cb.config();
    AddEditReport report;
    std::vector<PendingEntry> pending;

    pending.push_back(prepare_entry(edit, std::nullopt, edit.question,
                                    answer_sentence(edit.question, edit.answer),
                                    Provenance{edit.edit_id, EntryKind::answer, -1, std::nullopt},
                                    provider, dual, options));

    const auto size = provider.image_size(edit.image_ref);
    for (std::size_t j = 0; j < edit.reasoning.size(); ++j) {
        const std::string& statement = edit.reasoning[j];
        std::vector<BBox> boxes = edit.evidence_for(j);
        if (boxes.empty()) {
            auto found = find_evidence(edit.image_ref, statement, provider, options.patch);
            if (found.low_confidence) ++report.low_confidence_statements;
            boxes = std::move(found.boxes);
        } else if (size) {
            for (const auto& b : boxes)
                if (!b.fits_within(size->width, size->height))
                    throw ValidationError("edit " + edit.edit_id + ": evidence box exceeds image bounds");
        }
        for (const auto& box : boxes)
            pending.push_back(prepare_entry(
                edit, box, statement, statement,
                Provenance{edit.edit_id, EntryKind::reasoning, static_cast<std::int32_t>(j), box},
                provider, dual, options));
    }

    for (auto& p : pending) {
        if (p.needs_default_radius) {
            p.entry.radius = cb.default_radius();
            cb.record_radius_fallback();
        }
        if (cb.insert(std::move(p.entry)).merged)
            ++report.entries_merged;
        else
            ++report.entries_added;
    }
    cb.record_edit();
    return report;
}

std::vector<std::uint8_t> snapshot(const Codebook& cb) {
    ByteWriter w;
    w.bytes("RECB");
    w.u32(kSnapshotVersion);
    w.u64(cb.config().hash());
    w.u64(cb.edit_count());
    w.u64(cb.stats().merges);
    w.u64(cb.stats().radius_fallbacks);
    w.u64(cb.entries().size());
    for (const auto& e : cb.entries()) {
        w.u32(static_cast<std::uint32_t>(e.key.dim()));
        for (double x : e.key.values) w.f32(static_cast<float>(x));
        w.f64(e.radius);
        w.u32(static_cast<std::uint32_t>(e.values.size()));
        for (const auto& v : e.values) w.str(v);
        w.u32(static_cast<std::uint32_t>(e.provenance.size()));
        for (const auto& p : e.provenance) {
            w.str(p.edit_id);
            w.u8(static_cast<std::uint8_t>(p.kind));
            w.i32(p.statement_index);
            w.u8(p.bbox ? 1 : 0);
            if (p.bbox) {
                w.u32(p.bbox->x);
                w.u32(p.bbox->y);
                w.u32(p.bbox->w);
                w.u32(p.bbox->h);
            }
        }
        w.u32(e.merge_count);
    }
    return w.take();
}

namespace {

std::uint64_t read_header(ByteReader& r) {
    if (r.bytes(4) != "RECB") throw FormatError("not a codebook snapshot (bad magic)");
    if (const auto version = r.u32(); version != kSnapshotVersion)
        throw FormatError("unsupported snapshot version " + std::to_string(version));
    return r.u64();
}

}  // namespace

std::uint64_t snapshot_config_hash(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    return read_header(r);
}

Codebook load_codebook(std::span<const std::uint8_t> bytes, const DualConfig& config,
                       bool merge_enabled) {
    ByteReader r(bytes);
    const std::uint64_t hash = read_header(r);
    if (hash != config.hash())
        throw CompatibilityError("snapshot was built under a different dual config");
    const std::uint64_t edit_count = r.u64();
    CodebookStats stats;
    stats.merges = r.u64();
    stats.radius_fallbacks = r.u64();
    const std::uint64_t count = r.u64();
    if (count > r.remaining()) throw FormatError("entry count exceeds snapshot size");
    std::vector<CodebookEntry> entries;
    entries.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        CodebookEntry e;
        const std::uint32_t dim = r.u32();
        if (dim != config.dim()) throw FormatError("snapshot key dim disagrees with dual config");
        e.key.values.resize(dim);
        for (auto& x : e.key.values) x = r.f32();
        e.radius = r.f64();
        if (!(e.radius >= 0.0)) throw FormatError("negative or NaN radius in snapshot");
        const std::uint32_t nvalues = r.u32();
        if (nvalues == 0 || nvalues > r.remaining()) throw FormatError("bad value count in snapshot");
        for (std::uint32_t k = 0; k < nvalues; ++k) e.values.push_back(r.str());
        const std::uint32_t nprov = r.u32();
        if (nprov == 0 || nprov > r.remaining()) throw FormatError("bad provenance count in snapshot");
        for (std::uint32_t k = 0; k < nprov; ++k) {
            Provenance p;
            p.edit_id = r.str();
            const std::uint8_t kind = r.u8();
            if (kind > 1) throw FormatError("bad entry kind in snapshot");
            p.kind = static_cast<EntryKind>(kind);
            p.statement_index = r.i32();
            const std::uint8_t has_box = r.u8();
            if (has_box > 1) throw FormatError("bad bbox flag in snapshot");
            if (has_box) {
                BBox b;
                b.x = r.u32();
                b.y = r.u32();
                b.w = r.u32();
                b.h = r.u32();
                p.bbox = b;
            }
            e.provenance.push_back(std::move(p));
        }
        e.merge_count = r.u32();
        if (e.merge_count == 0) throw FormatError("zero merge count in snapshot");
        entries.push_back(std::move(e));
    }
    if (!r.done()) throw FormatError("trailing bytes after snapshot");
    return Codebook::restore(config, merge_enabled, std::move(entries), edit_count, stats);
}

double storage_per_edit(const Codebook& cb) {
    if (cb.edit_count() == 0) throw ArgumentError("storage per edit needs at least one edit");
    return static_cast<double>(snapshot(cb).size()) / 1024.0 / static_cast<double>(cb.edit_count());
}

}  // namespace reasonedit
