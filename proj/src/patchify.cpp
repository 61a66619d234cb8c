#include "reasonedit/patchify.hpp"

#include <cmath>

#include "reasonedit/errors.hpp"
#include "reasonedit/parallel.hpp"

namespace reasonedit {

std::vector<PatchCandidate> grid_candidates(std::uint32_t width, std::uint32_t height,
                                            std::span<const std::uint32_t> scales) {
    if (width == 0 || height == 0) throw ArgumentError("image has a zero dimension");
    if (scales.empty()) throw ArgumentError("patch scales are empty");
    std::vector<PatchCandidate> out;
    for (std::uint32_t s : scales) {
        if (s == 0) throw ArgumentError("patch scale must be >= 1");
        if (s > width || s > height)
            throw ArgumentError("scale " + std::to_string(s) + " exceeds image size " +
                                std::to_string(width) + "x" + std::to_string(height));
        const std::uint32_t cw = width / s;
        const std::uint32_t ch = height / s;
        for (std::uint32_t row = 0; row < s; ++row) {
            for (std::uint32_t col = 0; col < s; ++col) {
                BBox b;
                b.x = col * cw;
                b.y = row * ch;
                b.w = col + 1 == s ? width - b.x : cw;
                b.h = row + 1 == s ? height - b.y : ch;
                out.push_back(PatchCandidate{b, s, 0.0, std::nullopt});
            }
        }
    }
    return out;
}

double yesno_prob(const YesNoScore& score) {
    const bool yes_inf = std::isinf(score.nll_yes);
    const bool no_inf = std::isinf(score.nll_no);
    if (std::isnan(score.nll_yes) || std::isnan(score.nll_no))
        throw DegenerateError("yes/no NLL is NaN");
    if (yes_inf && no_inf) throw DegenerateError("both yes and no have zero probability");
    if (no_inf) return 1.0;
    if (yes_inf) return 0.0;
    // e^-a / (e^-a + e^-b) = 1 / (1 + e^(a-b))
    return 1.0 / (1.0 + std::exp(score.nll_yes - score.nll_no));
}

std::string render_template(std::string_view tmpl, std::string_view placeholder,
                            std::string_view value) {
    std::string out(tmpl);
    const auto pos = out.find(placeholder);
    if (pos != std::string::npos) out.replace(pos, placeholder.size(), value);
    return out;
}

EvidenceResult find_evidence(const std::string& image_ref, const std::string& statement,
                             Provider& provider, const PatchConfig& config) {
    if (statement.empty()) throw ArgumentError("evidence search needs a nonempty statement");
    const ImageSize size = provider.image_size(image_ref).value_or(config.default_image_size);
    EvidenceResult result;
    result.candidates = grid_candidates(size.width, size.height, config.scales);

    auto& cands = result.candidates;
    parallel_for(cands.size(), config.parallel, [&](std::size_t i) {
        cands[i].verify_p_yes = yesno_prob(provider.yesno(image_ref, cands[i].bbox, statement, config.verify_template));
        if (cands[i].verify_p_yes > config.verify_threshold)
            cands[i].loglik = provider.loglik(image_ref, cands[i].bbox, statement);
    });

    const PatchCandidate* best = nullptr;
    std::uint32_t finest = 0;
    for (const auto& c : cands) {
        if (!c.loglik) continue;
        if (best == nullptr || *c.loglik > *best->loglik) best = &c;
        finest = std::max(finest, c.scale);
    }
    if (best == nullptr) {
        result.boxes.push_back(BBox{0, 0, size.width, size.height});
        result.low_confidence = true;
        return result;
    }
    const PatchCandidate* best_fine = nullptr;
    for (const auto& c : cands)
        if (c.loglik && c.scale == finest && (best_fine == nullptr || *c.loglik > *best_fine->loglik))
            best_fine = &c;
    result.boxes.push_back(best->bbox);
    if (!(best_fine->bbox == best->bbox)) result.boxes.push_back(best_fine->bbox);
    return result;
}

}  // namespace reasonedit
