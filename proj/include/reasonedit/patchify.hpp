#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "reasonedit/edit_model.hpp"
#include "reasonedit/provider.hpp"

namespace reasonedit {

struct PatchCandidate {
    BBox bbox;
    std::uint32_t scale = 1;  // grid level, 1 = full image
    double verify_p_yes = 0.0;
    std::optional<double> loglik;
};

// s x s equal-cell grids for each scale; the last row and column absorb
// remainder pixels. Candidates are ordered by scale, then row-major.
std::vector<PatchCandidate> grid_candidates(std::uint32_t width, std::uint32_t height,
                                            std::span<const std::uint32_t> scales);

// P(yes) from a softmax over the two answer NLLs.
double yesno_prob(const YesNoScore& score);

struct PatchConfig {
    std::vector<std::uint32_t> scales{1, 2, 3};
    // Used when the provider cannot report image dimensions.
    ImageSize default_image_size{448, 448};
    std::string verify_template{kVerifyTemplate};
    double verify_threshold = 0.5;  // keep candidates with P(yes) strictly above
    bool parallel = false;
};

struct EvidenceResult {
    std::vector<BBox> boxes;  // 1 or 2
    bool low_confidence = false;
    std::vector<PatchCandidate> candidates;
};

// Picks evidence boxes for one reasoning statement: the highest-likelihood
// verified candidate overall plus the highest-likelihood verified candidate
// at the finest verified scale (deduplicated). Falls back to the full image,
// flagged low-confidence, when no candidate verifies.
EvidenceResult find_evidence(const std::string& image_ref, const std::string& statement,
                             Provider& provider, const PatchConfig& config = {});

std::string render_template(std::string_view tmpl, std::string_view placeholder,
                            std::string_view value);

}  // namespace reasonedit
