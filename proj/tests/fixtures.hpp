#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "reasonedit/eval_harness.hpp"

namespace testing {

// Four records per kind. Expected success rates, in kAllSampleKinds order:
// edit 3/4, t_gen 2/4, i_gen 1/4, r_gen 4/4, coe_gen 0/4, unrelated 3/4.
inline std::vector<reasonedit::PredictionRecord> metric_fixture() {
    using reasonedit::SampleKind;
    std::vector<reasonedit::PredictionRecord> out;
    auto add = [&](SampleKind kind, std::string predicted, std::string reference,
                   std::optional<std::string> pre = std::nullopt) {
        reasonedit::PredictionRecord r;
        r.sample_id = std::string(reasonedit::to_string(kind)) + "-" + std::to_string(out.size());
        r.kind = kind;
        r.parent_edit_id = kind == SampleKind::unrelated ? std::nullopt : std::optional<std::string>("e1");
        r.predicted = std::move(predicted);
        r.reference = std::move(reference);
        r.pre_edit_predicted = std::move(pre);
        out.push_back(std::move(r));
    };
    add(SampleKind::edit, "red", "red");
    add(SampleKind::edit, "blue", "blue");
    add(SampleKind::edit, "green", "green");
    add(SampleKind::edit, "Red", "red");  // case differs: a miss under exact matching
    add(SampleKind::t_gen, "two", "two");
    add(SampleKind::t_gen, "three", "two");
    add(SampleKind::t_gen, "cat", "cat");
    add(SampleKind::t_gen, "dog", "cat");
    add(SampleKind::i_gen, "yes", "yes");
    add(SampleKind::i_gen, "no", "yes");
    add(SampleKind::i_gen, "no", "yes");
    add(SampleKind::i_gen, " yes", "yes");  // whitespace differs
    add(SampleKind::r_gen, "left", "left");
    add(SampleKind::r_gen, "right", "right");
    add(SampleKind::r_gen, "up", "up");
    add(SampleKind::r_gen, "down", "down");
    add(SampleKind::coe_gen, "a", "b");
    add(SampleKind::coe_gen, "c", "d");
    add(SampleKind::coe_gen, "e", "f");
    add(SampleKind::coe_gen, "g", "h");
    // Locality compares against the unedited answer, not the reference.
    add(SampleKind::unrelated, "tree", "house", "tree");
    add(SampleKind::unrelated, "car", "car", "bus");
    add(SampleKind::unrelated, "sky", "sea", "sky");
    add(SampleKind::unrelated, "one", "two", "one");
    return out;
}

inline constexpr std::array<double, 6> kMetricFixtureExpected{0.75, 0.5, 0.25, 1.0, 0.0, 0.75};

}  // namespace testing
