#include <doctest.h>

#include <cmath>

#include "reasonedit/dual_embedding.hpp"
#include "reasonedit/errors.hpp"
#include "reasonedit/mock_provider.hpp"
#include "support.hpp"

using namespace reasonedit;

namespace {

LayerSpec v(std::uint32_t i) { return LayerSpec{Block::vision, i, Pooling::mean}; }

}  // namespace

TEST_CASE("select_layer picks the argmax with low-index ties") {
    const std::vector<LayerScore> sweep{{v(0), 0.1}, {v(5), 0.4}, {v(9), 0.2}};
    CHECK(select_layer(sweep) == v(5));
    const std::vector<LayerScore> tie{{v(1), 0.3}, {v(0), 0.3}};
    CHECK(select_layer(tie) == v(0));
    const std::vector<LayerScore> lang{{v(0), 0.3}, {{Block::language, 2, Pooling::mean}, 0.9}};
    CHECK_THROWS_AS(select_layer(lang), ArgumentError);
    CHECK_THROWS_AS(select_layer(std::vector<LayerScore>{}), ArgumentError);
}

TEST_CASE("assemble concatenates with a weighted text block") {
    const EmbeddingVector zv{{1, 2}, v(0)};
    const EmbeddingVector zt{{3}, {Block::sentence_encoder, 0, Pooling::mean}};
    CHECK(assemble(zv, zt, 2.0).values == std::vector<double>{1, 2, 6});
    CHECK(assemble(zv, zt, 1.0).values == std::vector<double>{1, 2, 3});
    const auto tiny = assemble(zv, zt, 1e-300);
    CHECK(std::abs(tiny.values[2]) < 1e-299);
    CHECK_THROWS_AS(assemble(zv, zt, 0.0), ArgumentError);
    CHECK_THROWS_AS(assemble(zv, zt, -1.0), ArgumentError);
    // Linear in the vision block.
    const EmbeddingVector zv3{{3, 6}, v(0)};
    const auto scaled = assemble(zv3, zt, 2.0);
    CHECK(scaled.values[0] == 3.0 * assemble(zv, zt, 2.0).values[0]);
    CHECK(scaled.values[2] == assemble(zv, zt, 2.0).values[2]);
}

TEST_CASE("harmonic mean score") {
    CHECK(harmonic_mean_score(0.3, 0.3) == doctest::Approx(0.3));
    CHECK(harmonic_mean_score(0.6, 0.2) == doctest::Approx(0.3));
    CHECK(std::isinf(harmonic_mean_score(0.0, 0.5)));
    CHECK(std::isinf(harmonic_mean_score(0.5, -0.1)));
}

TEST_CASE("select_w on a monotone trade-off lands in the interior") {
    const auto grid = default_w_grid();
    REQUIRE(grid.size() == 21);
    CHECK(grid.front() == doctest::Approx(1.0 / 16));
    CHECK(grid.back() == doctest::Approx(16.0));
    CHECK(grid[10] == doctest::Approx(1.0));
    const auto sel = select_w(grid, [](double w) { return std::pair{1.0 / (1.0 + w), w / (1.0 + w)}; });
    CHECK(sel.w == doctest::Approx(1.0));
    CHECK(sel.w > grid.front());
    CHECK(sel.w < grid.back());
    CHECK(sel.curve.size() == 21);

    // A common positive factor does not move the argmax.
    const auto scaled =
        select_w(grid, [](double w) { return std::pair{7.0 / (1.0 + w), 7.0 * w / (1.0 + w)}; });
    CHECK(scaled.w == sel.w);
}

TEST_CASE("select_w skips non-positive points and fails when none remain") {
    const std::vector<double> grid{0.5, 1.0, 2.0};
    const auto sel = select_w(grid, [](double w) {
        return w < 1.5 ? std::pair{-0.1, 0.4} : std::pair{0.2, 0.2};
    });
    CHECK(sel.w == 2.0);
    CHECK(std::isinf(sel.curve[0].score));
    CHECK_THROWS_AS(select_w(grid, [](double) { return std::pair{0.0, 0.4}; }), InfeasibleError);
    CHECK_THROWS_AS(select_w(std::vector<double>{}, [](double) { return std::pair{1.0, 1.0}; }),
                    ArgumentError);
    CHECK_THROWS_AS(select_w(std::vector<double>{0.0}, [](double) { return std::pair{1.0, 1.0}; }),
                    ArgumentError);
}

TEST_CASE("dual config validation, hashing and persistence") {
    MockProvider mock;
    const auto cfg = make_dual_config(mock, v(2), 0.5);
    CHECK(cfg.dim() == 48);
    CHECK(cfg.manifest_hash == mock.manifest().hash());
    CHECK(cfg.hash() == make_dual_config(mock, v(2), 0.5).hash());
    CHECK(cfg.hash() != make_dual_config(mock, v(2), 0.25).hash());
    CHECK(dual_config_from_json(to_json(cfg)) == cfg);

    auto tampered = to_json(cfg);
    tampered["w"] = 0.75;
    CHECK_THROWS_AS(dual_config_from_json(tampered), FormatError);
    CHECK_THROWS_AS(make_dual_config(mock, {Block::language, 0, Pooling::mean}, 1.0), ArgumentError);
    CHECK_THROWS_AS(make_dual_config(mock, v(0), 0.0), ArgumentError);
    CHECK_THROWS_AS(make_dual_config(mock, v(7), 1.0), ManifestError);
}

TEST_CASE("embed_dual follows the configured layer and weight") {
    MockProvider mock;
    const auto cfg = make_dual_config(mock, v(1), 2.0);
    const auto z = embed_dual(mock, cfg, "img", std::nullopt, "question");
    const auto zv = mock.embed_pair("img", std::nullopt, "question", v(1));
    const auto zt = mock.embed_text("question");
    CHECK(z.values == assemble(zv, zt, 2.0).values);

    MockConfig other;
    other.text_dim = 8;
    MockProvider narrow(other);
    CHECK_THROWS_AS(embed_dual(narrow, cfg, "img", std::nullopt, "question"), CompatibilityError);
}
