#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "reasonedit/errors.hpp"
#include "reasonedit/similarity_network.hpp"
#include "support.hpp"

using namespace reasonedit;

TEST_CASE("three collinear points") {
    const std::vector<std::vector<double>> pts{{0.0}, {1.0}, {2.0}};
    const auto net = build_adjacency(pts);
    CHECK(net.d_min == 1.0);
    CHECK(net.d_max == 2.0);
    CHECK(net.at(0, 1) == 1.0);
    CHECK(net.at(1, 2) == 1.0);
    CHECK(net.at(0, 2) == 0.0);
    for (std::size_t u = 0; u < 3; ++u) CHECK(net.at(u, u) == 0.0);
}

TEST_CASE("adjacency is symmetric within [0,1] with both endpoints hit") {
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const auto pts = testing::random_points(rng, 7, 4);
        const auto net = build_adjacency(pts);
        double lo = 1.0, hi = 0.0;
        for (std::size_t u = 0; u < 7; ++u)
            for (std::size_t v = 0; v < 7; ++v) {
                CHECK(net.at(u, v) == net.at(v, u));
                CHECK(net.at(u, v) >= 0.0);
                CHECK(net.at(u, v) <= 1.0);
                if (u != v) {
                    lo = std::min(lo, net.at(u, v));
                    hi = std::max(hi, net.at(u, v));
                }
            }
        CHECK(lo == 0.0);
        CHECK(hi == 1.0);
    }
}

TEST_CASE("equal distances give a uniform complete graph") {
    const std::vector<std::vector<double>> pts{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    const auto net = build_adjacency(pts);
    for (std::size_t u = 0; u < 3; ++u)
        for (std::size_t v = 0; v < 3; ++v) CHECK(net.at(u, v) == (u == v ? 0.0 : 1.0));
    CHECK(modularity(net, Partition{{0, 0, 0}}) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("adjacency input validation") {
    CHECK_THROWS_AS(build_adjacency(std::vector<std::vector<double>>{{1.0}}), ArgumentError);
    CHECK_THROWS_AS(build_adjacency(std::vector<std::vector<double>>{{1.0}, {1.0, 2.0}}), ArgumentError);
    CHECK_THROWS_AS(build_adjacency(std::vector<std::vector<double>>{{1.0}, {std::nan("")}}), ArgumentError);
}

TEST_CASE("two nodes in separate clusters") {
    const auto net = build_adjacency(std::vector<std::vector<double>>{{0.0}, {1.0}});
    CHECK(net.at(0, 1) == 1.0);
    CHECK(modularity(net, Partition{{0, 1}}) == doctest::Approx(-0.5).epsilon(1e-15));
    CHECK(modularity(net, Partition{{0, 0}}) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("zero total weight is degenerate") {
    SimilarityNetwork net;
    net.node_ids = {"a", "b"};
    net.adjacency = {0, 0, 0, 0};
    CHECK_THROWS_AS(modularity(net, Partition{{0, 1}}), DegenerateError);
}

TEST_CASE("partition validation") {
    CHECK_THROWS_AS((Partition{{0, 2}}.validate()), ArgumentError);
    CHECK((Partition{{1, 0, 1}}.cluster_count() == 2));
    const auto net = build_adjacency(std::vector<std::vector<double>>{{0.0}, {1.0}, {3.0}});
    CHECK_THROWS_AS(modularity(net, Partition{{0, 1}}), ArgumentError);
}

TEST_CASE("modularity matches the double-sum oracle and stays in [-1,1]") {
    Rng rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + rng.below(7);
        const auto pts = testing::random_points(rng, n, 3);
        const auto net = build_adjacency(pts);
        Partition part;
        const std::size_t k = 1 + rng.below(n);
        for (std::size_t i = 0; i < n; ++i) part.labels.push_back(i < k ? i : rng.below(k));
        const double q = modularity(net, part);
        CHECK(std::abs(q - testing::brute_modularity(testing::dense(net), part.labels)) <= 1e-12);
        CHECK(q >= -1.0);
        CHECK(q <= 1.0);
    }
}

TEST_CASE("scale invariances") {
    Rng rng(5);
    const auto pts = testing::random_points(rng, 6, 3);
    auto scaled = pts;
    for (auto& p : scaled)
        for (auto& x : p) x *= 3.7;
    const auto a = build_adjacency(pts);
    const auto b = build_adjacency(scaled);
    for (std::size_t i = 0; i < a.adjacency.size(); ++i)
        CHECK(std::abs(a.adjacency[i] - b.adjacency[i]) <= 1e-9);

    const Partition part{{0, 0, 1, 1, 2, 2}};
    auto c = a;
    for (auto& x : c.adjacency) x *= 5.0;
    CHECK(std::abs(modularity(a, part) - modularity(c, part)) <= 1e-12);
}

TEST_CASE("pairwise summation") {
    std::vector<double> v(1000, 0.1);
    CHECK(pairwise_sum(v) == doctest::Approx(100.0).epsilon(1e-13));
    CHECK(pairwise_sum(std::vector<double>{}) == 0.0);
}

TEST_CASE("network text dump") {
    const auto net = build_adjacency(std::vector<std::vector<double>>{{0.0}, {1.0}, {2.0}}, {"a", "b", "c"});
    std::ostringstream out;
    write_network_text(out, net, Partition{{0, 0, 1}});
    const std::string text = out.str();
    CHECK(text.find("a") != std::string::npos);
    CHECK(std::count(text.begin(), text.end(), '\n') >= 6);
}
