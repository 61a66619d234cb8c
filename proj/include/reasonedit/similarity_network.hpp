#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "reasonedit/provider.hpp"

namespace reasonedit {

// Dense symmetric similarity graph over embedded nodes.
struct SimilarityNetwork {
    std::vector<std::string> node_ids;
    std::vector<double> adjacency;  // row-major N x N
    double d_min = 0.0;
    double d_max = 0.0;

    std::size_t size() const noexcept { return node_ids.size(); }
    double at(std::size_t u, std::size_t v) const { return adjacency[u * size() + v]; }
    double& at(std::size_t u, std::size_t v) { return adjacency[u * size() + v]; }
};

// Cluster label per node, contiguous from 0.
struct Partition {
    std::vector<std::size_t> labels;

    std::size_t cluster_count() const noexcept;
    // Throws ArgumentError when labels are not contiguous from 0.
    void validate() const;
};

// Pairwise (tree) summation; keeps rounding error O(log n).
double pairwise_sum(std::span<const double> values) noexcept;

// A_uv = (d_max - d(u,v)) / (d_max - d_min) over Euclidean distances, A_uu = 0.
// When every pairwise distance is equal all off-diagonal weights are 1.
SimilarityNetwork build_adjacency(std::span<const std::vector<double>> vectors,
                                  std::vector<std::string> node_ids = {});
SimilarityNetwork build_adjacency(std::span<const EmbeddingVector> vectors,
                                  std::vector<std::string> node_ids = {});

// Newman's weighted modularity,
//   Q = 1/(2m) sum_{u,v} (A_uv - a_u a_v / 2m) [g(u) = g(v)],
// over ordered pairs with a_u = sum_v A_uv and 2m = sum_u a_u.
// Throws DegenerateError when m = 0.
double modularity(const SimilarityNetwork& net, const Partition& partition);

// Plain-text dump: header line, N rows of weights, then one label per node.
void write_network_text(std::ostream& out, const SimilarityNetwork& net, const Partition& partition);

}  // namespace reasonedit
