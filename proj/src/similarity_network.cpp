#include "reasonedit/similarity_network.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

#include "reasonedit/errors.hpp"

namespace reasonedit {

std::size_t Partition::cluster_count() const noexcept {
    std::size_t c = 0;
    for (auto l : labels) c = std::max(c, l + 1);
    return c;
}

void Partition::validate() const {
    std::vector<bool> seen(cluster_count(), false);
    for (auto l : labels) seen[l] = true;
    if (std::find(seen.begin(), seen.end(), false) != seen.end())
        throw ArgumentError("partition cluster ids are not contiguous from 0");
}

double pairwise_sum(std::span<const double> values) noexcept {
    constexpr std::size_t kBlock = 8;
    if (values.size() <= kBlock) {
        double s = 0.0;
        for (double v : values) s += v;
        return s;
    }
    const std::size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

SimilarityNetwork build_adjacency(std::span<const std::vector<double>> vectors,
                                  std::vector<std::string> node_ids) {
    const std::size_t n = vectors.size();
    if (n < 2) throw ArgumentError("similarity network needs at least 2 nodes");
    const std::size_t dim = vectors[0].size();
    for (const auto& v : vectors) {
        if (v.size() != dim) throw ArgumentError("embedding dimension mismatch in network");
        for (double x : v)
            if (!std::isfinite(x)) throw ArgumentError("non-finite embedding entry in network");
    }
    if (node_ids.empty()) {
        node_ids.reserve(n);
        for (std::size_t i = 0; i < n; ++i) node_ids.push_back(std::to_string(i));
    } else if (node_ids.size() != n) {
        throw ArgumentError("node id count does not match vector count");
    }

    SimilarityNetwork net;
    net.node_ids = std::move(node_ids);
    net.adjacency.assign(n * n, 0.0);
    double d_min = std::numeric_limits<double>::infinity();
    double d_max = 0.0;
    for (std::size_t u = 0; u < n; ++u) {
        for (std::size_t v = u + 1; v < n; ++v) {
            const double d = euclidean_distance(vectors[u], vectors[v]);
            net.at(u, v) = net.at(v, u) = d;
            d_min = std::min(d_min, d);
            d_max = std::max(d_max, d);
        }
    }
    net.d_min = d_min;
    net.d_max = d_max;
    const double range = d_max - d_min;
    for (std::size_t u = 0; u < n; ++u) {
        for (std::size_t v = 0; v < n; ++v) {
            double& a = net.at(u, v);
            if (u == v)
                a = 0.0;
            else
                a = range > 0.0 ? (d_max - a) / range : 1.0;
        }
    }
    return net;
}

SimilarityNetwork build_adjacency(std::span<const EmbeddingVector> vectors,
                                  std::vector<std::string> node_ids) {
    std::vector<std::vector<double>> raw;
    raw.reserve(vectors.size());
    for (const auto& v : vectors) raw.push_back(v.values);
    return build_adjacency(std::span<const std::vector<double>>(raw), std::move(node_ids));
}

double modularity(const SimilarityNetwork& net, const Partition& partition) {
    const std::size_t n = net.size();
    if (partition.labels.size() != n) throw ArgumentError("partition does not cover every node");
    if (net.adjacency.size() != n * n) throw ArgumentError("adjacency is not N x N");
    const std::size_t clusters = partition.cluster_count();

    // Strengths and each node's weight into its own cluster.
    std::vector<double> strength(n), inside(n), row(n);
    for (std::size_t u = 0; u < n; ++u) {
        const std::span<const double> a(net.adjacency.data() + u * n, n);
        strength[u] = pairwise_sum(a);
        for (std::size_t v = 0; v < n; ++v)
            row[v] = partition.labels[v] == partition.labels[u] ? a[v] : 0.0;
        inside[u] = pairwise_sum(row);
    }
    const double two_m = pairwise_sum(strength);
    if (!(two_m > 0.0)) throw DegenerateError("network has zero total edge weight");

    std::vector<std::vector<double>> cluster_strength(clusters);
    for (std::size_t u = 0; u < n; ++u) cluster_strength[partition.labels[u]].push_back(strength[u]);
    std::vector<double> null_terms;
    null_terms.reserve(clusters);
    for (const auto& s : cluster_strength) {
        const double total = pairwise_sum(s);
        null_terms.push_back(total * total);
    }
    const double observed = pairwise_sum(inside);
    const double expected = pairwise_sum(null_terms) / two_m;
    return (observed - expected) / two_m;
}

void write_network_text(std::ostream& out, const SimilarityNetwork& net,
                        const Partition& partition) {
    const std::size_t n = net.size();
    out << "# nodes " << n << " d_min " << std::setprecision(17) << net.d_min << " d_max "
        << net.d_max << '\n';
    for (std::size_t u = 0; u < n; ++u) {
        out << net.node_ids[u];
        for (std::size_t v = 0; v < n; ++v) out << ' ' << net.at(u, v);
        out << '\n';
    }
    out << "# labels\n";
    for (std::size_t u = 0; u < n; ++u)
        out << net.node_ids[u] << ' ' << (u < partition.labels.size() ? partition.labels[u] : 0)
            << '\n';
}

}  // namespace reasonedit
