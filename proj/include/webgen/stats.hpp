#pragma once

#include <array>
#include <string>
#include <vector>

#include "webgen/graph.hpp"

namespace webgen {

// The 7 per-graph geometric features used to condition generation:
// mean edge length, mean absolute edge components, node count, edge count,
// and the degree ratio (edges per node). Component means use |dx| etc. so the
// value is independent of arbitrary edge orientation.
struct ConditioningVector {
    double mean_edge_length = 0.0;  // meters
    double mean_dx = 0.0;
    double mean_dy = 0.0;
    double mean_dz = 0.0;
    double node_count = 0.0;
    double edge_count = 0.0;
    double degree_ratio = 0.0;  // edge_count / node_count

    std::array<double, 7> as_array() const {
        return {mean_edge_length, mean_dx, mean_dy, mean_dz, node_count, edge_count, degree_ratio};
    }
    static ConditioningVector from_array(const std::array<double, 7>& a) {
        return {a[0], a[1], a[2], a[3], a[4], a[5], a[6]};
    }
    bool operator==(const ConditioningVector&) const = default;
};

inline constexpr std::array<const char*, 7> kFeatureNames = {
    "mean_edge_length", "mean_dx", "mean_dy", "mean_dz", "node_count", "edge_count", "degree_ratio"};

// One real value per node.
struct NodeField {
    std::string name;
    std::vector<double> values;
};

// Throws Error when the graph has no nodes or no edges.
ConditioningVector conditioning_vector(const Graph& g);

// Mean length of incident edges; 0 for isolated nodes.
NodeField per_node_mean_edge_length(const Graph& g);

// Unweighted local clustering: 2T(v) / (k(k-1)) for degree k >= 2, else 0.
NodeField clustering_coefficient(const Graph& g);

// Mean distance to neighbors divided by neighbor count; low values mean
// high local density. 0 for isolated nodes.
NodeField reciprocal_neighbor_density(const Graph& g);

// Shortest-path distance from `source` with Euclidean edge weights.
// Unreachable nodes carry +infinity.
NodeField geodesic_field(const Graph& g, int source);

struct FiedlerResult {
    NodeField field;   // unit-norm eigenvector, first component above 1e-12 made positive
    double lambda2;    // second-smallest Laplacian eigenvalue
    double residual;   // ||L v - lambda2 v||
};

// Eigenvector of the combinatorial Laplacian L = D - A for the second-smallest
// eigenvalue, computed by inverse power iteration on the subspace orthogonal
// to constants. Throws on disconnected graphs or failed convergence.
FiedlerResult fiedler_projection(const Graph& g);

}  // namespace webgen
