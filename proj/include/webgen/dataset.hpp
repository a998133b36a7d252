#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "webgen/graph.hpp"
#include "webgen/stats.hpp"

namespace webgen {

// Hard cap on nodes per sample (N). Samples are 4-hop neighborhoods truncated
// to this size.
inline constexpr int kMaxNodes = 64;
inline constexpr int kDefaultSampleDepth = 4;

// A locally re-indexed neighborhood of a larger web, centered at the origin.
struct GraphSample {
    Graph graph;
    int center = -1;  // node id in the source web; -1 for generated samples
    ConditioningVector features;
};

// Scaling fitted on the training portion: one positive scale shared by x, y
// and z, plus per-feature (min, max) ranges mapping each conditioning feature
// to [-1, 1]. Features whose range is degenerate map to 0.
struct NormalizationParams {
    double coord_scale = 1.0;
    std::array<std::pair<double, double>, 7> feature_range{};

    double normalize_feature(int i, double v) const;
    double denormalize_feature(int i, double v) const;
    std::array<double, 7> normalize(const ConditioningVector& c) const;
    ConditioningVector denormalize(const std::array<double, 7>& a) const;

    bool operator==(const NormalizationParams&) const = default;
};

struct Dataset {
    std::vector<GraphSample> samples;  // ordered by center id
    NormalizationParams scaling;
};

// BFS ball around `center` up to `depth` hops, truncated to `cap` nodes in
// layer order (ties by ascending original id), re-indexed in BFS order and
// shifted so the centroid sits at the origin.
GraphSample inductive_sample(const Graph& g, int center, int depth = kDefaultSampleDepth,
                             int cap = kMaxNodes);

// One sample per node of g, in center-id order.
std::vector<GraphSample> sample_all_nodes(const Graph& g, int depth = kDefaultSampleDepth,
                                          int cap = kMaxNodes);

// Deterministic seeded shuffle; first ceil(train_fraction * n) indices train.
std::pair<std::vector<size_t>, std::vector<size_t>> split_indices(size_t n, double train_fraction,
                                                                  uint64_t seed);

NormalizationParams fit_normalization(const std::vector<GraphSample>& train);

// Samples every node, fits scaling on the training part of the (fraction,
// seed) split, and returns all samples with that scaling attached.
Dataset build_dataset(const Graph& g, int depth = kDefaultSampleDepth, int cap = kMaxNodes,
                      double train_fraction = 0.9, uint64_t seed = 0);

std::pair<Dataset, Dataset> split(const Dataset& ds, double train_fraction, uint64_t seed);

// Random geometric web: jittered cubic lattice joined to nearest neighbors
// with degree capped at kMaxDegree, then bridged into one component.
Graph synthetic_web(int node_target, double spacing, double jitter, uint64_t seed);

// Graph text format: {"nodes": [[x,y,z],...], "edges": [[a,b],...]}.
// load_graph rejects any document that fails validate().
Graph load_graph(const std::string& path);
void save_graph(const Graph& g, const std::string& path,
                const std::optional<std::string>& config_hash = std::nullopt);
Graph parse_graph_json(const std::string& text);
std::string graph_to_json(const Graph& g, const std::optional<std::string>& config_hash = std::nullopt);

// Dataset file: one JSON record per line, header first (normalization), then
// one GraphSample per line.
void save_dataset(const Dataset& ds, const std::string& path,
                  const std::optional<std::string>& config_hash = std::nullopt);
Dataset load_dataset(const std::string& path);

}  // namespace webgen
