#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <variant>
#include <vector>

#include "webgen/dataset.hpp"
#include "webgen/graph.hpp"
#include "webgen/rng.hpp"

namespace webgen {

// Per-step spatial offset of stacked samples.
struct HelixPath {
    double radius = 1.0;
    double dphi = M_PI / 6.0;  // angular increment per step
    double slope = 0.3;        // z gain per step
};

// Closed curve (A + cos(B u))(cos u, sin u), z = sin(B u), u = i * t_step,
// traversing 0 .. 12.57 in 251 steps by default.
struct ParametricPath {
    double A = 2.0;
    double B = 1.5;
    double t_step = 0.05;
    int step_count = 251;
    double domain_end = 12.57;
};

// Linear drift: step i sits at i * d.
struct OffsetPath {
    Point3 d;
};

struct PlacementFn {
    std::variant<HelixPath, ParametricPath, OffsetPath> path;

    Point3 eval(int i) const;
};

enum class MergeMode { Average, TakeSecond };

struct StackPolicy {
    int overlap = 0;  // k fused nodes
    MergeMode merge = MergeMode::Average;
    bool shuffle = false;
    uint64_t shuffle_seed = 0;
};

// Fuses g_new onto the accumulator: the last k nodes of the accumulator's
// most recent block are identified with the first k nodes of g_new (shifted
// by `offset`), overlap positions merged per policy, edges unioned. The
// result has n_acc + n_new - k nodes.
struct StackResult {
    Graph graph;
    int last_block_size = 0;       // nodes contributed by the newest block
    std::vector<int> provenance;   // step index that produced each node
};

StackResult stack(const StackResult& acc, const Graph& g_new, const StackPolicy& policy,
                  const Point3& offset, int step_index);

// Plain two-graph form: the whole accumulator counts as the previous block.
inline StackResult stack(const Graph& acc, const Graph& g_new, const StackPolicy& policy,
                         const Point3& offset) {
    StackResult base{acc, acc.node_count(), std::vector<int>(acc.node_count(), 0)};
    return stack(base, g_new, policy, offset, 1);
}

Point3 placement_eval(const PlacementFn& p, int i);

// Supplies one web-conformant sample per assembly step.
class GraphSource {
public:
    virtual ~GraphSource() = default;
    virtual Graph next(int step, Rng& rng) = 0;
};

class FixedGraphSource : public GraphSource {
public:
    explicit FixedGraphSource(Graph g) : g_(std::move(g)) {}
    Graph next(int, Rng&) override { return g_; }

private:
    Graph g_;
};

class CyclicGraphSource : public GraphSource {
public:
    explicit CyclicGraphSource(std::vector<Graph> graphs) : graphs_(std::move(graphs)) {}
    Graph next(int step, Rng&) override { return graphs_[step % graphs_.size()]; }

private:
    std::vector<Graph> graphs_;
};

// Wraps a generative model (or any sampler). The callback must return a
// repaired sample; degree caps are enforced here by dropping longest edges.
class GeneratorGraphSource : public GraphSource {
public:
    using SampleFn = std::function<Graph(int step, Rng& rng)>;
    explicit GeneratorGraphSource(SampleFn fn) : fn_(std::move(fn)) {}
    Graph next(int step, Rng& rng) override;

private:
    SampleFn fn_;
};

struct AssembleResult {
    Graph graph;
    std::vector<int> provenance;  // producing step per node
};

// Iteratively draws a sample (shuffled when the policy says so), shifts it to
// placement_eval(p, i), and stacks it onto the accumulator. The overlap is
// clamped to what the current blocks can support; a sample that is invalid
// after repair aborts.
AssembleResult assemble(GraphSource& source, const PlacementFn& p, int n_steps,
                        const StackPolicy& policy);

// Uniform draw in the normalized training ranges with consistency repair:
// node/edge counts become integers, the degree ratio is recomputed from them,
// and the mean edge length is raised to dominate the component means.
std::array<double, 7> random_conditioning(const NormalizationParams& params, uint64_t seed);

}  // namespace webgen
