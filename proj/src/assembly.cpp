#include "webgen/assembly.hpp"

#include <algorithm>
#include <cmath>

#include "webgen/stats.hpp"

namespace webgen {

Point3 PlacementFn::eval(int i) const { return placement_eval(*this, i); }

Point3 placement_eval(const PlacementFn& p, int i) {
    if (i < 0) throw Error("placement_eval: negative step");
    if (const auto* h = std::get_if<HelixPath>(&p.path)) {
        return {h->radius * std::cos(i * h->dphi), h->radius * std::sin(i * h->dphi),
                i * h->slope};
    }
    if (const auto* c = std::get_if<ParametricPath>(&p.path)) {
        double u = i * c->t_step;
        if (u > c->domain_end + 1e-12) throw Error("placement_eval: step beyond parametric domain");
        double ring = c->A + std::cos(c->B * u);
        return {ring * std::cos(u), ring * std::sin(u), std::sin(c->B * u)};
    }
    const auto& o = std::get<OffsetPath>(p.path);
    return {o.d.x * i, o.d.y * i, o.d.z * i};
}

StackResult stack(const StackResult& acc, const Graph& g_new, const StackPolicy& policy,
                  const Point3& offset, int step_index) {
    const int n_acc = acc.graph.node_count();
    const int n_new = g_new.node_count();
    const int k = policy.overlap;
    if (k < 0 || k > acc.last_block_size || k > n_new) {
        throw Error("stack: overlap " + std::to_string(k) + " exceeds block sizes");
    }

    StackResult out;
    out.graph = acc.graph;
    out.provenance = acc.provenance;
    out.graph.positions.reserve(n_acc + n_new - k);
    out.provenance.reserve(n_acc + n_new - k);

    // Node j of g_new maps to an accumulator index: fused for j < k, appended
    // otherwise. Fused targets are the tail of the previous block.
    std::vector<int> map(n_new);
    for (int j = 0; j < n_new; ++j) {
        Point3 shifted = g_new.positions[j] + offset;
        if (j < k) {
            int target = n_acc - k + j;
            map[j] = target;
            if (policy.merge == MergeMode::Average) {
                out.graph.positions[target] = (out.graph.positions[target] + shifted) * 0.5;
            } else {
                out.graph.positions[target] = shifted;
            }
        } else {
            map[j] = out.graph.node_count();
            out.graph.positions.push_back(shifted);
            out.provenance.push_back(step_index);
        }
    }
    for (const auto& [a, b] : g_new.edges) {
        if (map[a] == map[b]) continue;  // both fused onto the same node
        out.graph.add_edge(map[a], map[b]);
    }
    out.graph.normalize_edges();
    out.last_block_size = n_new;
    return out;
}

Graph GeneratorGraphSource::next(int step, Rng& rng) {
    Graph g = fn_(step, rng);
    // Enforce the degree cap by shedding the longest incident edges.
    bool changed = true;
    while (changed) {
        changed = false;
        auto adj = g.adjacency();
        for (int v = 0; v < g.node_count(); ++v) {
            if (static_cast<int>(adj[v].size()) <= kMaxDegree) continue;
            double worst_len = -1.0;
            Edge worst{-1, -1};
            for (int u : adj[v]) {
                double len = distance(g.positions[v], g.positions[u]);
                if (len > worst_len) {
                    worst_len = len;
                    worst = make_edge(v, u);
                }
            }
            g.edges.erase(std::remove(g.edges.begin(), g.edges.end(), worst), g.edges.end());
            changed = true;
            break;
        }
    }
    auto violations = validate(g, true);
    if (!violations.empty()) {
        throw Error("assemble: generator produced an invalid sample after repair: " +
                    violations.front().describe());
    }
    return g;
}

AssembleResult assemble(GraphSource& source, const PlacementFn& p, int n_steps,
                        const StackPolicy& policy) {
    if (n_steps < 1) throw Error("assemble: need at least one step");
    Rng rng(policy.shuffle_seed);

    StackResult acc;
    for (int i = 0; i < n_steps; ++i) {
        Graph sample = source.next(i, rng);
        if (policy.shuffle && sample.node_count() > 1) {
            Permutation perm = Permutation::identity(sample.node_count());
            rng.shuffle(perm.mapping);
            sample = permute(sample, perm);
        }
        Point3 offset = placement_eval(p, i);
        if (i == 0) {
            acc.graph = translate(sample, offset);
            acc.last_block_size = sample.node_count();
            acc.provenance.assign(sample.node_count(), 0);
        } else {
            StackPolicy step_policy = policy;
            step_policy.overlap =
                std::min({policy.overlap, acc.last_block_size, sample.node_count()});
            acc = stack(acc, sample, step_policy, offset, i);
        }
    }
    auto violations = validate(acc.graph);
    if (!violations.empty()) {
        throw Error("assemble: result failed validation: " + violations.front().describe());
    }
    return {std::move(acc.graph), std::move(acc.provenance)};
}

std::array<double, 7> random_conditioning(const NormalizationParams& params, uint64_t seed) {
    Rng rng(seed);
    std::array<double, 7> norm{};
    for (int j = 0; j < 7; ++j) norm[j] = rng.uniform(-1.0, 1.0);

    ConditioningVector c = params.denormalize(norm);

    // Consistency repair in raw space: integer counts, degree ratio derived
    // from them, mean length dominating the component means.
    double n_nodes = std::max(1.0, std::round(c.node_count));
    double n_edges = std::max(1.0, std::round(c.edge_count));
    auto [zeta_lo, zeta_hi] = params.feature_range[6];
    if (zeta_hi > zeta_lo) {
        double lo = std::max(1.0, std::ceil(zeta_lo * n_nodes - 1e-9));
        double hi = std::floor(zeta_hi * n_nodes + 1e-9);
        if (lo <= hi) n_edges = std::clamp(n_edges, lo, hi);
    }
    c.node_count = n_nodes;
    c.edge_count = n_edges;
    c.degree_ratio = n_edges / n_nodes;
    c.mean_edge_length = std::max({c.mean_edge_length, c.mean_dx, c.mean_dy, c.mean_dz});

    auto out = params.normalize(c);
    for (double& v : out) v = std::clamp(v, -1.0, 1.0);
    return out;
}

}  // namespace webgen
