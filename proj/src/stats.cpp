#include "webgen/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

namespace webgen {

ConditioningVector conditioning_vector(const Graph& g) {
    if (g.node_count() == 0) throw Error("conditioning_vector: empty graph");
    if (g.edge_count() == 0) throw Error("conditioning_vector: graph has no edges");

    ConditioningVector c;
    double sum_len = 0.0, sum_dx = 0.0, sum_dy = 0.0, sum_dz = 0.0;
    for (const auto& [a, b] : g.edges) {
        Point3 d = g.positions[b] - g.positions[a];
        sum_len += d.norm();
        sum_dx += std::fabs(d.x);
        sum_dy += std::fabs(d.y);
        sum_dz += std::fabs(d.z);
    }
    const double ne = static_cast<double>(g.edge_count());
    c.mean_edge_length = sum_len / ne;
    c.mean_dx = sum_dx / ne;
    c.mean_dy = sum_dy / ne;
    c.mean_dz = sum_dz / ne;
    c.node_count = static_cast<double>(g.node_count());
    c.edge_count = ne;
    c.degree_ratio = ne / c.node_count;
    return c;
}

NodeField per_node_mean_edge_length(const Graph& g) {
    NodeField f{"mean_edge_length", std::vector<double>(g.node_count(), 0.0)};
    std::vector<int> deg(g.node_count(), 0);
    for (const auto& [a, b] : g.edges) {
        double len = distance(g.positions[a], g.positions[b]);
        f.values[a] += len;
        f.values[b] += len;
        ++deg[a];
        ++deg[b];
    }
    for (int v = 0; v < g.node_count(); ++v) {
        if (deg[v] > 0) f.values[v] /= deg[v];
    }
    return f;
}

NodeField clustering_coefficient(const Graph& g) {
    NodeField f{"clustering", std::vector<double>(g.node_count(), 0.0)};
    auto adj = g.adjacency();
    for (int v = 0; v < g.node_count(); ++v) {
        const auto& nb = adj[v];
        const int k = static_cast<int>(nb.size());
        if (k < 2) continue;
        int triangles = 0;
        for (int i = 0; i < k; ++i) {
            for (int j = i + 1; j < k; ++j) {
                if (g.has_edge(nb[i], nb[j])) ++triangles;
            }
        }
        f.values[v] = 2.0 * triangles / (static_cast<double>(k) * (k - 1));
    }
    return f;
}

NodeField reciprocal_neighbor_density(const Graph& g) {
    NodeField f{"reciprocal_density", std::vector<double>(g.node_count(), 0.0)};
    auto adj = g.adjacency();
    for (int v = 0; v < g.node_count(); ++v) {
        const auto& nb = adj[v];
        if (nb.empty()) continue;
        double sum = 0.0;
        for (int u : nb) sum += distance(g.positions[v], g.positions[u]);
        const double k = static_cast<double>(nb.size());
        f.values[v] = sum / (k * k);
    }
    return f;
}

NodeField geodesic_field(const Graph& g, int source) {
    const int n = g.node_count();
    if (source < 0 || source >= n) throw Error("geodesic_field: source out of range");
    NodeField f{"geodesic", std::vector<double>(n, std::numeric_limits<double>::infinity())};
    auto adj = g.adjacency();

    using Item = std::pair<double, int>;  // (distance, node)
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    f.values[source] = 0.0;
    heap.push({0.0, source});
    while (!heap.empty()) {
        auto [d, v] = heap.top();
        heap.pop();
        if (d > f.values[v]) continue;
        for (int u : adj[v]) {
            double nd = d + distance(g.positions[v], g.positions[u]);
            if (nd < f.values[u]) {
                f.values[u] = nd;
                heap.push({nd, u});
            }
        }
    }
    return f;
}

namespace {

// y = L x for the combinatorial Laplacian, adjacency passed in.
void laplacian_apply(const std::vector<std::vector<int>>& adj, const std::vector<double>& x,
                     std::vector<double>& y) {
    const size_t n = adj.size();
    for (size_t v = 0; v < n; ++v) {
        double acc = static_cast<double>(adj[v].size()) * x[v];
        for (int u : adj[v]) acc -= x[u];
        y[v] = acc;
    }
}

void project_out_ones(std::vector<double>& x) {
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    for (double& v : x) v -= mean;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// Solves L x = b on the subspace orthogonal to constants by conjugate
// gradients. L is positive definite there for connected graphs.
std::vector<double> laplacian_solve(const std::vector<std::vector<int>>& adj,
                                    const std::vector<double>& b) {
    const size_t n = adj.size();
    std::vector<double> x(n, 0.0), r = b, p = b, Ap(n);
    project_out_ones(r);
    p = r;
    double rs = dot(r, r);
    const double tol = 1e-24 * std::max(1.0, dot(b, b));
    for (size_t it = 0; it < 4 * n + 100; ++it) {
        if (rs <= tol) break;
        laplacian_apply(adj, p, Ap);
        double alpha = rs / dot(p, Ap);
        for (size_t i = 0; i < n; ++i) x[i] += alpha * p[i];
        for (size_t i = 0; i < n; ++i) r[i] -= alpha * Ap[i];
        project_out_ones(r);
        double rs_new = dot(r, r);
        double beta = rs_new / rs;
        for (size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
        rs = rs_new;
    }
    project_out_ones(x);
    return x;
}

}  // namespace

FiedlerResult fiedler_projection(const Graph& g) {
    const int n = g.node_count();
    if (n < 2) throw Error("fiedler_projection: need at least 2 nodes");
    if (!is_connected(g)) throw Error("fiedler_projection: graph is disconnected (lambda2 degenerate)");

    auto adj = g.adjacency();
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = std::cos(1.0 + 0.7 * i);  // fixed non-constant start
    project_out_ones(v);

    std::vector<double> Lv(n);
    double lambda = 0.0, residual = std::numeric_limits<double>::infinity();
    const int max_iter = 10000;
    for (int it = 0; it < max_iter; ++it) {
        std::vector<double> next = laplacian_solve(adj, v);
        double nn = std::sqrt(dot(next, next));
        if (nn == 0.0) throw Error("fiedler_projection: iteration collapsed");
        for (double& x : next) x /= nn;
        v = std::move(next);

        laplacian_apply(adj, v, Lv);
        lambda = dot(v, Lv);
        double r2 = 0.0;
        for (int i = 0; i < n; ++i) {
            double d = Lv[i] - lambda * v[i];
            r2 += d * d;
        }
        residual = std::sqrt(r2);
        if (residual <= 1e-8) break;
    }
    // Contract requires residual <= 1e-6; the 1e-8 target above is the normal
    // convergence point. Between the two we accept with the looser bound.
    if (residual > 1e-6) throw Error("fiedler_projection: did not converge (residual " +
                                     std::to_string(residual) + ")");

    for (int i = 0; i < n; ++i) {
        if (std::fabs(v[i]) > 1e-12) {
            if (v[i] < 0) {
                for (double& x : v) x = -x;
            }
            break;
        }
    }
    FiedlerResult out;
    out.field = NodeField{"fiedler", std::move(v)};
    out.lambda2 = lambda;
    out.residual = residual;
    return out;
}

}  // namespace webgen
