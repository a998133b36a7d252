#include "webgen/graph.hpp"

#include <algorithm>
#include <queue>

namespace webgen {

void Graph::add_edge(int a, int b) {
    edges.push_back(make_edge(a, b));
}

void Graph::normalize_edges() {
    for (auto& e : edges) e = make_edge(e.first, e.second);
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
}

bool Graph::has_edge(int a, int b) const {
    Edge e = make_edge(a, b);
    return std::binary_search(edges.begin(), edges.end(), e);
}

std::vector<std::vector<int>> Graph::adjacency() const {
    std::vector<std::vector<int>> adj(positions.size());
    for (const auto& [a, b] : edges) {
        if (a == b) continue;
        if (a < 0 || b < 0 || a >= node_count() || b >= node_count()) continue;
        adj[a].push_back(b);
        adj[b].push_back(a);
    }
    for (auto& nbrs : adj) std::sort(nbrs.begin(), nbrs.end());
    return adj;
}

std::string Violation::describe() const {
    switch (kind) {
        case ViolationKind::SelfLoop:
            return "self-loop at node " + std::to_string(a);
        case ViolationKind::DuplicateEdge:
            return "duplicate edge (" + std::to_string(a) + "," + std::to_string(b) + ")";
        case ViolationKind::EdgeIndexOutOfRange:
            return "edge (" + std::to_string(a) + "," + std::to_string(b) + ") references a missing node";
        case ViolationKind::DegreeExceeded:
            return "degree exceeds " + std::to_string(kMaxDegree) + " at node " + std::to_string(a);
        case ViolationKind::NonFinitePosition:
            return "non-finite position at node " + std::to_string(a);
    }
    return "unknown violation";
}

std::vector<Violation> validate(const Graph& g, bool web_conformant) {
    std::vector<Violation> out;
    const int n = g.node_count();

    for (int v = 0; v < n; ++v) {
        if (!g.positions[v].finite()) out.push_back({ViolationKind::NonFinitePosition, v, -1});
    }

    std::vector<Edge> seen;
    seen.reserve(g.edges.size());
    for (const auto& e : g.edges) {
        Edge c = make_edge(e.first, e.second);
        if (c.first == c.second) {
            out.push_back({ViolationKind::SelfLoop, c.first, c.second});
            continue;
        }
        if (c.first < 0 || c.second >= n) {
            out.push_back({ViolationKind::EdgeIndexOutOfRange, c.first, c.second});
            continue;
        }
        seen.push_back(c);
    }
    std::sort(seen.begin(), seen.end());
    for (size_t i = 1; i < seen.size(); ++i) {
        if (seen[i] == seen[i - 1]) {
            out.push_back({ViolationKind::DuplicateEdge, seen[i].first, seen[i].second});
        }
    }

    if (web_conformant) {
        std::vector<int> deg(n, 0);
        for (const auto& e : seen) {
            ++deg[e.first];
            ++deg[e.second];
        }
        for (int v = 0; v < n; ++v) {
            if (deg[v] > kMaxDegree) out.push_back({ViolationKind::DegreeExceeded, v, deg[v]});
        }
    }
    return out;
}

int degree(const Graph& g, int v) {
    if (v < 0 || v >= g.node_count()) {
        throw Error("degree: node index " + std::to_string(v) + " out of range");
    }
    int d = 0;
    for (const auto& [a, b] : g.edges) {
        if (a == v || b == v) ++d;
    }
    return d;
}

bool Permutation::is_bijection() const {
    std::vector<bool> hit(mapping.size(), false);
    for (int m : mapping) {
        if (m < 0 || m >= size() || hit[m]) return false;
        hit[m] = true;
    }
    return true;
}

Permutation Permutation::inverse() const {
    Permutation inv;
    inv.mapping.resize(mapping.size());
    for (int i = 0; i < size(); ++i) inv.mapping[mapping[i]] = i;
    return inv;
}

Permutation Permutation::identity(int n) {
    Permutation p;
    p.mapping.resize(n);
    for (int i = 0; i < n; ++i) p.mapping[i] = i;
    return p;
}

Graph permute(const Graph& g, const Permutation& p) {
    if (p.size() != g.node_count() || !p.is_bijection()) {
        throw Error("permute: permutation does not match node count");
    }
    Graph out;
    out.positions.resize(g.positions.size());
    for (int i = 0; i < g.node_count(); ++i) out.positions[p.mapping[i]] = g.positions[i];
    out.edges.reserve(g.edges.size());
    for (const auto& [a, b] : g.edges) out.add_edge(p.mapping[a], p.mapping[b]);
    out.normalize_edges();
    return out;
}

Graph translate(const Graph& g, const Point3& d) {
    Graph out = g;
    for (auto& p : out.positions) p = p + d;
    return out;
}

Point3 centroid(const Graph& g) {
    Point3 c;
    if (g.positions.empty()) return c;
    for (const auto& p : g.positions) c = c + p;
    return c * (1.0 / static_cast<double>(g.node_count()));
}

bool is_connected(const Graph& g) {
    const int n = g.node_count();
    if (n <= 1) return true;
    auto adj = g.adjacency();
    std::vector<bool> seen(n, false);
    std::queue<int> q;
    q.push(0);
    seen[0] = true;
    int count = 1;
    while (!q.empty()) {
        int v = q.front();
        q.pop();
        for (int u : adj[v]) {
            if (!seen[u]) {
                seen[u] = true;
                ++count;
                q.push(u);
            }
        }
    }
    return count == n;
}

}  // namespace webgen
