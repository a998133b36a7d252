#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace webgen {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct Point3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    Point3 operator+(const Point3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Point3 operator-(const Point3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Point3 operator*(double s) const { return {x * s, y * s, z * s}; }
    double norm() const { return std::sqrt(x * x + y * y + z * z); }
    bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

inline double distance(const Point3& a, const Point3& b) { return (a - b).norm(); }

// Undirected edge, canonical order a < b.
using Edge = std::pair<int, int>;

inline Edge make_edge(int a, int b) { return a < b ? Edge{a, b} : Edge{b, a}; }

// Maximum node degree for web-conformant graphs.
inline constexpr int kMaxDegree = 6;

// 3D undirected graph: node positions plus a sorted, duplicate-free edge list.
// Values are immutable by convention; operations return new graphs.
struct Graph {
    std::vector<Point3> positions;
    std::vector<Edge> edges;

    int node_count() const { return static_cast<int>(positions.size()); }
    int edge_count() const { return static_cast<int>(edges.size()); }

    void add_edge(int a, int b);
    // Sorts edges and drops duplicates; keeps self-loops for validate() to report.
    void normalize_edges();
    bool has_edge(int a, int b) const;

    // Neighbor lists, ascending.
    std::vector<std::vector<int>> adjacency() const;

    bool operator==(const Graph&) const = default;
};

enum class ViolationKind {
    SelfLoop,
    DuplicateEdge,
    EdgeIndexOutOfRange,
    DegreeExceeded,
    NonFinitePosition,
};

struct Violation {
    ViolationKind kind;
    int a = -1;  // node or first edge endpoint
    int b = -1;  // second endpoint when applicable
    std::string describe() const;
};

// Checks all Graph invariants; returns one entry per offense (empty == valid).
// With web_conformant set, additionally enforces degree <= kMaxDegree.
std::vector<Violation> validate(const Graph& g, bool web_conformant = false);

int degree(const Graph& g, int v);

struct Permutation {
    std::vector<int> mapping;  // new index of node i is mapping[i]

    int size() const { return static_cast<int>(mapping.size()); }
    bool is_bijection() const;
    Permutation inverse() const;
    static Permutation identity(int n);
};

// Relabels nodes: positions and edges move under the same permutation, so the
// result is isomorphic to the input.
Graph permute(const Graph& g, const Permutation& p);

Graph translate(const Graph& g, const Point3& d);

Point3 centroid(const Graph& g);

bool is_connected(const Graph& g);

}  // namespace webgen
