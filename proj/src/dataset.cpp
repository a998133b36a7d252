#include "webgen/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <queue>
#include <sstream>

#include "webgen/rng.hpp"
#include <json.hpp>

namespace webgen {

using nlohmann::json;

double NormalizationParams::normalize_feature(int i, double v) const {
    auto [lo, hi] = feature_range[i];
    if (hi <= lo) return 0.0;
    return 2.0 * (v - lo) / (hi - lo) - 1.0;
}

double NormalizationParams::denormalize_feature(int i, double v) const {
    auto [lo, hi] = feature_range[i];
    if (hi <= lo) return lo;
    return lo + (v + 1.0) * 0.5 * (hi - lo);
}

std::array<double, 7> NormalizationParams::normalize(const ConditioningVector& c) const {
    std::array<double, 7> raw = c.as_array();
    std::array<double, 7> out{};
    for (int i = 0; i < 7; ++i) out[i] = normalize_feature(i, raw[i]);
    return out;
}

ConditioningVector NormalizationParams::denormalize(const std::array<double, 7>& a) const {
    std::array<double, 7> raw{};
    for (int i = 0; i < 7; ++i) raw[i] = denormalize_feature(i, a[i]);
    return ConditioningVector::from_array(raw);
}

namespace {

ConditioningVector sample_features(const Graph& g) {
    if (g.node_count() >= 1 && g.edge_count() >= 1) return conditioning_vector(g);
    // Degenerate neighborhoods (isolated centers) carry zeroed length features.
    ConditioningVector c;
    c.node_count = static_cast<double>(g.node_count());
    return c;
}

}  // namespace

GraphSample inductive_sample(const Graph& g, int center, int depth, int cap) {
    const int n = g.node_count();
    if (center < 0 || center >= n) throw Error("inductive_sample: center out of range");

    auto adj = g.adjacency();
    std::vector<int> hop(n, -1);
    std::vector<int> order;  // BFS order; layer boundaries implied by hop values
    hop[center] = 0;
    order.push_back(center);
    // Plain queue BFS visits layer by layer; within a layer, neighbors are
    // expanded from lower ids first and adjacency lists are sorted, so the
    // order realizes the layer-then-id tie break.
    std::queue<int> q;
    q.push(center);
    while (!q.empty()) {
        int v = q.front();
        q.pop();
        if (hop[v] == depth) continue;
        for (int u : adj[v]) {
            if (hop[u] < 0) {
                hop[u] = hop[v] + 1;
                order.push_back(u);
                q.push(u);
            }
        }
    }
    // Canonical ordering: layer by layer, ascending original id within a
    // layer. Truncation keeps the first `cap` entries of that order.
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return hop[a] != hop[b] ? hop[a] < hop[b] : a < b;
    });
    if (static_cast<int>(order.size()) > cap) order.resize(cap);

    std::vector<int> local(n, -1);
    for (size_t i = 0; i < order.size(); ++i) local[order[i]] = static_cast<int>(i);

    GraphSample s;
    s.center = center;
    s.graph.positions.reserve(order.size());
    for (int v : order) s.graph.positions.push_back(g.positions[v]);
    for (const auto& [a, b] : g.edges) {
        if (local[a] >= 0 && local[b] >= 0) s.graph.add_edge(local[a], local[b]);
    }
    s.graph.normalize_edges();
    s.graph = translate(s.graph, centroid(s.graph) * -1.0);
    s.features = sample_features(s.graph);
    return s;
}

std::vector<GraphSample> sample_all_nodes(const Graph& g, int depth, int cap) {
    std::vector<GraphSample> out;
    out.reserve(g.positions.size());
    for (int v = 0; v < g.node_count(); ++v) out.push_back(inductive_sample(g, v, depth, cap));
    return out;
}

std::pair<std::vector<size_t>, std::vector<size_t>> split_indices(size_t n, double train_fraction,
                                                                  uint64_t seed) {
    if (n < 2) throw Error("split: need at least 2 samples");
    std::vector<size_t> idx(n);
    std::iota(idx.begin(), idx.end(), size_t{0});
    Rng rng(seed);
    rng.shuffle(idx);
    size_t n_train = static_cast<size_t>(std::ceil(train_fraction * static_cast<double>(n)));
    n_train = std::min(n_train, n);
    std::vector<size_t> train(idx.begin(), idx.begin() + n_train);
    std::vector<size_t> test(idx.begin() + n_train, idx.end());
    return {train, test};
}

NormalizationParams fit_normalization(const std::vector<GraphSample>& train) {
    if (train.empty()) throw Error("fit_normalization: empty training set");
    NormalizationParams p;
    double max_abs = 0.0;
    for (const auto& s : train) {
        for (const auto& pos : s.graph.positions) {
            max_abs = std::max({max_abs, std::fabs(pos.x), std::fabs(pos.y), std::fabs(pos.z)});
        }
    }
    p.coord_scale = max_abs > 0.0 ? max_abs : 1.0;

    for (int i = 0; i < 7; ++i) {
        p.feature_range[i] = {std::numeric_limits<double>::infinity(),
                              -std::numeric_limits<double>::infinity()};
    }
    for (const auto& s : train) {
        auto f = s.features.as_array();
        for (int i = 0; i < 7; ++i) {
            p.feature_range[i].first = std::min(p.feature_range[i].first, f[i]);
            p.feature_range[i].second = std::max(p.feature_range[i].second, f[i]);
        }
    }
    return p;
}

Dataset build_dataset(const Graph& g, int depth, int cap, double train_fraction, uint64_t seed) {
    Dataset ds;
    ds.samples = sample_all_nodes(g, depth, cap);
    auto [train_idx, test_idx] = split_indices(ds.samples.size(), train_fraction, seed);
    std::vector<GraphSample> train;
    train.reserve(train_idx.size());
    for (size_t i : train_idx) train.push_back(ds.samples[i]);
    ds.scaling = fit_normalization(train);
    return ds;
}

std::pair<Dataset, Dataset> split(const Dataset& ds, double train_fraction, uint64_t seed) {
    auto [train_idx, test_idx] = split_indices(ds.samples.size(), train_fraction, seed);
    Dataset train{{}, ds.scaling}, test{{}, ds.scaling};
    train.samples.reserve(train_idx.size());
    test.samples.reserve(test_idx.size());
    for (size_t i : train_idx) train.samples.push_back(ds.samples[i]);
    for (size_t i : test_idx) test.samples.push_back(ds.samples[i]);
    return {train, test};
}

Graph synthetic_web(int node_target, double spacing, double jitter, uint64_t seed) {
    if (node_target < 2) throw Error("synthetic_web: need node_target >= 2");
    Rng rng(seed);

    // Lattice dimensions roughly cubic around the target count.
    int nx = std::max(1, static_cast<int>(std::round(std::cbrt(static_cast<double>(node_target)))));
    int ny = nx;
    int nz = std::max(1, (node_target + nx * ny - 1) / (nx * ny));

    Graph g;
    g.positions.reserve(static_cast<size_t>(nx) * ny * nz);
    for (int k = 0; k < nz && g.node_count() < node_target; ++k) {
        for (int j = 0; j < ny && g.node_count() < node_target; ++j) {
            for (int i = 0; i < nx && g.node_count() < node_target; ++i) {
                Point3 p{i * spacing, j * spacing, k * spacing};
                if (jitter > 0.0) {
                    p.x += rng.normal(0.0, jitter);
                    p.y += rng.normal(0.0, jitter);
                    p.z += rng.normal(0.0, jitter);
                }
                g.positions.push_back(p);
            }
        }
    }
    const int n = g.node_count();

    // Candidate edges: each node's kMaxDegree nearest neighbors.
    std::vector<std::pair<double, Edge>> candidates;
    for (int v = 0; v < n; ++v) {
        std::vector<std::pair<double, int>> near;
        near.reserve(n - 1);
        for (int u = 0; u < n; ++u) {
            if (u == v) continue;
            near.push_back({distance(g.positions[v], g.positions[u]), u});
        }
        int keep = std::min<int>(kMaxDegree, static_cast<int>(near.size()));
        std::partial_sort(near.begin(), near.begin() + keep, near.end());
        for (int i = 0; i < keep; ++i) candidates.push_back({near[i].first, make_edge(v, near[i].second)});
    }
    std::sort(candidates.begin(), candidates.end(),
              [](const auto& a, const auto& b) { return a.second != b.second ? a.second < b.second : a.first < b.first; });
    candidates.erase(std::unique(candidates.begin(), candidates.end(),
                                 [](const auto& a, const auto& b) { return a.second == b.second; }),
                     candidates.end());
    std::sort(candidates.begin(), candidates.end());

    // Per-node degree targets below the cap make the web heterogeneous.
    std::vector<int> target(n);
    for (int v = 0; v < n; ++v) target[v] = rng.uniform_int(3, kMaxDegree);

    std::vector<int> deg(n, 0);
    for (const auto& [len, e] : candidates) {
        if (deg[e.first] < target[e.first] && deg[e.second] < target[e.second]) {
            g.edges.push_back(e);
            ++deg[e.first];
            ++deg[e.second];
        }
    }

    // Bridge remaining components with the shortest cross pair that still has
    // degree headroom (cap, not target).
    std::vector<int> comp(n, -1);
    auto recompute_components = [&]() {
        auto adj = g.adjacency();
        int nc = 0;
        std::fill(comp.begin(), comp.end(), -1);
        for (int s = 0; s < n; ++s) {
            if (comp[s] >= 0) continue;
            comp[s] = nc;
            std::queue<int> q;
            q.push(s);
            while (!q.empty()) {
                int v = q.front();
                q.pop();
                for (int u : adj[v]) {
                    if (comp[u] < 0) {
                        comp[u] = nc;
                        q.push(u);
                    }
                }
            }
            ++nc;
        }
        return nc;
    };
    int nc = recompute_components();
    while (nc > 1) {
        double best = std::numeric_limits<double>::infinity();
        Edge best_edge{-1, -1};
        for (int v = 0; v < n; ++v) {
            if (deg[v] >= kMaxDegree) continue;
            for (int u = v + 1; u < n; ++u) {
                if (comp[u] == comp[v] || deg[u] >= kMaxDegree) continue;
                double d = distance(g.positions[v], g.positions[u]);
                if (d < best) {
                    best = d;
                    best_edge = {v, u};
                }
            }
        }
        if (best_edge.first < 0) throw Error("synthetic_web: cannot connect under degree cap");
        g.edges.push_back(best_edge);
        ++deg[best_edge.first];
        ++deg[best_edge.second];
        nc = recompute_components();
    }

    g.normalize_edges();
    return g;
}

Graph parse_graph_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(std::string("graph parse error: ") + e.what());
    }
    if (!j.contains("nodes") || !j["nodes"].is_array()) throw Error("graph parse error: missing 'nodes' array");
    if (!j.contains("edges") || !j["edges"].is_array()) throw Error("graph parse error: missing 'edges' array");

    Graph g;
    for (const auto& node : j["nodes"]) {
        if (!node.is_array() || node.size() != 3) throw Error("graph parse error: node entries must be [x,y,z]");
        g.positions.push_back({node[0].get<double>(), node[1].get<double>(), node[2].get<double>()});
    }
    for (const auto& edge : j["edges"]) {
        if (!edge.is_array() || edge.size() != 2) throw Error("graph parse error: edge entries must be [a,b]");
        g.add_edge(edge[0].get<int>(), edge[1].get<int>());
    }
    auto violations = validate(g);
    if (!violations.empty()) throw Error("graph rejected: " + violations.front().describe());
    g.normalize_edges();
    return g;
}

namespace {

json graph_json(const Graph& g) {
    json nodes = json::array();
    for (const auto& p : g.positions) nodes.push_back({p.x, p.y, p.z});
    json edges = json::array();
    for (const auto& [a, b] : g.edges) edges.push_back({a, b});
    return json{{"nodes", std::move(nodes)}, {"edges", std::move(edges)}};
}

json params_json(const NormalizationParams& p) {
    json ranges = json::array();
    for (const auto& [lo, hi] : p.feature_range) ranges.push_back({lo, hi});
    return json{{"coord_scale", p.coord_scale}, {"feature_range", std::move(ranges)}};
}

NormalizationParams params_from_json(const json& j) {
    NormalizationParams p;
    p.coord_scale = j.at("coord_scale").get<double>();
    const auto& ranges = j.at("feature_range");
    if (ranges.size() != 7) throw Error("dataset header: feature_range must have 7 entries");
    for (int i = 0; i < 7; ++i) p.feature_range[i] = {ranges[i][0].get<double>(), ranges[i][1].get<double>()};
    return p;
}

}  // namespace

std::string graph_to_json(const Graph& g, const std::optional<std::string>& config_hash) {
    json j = graph_json(g);
    if (config_hash) j["meta"] = {{"config_hash", *config_hash}};
    return j.dump();
}

Graph load_graph(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open graph file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_graph_json(buf.str());
}

void save_graph(const Graph& g, const std::string& path, const std::optional<std::string>& config_hash) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write graph file: " + path);
    out << graph_to_json(g, config_hash) << "\n";
}

void save_dataset(const Dataset& ds, const std::string& path,
                  const std::optional<std::string>& config_hash) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write dataset file: " + path);
    json header{{"type", "header"}, {"scaling", params_json(ds.scaling)}, {"samples", ds.samples.size()}};
    if (config_hash) header["config_hash"] = *config_hash;
    out << header.dump() << "\n";
    for (const auto& s : ds.samples) {
        json rec{{"center", s.center},
                 {"features", s.features.as_array()},
                 {"graph", graph_json(s.graph)}};
        out << rec.dump() << "\n";
    }
}

Dataset load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open dataset file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw Error("dataset file is empty: " + path);
    json header;
    try {
        header = json::parse(line);
    } catch (const json::exception& e) {
        throw Error(std::string("dataset header parse error: ") + e.what());
    }
    if (header.value("type", "") != "header") throw Error("dataset file missing header record");

    Dataset ds;
    ds.scaling = params_from_json(header.at("scaling"));
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::exception& e) {
            throw Error(std::string("dataset record parse error: ") + e.what());
        }
        GraphSample s;
        s.center = rec.at("center").get<int>();
        std::array<double, 7> f{};
        const auto& fj = rec.at("features");
        for (int i = 0; i < 7; ++i) f[i] = fj[i].get<double>();
        s.features = ConditioningVector::from_array(f);
        s.graph = parse_graph_json(rec.at("graph").dump());
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

}  // namespace webgen
