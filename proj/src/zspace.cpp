#include "webgen/zspace.hpp"

#include <algorithm>

namespace webgen {

namespace {

ConditioningVector decoded_features(const Graph& g) {
    if (g.node_count() >= 1 && g.edge_count() >= 1) return conditioning_vector(g);
    ConditioningVector c;
    c.node_count = static_cast<double>(g.node_count());
    return c;
}

}  // namespace

SparseZ encode_sparse(const GraphSample& s, const NormalizationParams& params) {
    const int n = s.graph.node_count();
    if (n > kMaxNodes) throw Error("encode_sparse: sample exceeds " + std::to_string(kMaxNodes) + " nodes");

    AnalogIndexCodec codec;
    SparseZ z;
    auto adj = s.graph.adjacency();
    for (int j = 0; j < kMaxNodes; ++j) {
        if (j < n) {
            if (static_cast<int>(adj[j].size()) > kMaxNeighbors) {
                throw Error("encode_sparse: node " + std::to_string(j) + " exceeds " +
                            std::to_string(kMaxNeighbors) + " neighbors");
            }
            const Point3& p = s.graph.positions[j];
            z.m.at(j, 0) = p.x / params.coord_scale;
            z.m.at(j, 1) = p.y / params.coord_scale;
            z.m.at(j, 2) = p.z / params.coord_scale;
            for (int k = 0; k < kMaxNeighbors; ++k) {
                int id = k < static_cast<int>(adj[j].size()) ? adj[j][k] + 1 : 0;  // 1-based, 0 = none
                z.m.at(j, 3 + k) = codec.analog(id);
            }
        } else {
            z.m.at(j, 0) = z.m.at(j, 1) = z.m.at(j, 2) = 0.0;
            for (int k = 0; k < kMaxNeighbors; ++k) z.m.at(j, 3 + k) = codec.analog(0);
        }
    }
    return z;
}

DecodeResult decode_sparse(const SparseZ& z, const NormalizationParams& params) {
    AnalogIndexCodec codec;
    std::array<std::array<int, kMaxNeighbors>, kMaxNodes> slots{};
    std::array<bool, kMaxNodes> keep{};
    for (int j = 0; j < kMaxNodes; ++j) {
        bool any = false;
        for (int k = 0; k < kMaxNeighbors; ++k) {
            slots[j][k] = codec.decode(z.m.at(j, 3 + k));
            any = any || slots[j][k] != 0;
        }
        keep[j] = any;
    }

    std::array<int, kMaxNodes> local{};
    local.fill(-1);
    DecodeResult out;
    for (int j = 0; j < kMaxNodes; ++j) {
        if (!keep[j]) continue;
        local[j] = out.sample.graph.node_count();
        out.sample.graph.positions.push_back({z.m.at(j, 0) * params.coord_scale,
                                              z.m.at(j, 1) * params.coord_scale,
                                              z.m.at(j, 2) * params.coord_scale});
    }
    for (int j = 0; j < kMaxNodes; ++j) {
        if (!keep[j]) continue;
        for (int k = 0; k < kMaxNeighbors; ++k) {
            int id = slots[j][k];
            if (id == 0) continue;
            int target = id - 1;
            if (target == j || target >= kMaxNodes || local[target] < 0) {
                ++out.repairs;
                continue;
            }
            out.sample.graph.add_edge(local[j], local[target]);
        }
    }
    out.sample.graph.normalize_edges();
    out.sample.features = decoded_features(out.sample.graph);
    return out;
}

FullZ encode_full(const GraphSample& s, const NormalizationParams& params) {
    const int n = s.graph.node_count();
    if (n > kMaxNodes) throw Error("encode_full: sample exceeds " + std::to_string(kMaxNodes) + " nodes");

    FullZ z;
    z.m.fill(-1.0);
    for (int j = 0; j < n; ++j) {
        const Point3& p = s.graph.positions[j];
        z.m.at(j, 0) = p.x / params.coord_scale;
        z.m.at(j, 1) = p.y / params.coord_scale;
        z.m.at(j, 2) = p.z / params.coord_scale;
    }
    for (const auto& [a, b] : s.graph.edges) {
        z.m.at(a, 3 + b) = 1.0;
        z.m.at(b, 3 + a) = 1.0;
    }
    return z;
}

DecodeResult decode_full(const FullZ& z, const NormalizationParams& params) {
    if (z.has_token) throw Error("decode_full: strip the start token first");

    std::array<bool, kMaxNodes> used{};
    std::vector<Edge> edges;
    for (int j = 0; j < kMaxNodes; ++j) {
        for (int k = j + 1; k < kMaxNodes; ++k) {
            double score = 0.5 * (z.m.at(j, 3 + k) + z.m.at(k, 3 + j));
            if (score > 0.0) {
                edges.push_back({j, k});
                used[j] = used[k] = true;
            }
        }
    }

    std::array<int, kMaxNodes> local{};
    local.fill(-1);
    DecodeResult out;
    for (int j = 0; j < kMaxNodes; ++j) {
        if (!used[j]) continue;  // isolated rows (and padding) are dropped
        local[j] = out.sample.graph.node_count();
        out.sample.graph.positions.push_back({z.m.at(j, 0) * params.coord_scale,
                                              z.m.at(j, 1) * params.coord_scale,
                                              z.m.at(j, 2) * params.coord_scale});
    }
    for (const auto& [a, b] : edges) out.sample.graph.add_edge(local[a], local[b]);
    out.sample.graph.normalize_edges();
    out.sample.features = decoded_features(out.sample.graph);
    return out;
}

FullZ prepend_start_token(const FullZ& z) {
    if (z.has_token) throw Error("prepend_start_token: token already present");
    FullZ out;
    out.has_token = true;
    out.m = nn::Tensor({z.m.rows() + 1, z.m.cols()});
    for (int c = 0; c < z.m.cols(); ++c) out.m.at(0, c) = kStartTokenValue;
    std::copy(z.m.v.begin(), z.m.v.end(), out.m.v.begin() + z.m.cols());
    return out;
}

FullZ strip_start_token(const FullZ& z) {
    if (!z.has_token) throw Error("strip_start_token: no token present");
    FullZ out;
    out.has_token = false;
    out.m = nn::Tensor({z.m.rows() - 1, z.m.cols()});
    std::copy(z.m.v.begin() + z.m.cols(), z.m.v.end(), out.m.v.begin());
    return out;
}

}  // namespace webgen
