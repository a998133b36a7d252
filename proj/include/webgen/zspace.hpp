#pragma once

#include <cmath>

#include "webgen/dataset.hpp"
#include "webgen/nn/tensor.hpp"

namespace webgen {

inline constexpr int kMaxNeighbors = 6;                      // Neigh_max
inline constexpr int kSparseWidth = 3 + kMaxNeighbors;       // [x y z n1..n6]
inline constexpr int kFullWidth = 3 + kMaxNodes;             // [x y z a1..a64]
inline constexpr double kStartTokenValue = 2.0;              // outside the data range

// Maps discrete node references {0..N} (0 = no neighbor) into [-1, 1] and
// back. Halfway values round to the nearest even integer.
struct AnalogIndexCodec {
    int max_nodes = kMaxNodes;

    double analog(int v) const { return 2.0 * v / max_nodes - 1.0; }
    int decode(double a) const {
        double r = std::nearbyint((a + 1.0) * max_nodes / 2.0);
        if (r < 0.0) return 0;
        if (r > max_nodes) return max_nodes;
        return static_cast<int>(r);
    }
};

// Row-per-node matrix [kMaxNodes x kSparseWidth]; row j holds normalized
// coordinates followed by six analog neighbor ids (1-based, 0 = none).
// Padding rows: coordinates 0, neighbor slots analog(0) = -1.
struct SparseZ {
    nn::Tensor m{{kMaxNodes, kSparseWidth}};
};

// Row-per-node matrix [kMaxNodes x kFullWidth] (one extra leading row when a
// start token is attached); adjacency entries are +1/-1, padding rows -1.
struct FullZ {
    nn::Tensor m{{kMaxNodes, kFullWidth}};
    bool has_token = false;

    int data_rows() const { return m.rows() - (has_token ? 1 : 0); }
};

struct DecodeResult {
    GraphSample sample;
    int repairs = 0;  // dangling or self-referencing neighbor entries dropped
};

// Throws when the sample exceeds kMaxNodes nodes or kMaxNeighbors degree.
SparseZ encode_sparse(const GraphSample& s, const NormalizationParams& params);

// Tolerates arbitrary (noisy) input: rows whose decoded neighbor slots are
// all zero are padding and dropped; edges are the union of both endpoints'
// neighbor lists; invalid references are dropped and counted.
DecodeResult decode_sparse(const SparseZ& z, const NormalizationParams& params);

FullZ encode_full(const GraphSample& s, const NormalizationParams& params);

// Edge (j,k) iff the symmetrized adjacency (a_jk + a_kj)/2 is positive;
// isolated rows (padding included) are dropped.
DecodeResult decode_full(const FullZ& z, const NormalizationParams& params);

FullZ prepend_start_token(const FullZ& z);
FullZ strip_start_token(const FullZ& z);

}  // namespace webgen
