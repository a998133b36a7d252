#pragma once

#include <array>
#include <functional>
#include <vector>

#include "webgen/dataset.hpp"

namespace webgen {

// Scatter record: one measured feature of one generated graph against its
// conditioning target, both in normalized space.
struct ScatterPoint {
    int feature;
    double target;
    double measured;
};

struct EvalReport {
    std::array<double, 7> r2{};  // per-feature
    double aggregate_r2 = 0.0;   // pooled over all features
    int generated = 0;
    int empty_count = 0;         // generations that decoded to empty graphs
    bool degenerate = false;     // nothing usable was generated
    std::vector<ScatterPoint> scatter;
};

using GraphGenerator = std::function<Graph(const std::array<double, 7>& cond_norm, int index)>;

// Generates one graph per target conditioning vector, measures the produced
// features, and reports per-feature and pooled R^2 in normalized space.
EvalReport evaluate(const GraphGenerator& generate,
                    const std::vector<std::array<double, 7>>& targets_norm,
                    const NormalizationParams& params);

}  // namespace webgen
