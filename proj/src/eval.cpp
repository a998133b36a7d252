#include "webgen/eval.hpp"

#include <cmath>
#include <limits>

#include "webgen/stats.hpp"

namespace webgen {

EvalReport evaluate(const GraphGenerator& generate,
                    const std::vector<std::array<double, 7>>& targets_norm,
                    const NormalizationParams& params) {
    if (targets_norm.empty()) throw Error("evaluate: empty target set");

    EvalReport report;
    for (size_t i = 0; i < targets_norm.size(); ++i) {
        Graph g = generate(targets_norm[i], static_cast<int>(i));
        ++report.generated;
        if (g.node_count() == 0 || g.edge_count() == 0) {
            ++report.empty_count;
            continue;
        }
        auto measured = params.normalize(conditioning_vector(g));
        for (int f = 0; f < 7; ++f) {
            report.scatter.push_back({f, targets_norm[i][f], measured[f]});
        }
    }
    if (report.scatter.empty()) {
        report.degenerate = true;
        report.r2.fill(std::numeric_limits<double>::quiet_NaN());
        report.aggregate_r2 = std::numeric_limits<double>::quiet_NaN();
        return report;
    }

    double pooled_res = 0.0, pooled_tot = 0.0;
    // Pooled totals use per-feature means so features with different target
    // spreads stay commensurate.
    for (int f = 0; f < 7; ++f) {
        double mean = 0.0;
        int n = 0;
        for (const auto& s : report.scatter) {
            if (s.feature != f) continue;
            mean += s.target;
            ++n;
        }
        mean /= n;
        double ss_res = 0.0, ss_tot = 0.0;
        for (const auto& s : report.scatter) {
            if (s.feature != f) continue;
            ss_res += (s.measured - s.target) * (s.measured - s.target);
            ss_tot += (s.target - mean) * (s.target - mean);
        }
        report.r2[f] = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot
                                    : std::numeric_limits<double>::quiet_NaN();
        pooled_res += ss_res;
        pooled_tot += ss_tot;
    }
    report.aggregate_r2 = pooled_tot > 0.0 ? 1.0 - pooled_res / pooled_tot
                                           : std::numeric_limits<double>::quiet_NaN();
    return report;
}

}  // namespace webgen
