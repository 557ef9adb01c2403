#include "fedsim/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fedsim/baselines.hpp"
#include "fedsim/errors.hpp"

namespace fedsim {

ParamVector fd_gradient(const Objective& obj, const LabeledDataset& ds,
                        std::span<const int> rows, const ParamVector& theta, double step) {
    ParamVector grad(theta.size());
    ParamVector probe = theta;
    for (std::size_t i = 0; i < theta.size(); ++i) {
        probe[i] = theta[i] + step;
        const double up = obj.batch_loss(probe, ds, rows);
        probe[i] = theta[i] - step;
        const double down = obj.batch_loss(probe, ds, rows);
        probe[i] = theta[i];
        grad[i] = (up - down) / (2.0 * step);
    }
    return grad;
}

double vector_rel_error(const ParamVector& a, const ParamVector& b, double floor) {
    check_same_dim(a, b, "vector_rel_error");
    const double denom = std::max({norm2(a), norm2(b), floor});
    return norm2(sub(a, b)) / denom;
}

GridSearchResult grid_geomed_2d(const std::vector<ParamVector>& points, int cells,
                                int refinements) {
    if (points.empty()) throw ProtocolError("grid_geomed_2d: empty point set");
    for (const auto& p : points) {
        if (p.size() != 2) throw DimensionError("grid_geomed_2d: points must be 2-d");
    }

    double lo_x = points[0][0], hi_x = points[0][0];
    double lo_y = points[0][1], hi_y = points[0][1];
    for (const auto& p : points) {
        lo_x = std::min(lo_x, p[0]);
        hi_x = std::max(hi_x, p[0]);
        lo_y = std::min(lo_y, p[1]);
        hi_y = std::max(hi_y, p[1]);
    }
    // The geometric median lies in the convex hull; pad a little anyway so
    // grid refinement never clips the optimum at the box edge.
    const double pad_x = std::max(1e-6, 0.05 * (hi_x - lo_x));
    const double pad_y = std::max(1e-6, 0.05 * (hi_y - lo_y));
    lo_x -= pad_x;
    hi_x += pad_x;
    lo_y -= pad_y;
    hi_y += pad_y;

    GridSearchResult best;
    best.point = {0.0, 0.0};
    best.objective = std::numeric_limits<double>::infinity();
    for (int pass = 0; pass <= refinements; ++pass) {
        const double step_x = (hi_x - lo_x) / cells;
        const double step_y = (hi_y - lo_y) / cells;
        double best_x = lo_x, best_y = lo_y;
        for (int ix = 0; ix <= cells; ++ix) {
            const double x = lo_x + ix * step_x;
            for (int iy = 0; iy <= cells; ++iy) {
                const double y = lo_y + iy * step_y;
                double obj = 0.0;
                for (const auto& p : points) {
                    const double dx = p[0] - x;
                    const double dy = p[1] - y;
                    obj += std::sqrt(dx * dx + dy * dy);
                }
                if (obj < best.objective) {
                    best.objective = obj;
                    best_x = x;
                    best_y = y;
                }
            }
        }
        best.point = {best_x, best_y};
        // Zoom into a 3x3-cell neighbourhood of the winner.
        lo_x = best_x - 1.5 * step_x;
        hi_x = best_x + 1.5 * step_x;
        lo_y = best_y - 1.5 * step_y;
        hi_y = best_y + 1.5 * step_y;
    }
    return best;
}

}  // namespace fedsim
