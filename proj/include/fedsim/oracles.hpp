#pragma once

#include <span>
#include <vector>

#include "fedsim/dataset.hpp"
#include "fedsim/objective.hpp"
#include "fedsim/vecmath.hpp"

namespace fedsim {

// Independent checkers used by the `verify` subcommand and the test suite.
// Each one recomputes a quantity by a different route than the production
// code path it validates.

// Central-difference gradient of the batch loss.
ParamVector fd_gradient(const Objective& obj, const LabeledDataset& ds,
                        std::span<const int> rows, const ParamVector& theta, double step = 1e-5);

// |a - b| / max(|a|, |b|, floor); the robust vector-level relative error.
double vector_rel_error(const ParamVector& a, const ParamVector& b, double floor = 1e-8);

// Brute-force 2-d geometric median: exhaustive search on a cells x cells
// grid over the bounding box, re-gridded around the best cell `refinements`
// times. Never iterates a fixed point, so it cannot share a failure mode
// with the production solver.
struct GridSearchResult {
    ParamVector point;
    double objective = 0.0;
};
GridSearchResult grid_geomed_2d(const std::vector<ParamVector>& points, int cells = 400,
                                int refinements = 2);

}  // namespace fedsim
