#pragma once

#include <vector>

#include "fedsim/vecmath.hpp"

namespace fedsim {

// Plain mean of the uploaded updates.
ParamVector fedavg_aggregate(const std::vector<ParamVector>& uploads);

// Proximal local step: theta - eta * (grad + mu * (theta - theta_global)).
ParamVector fedprox_local_step(const ParamVector& theta, const ParamVector& theta_global,
                               const ParamVector& grad, double eta, double mu);

// Control-variate local step: theta - eta * (grad - h_local + h_global).
ParamVector scaffold_local_step(const ParamVector& theta, const ParamVector& grad,
                                const ParamVector& h_local, const ParamVector& h_global,
                                double eta);

// Server and per-worker control variates.
struct ScaffoldState {
    ParamVector h;                  // global control
    std::vector<ParamVector> h_m;   // one per worker

    static ScaffoldState zeros(int workers, int dim);
};

// Refresh rule after a round: each selected worker's control becomes its
// first-batch gradient at the round's starting model, and the global
// control absorbs (1/workers) of every selected worker's change - the
// unselected majority keeps the global control moving slowly.
void scaffold_update_controls(ScaffoldState& st, const std::vector<int>& selected,
                              const std::vector<ParamVector>& first_grads, int workers);

// Mean update with an adaptive server stepsize
//   eta_g = max(1, sum |g_m|^2 / (2 S (|mean|^2 + epsilon))).
struct FedExpResult {
    double eta_g = 1.0;
    ParamVector delta;  // eta_g * mean(uploads)
};
FedExpResult fedexp_step(const std::vector<ParamVector>& uploads, double epsilon);

// Server-side lookahead momentum. Workers descend a penalty-augmented
// objective around the broadcast anchor; the server accumulates momentum
// from the mean upload.
struct FedAcgState {
    ParamVector momentum;    // lambda-discounted sum of mean uploads
    ParamVector prev_theta;  // model the last anchor was built from
    bool has_prev = false;
};

// Anchor broadcast for the coming round: prev_theta + lambda * momentum
// (round 0: the current model itself).
ParamVector fedacg_anchor(const FedAcgState& st, const ParamVector& theta, double lambda);

// Absorbs the round's uploads: m <- lambda m + mean(uploads);
// returns theta + mean(uploads).
ParamVector fedacg_server_update(FedAcgState& st, const ParamVector& theta,
                                 const std::vector<ParamVector>& uploads, double lambda);

// Trust-weighted rescaling against a server reference:
//   g~ = max(0, cos(g, r)) * |g| * r / |r|.
// Oppositely-aligned uploads are zeroed; the rest keep their own length
// but point along the reference.
ParamVector fltrust_modify(const ParamVector& g, const ParamVector& r);

// Weiszfeld fixed-point iteration for the geometric median,
//   y <- sum_i (x_i / d_i) / sum_i (1 / d_i),  d_i = max(|x_i - y|, floor),
// started at the mean. The objective sum_i |x_i - y| is recorded each
// iteration; converged=false means max_iter hit and `point` is the best
// iterate seen.
struct WeiszfeldResult {
    ParamVector point;
    int iterations = 0;
    bool converged = false;
    std::vector<double> objective_trace;  // objective at start + after each step
};
WeiszfeldResult weiszfeld_geomed(const std::vector<ParamVector>& points, double tol = 1e-8,
                                 int max_iter = 200);
ParamVector weiszfeld_geomed_point(const std::vector<ParamVector>& points, double tol = 1e-8,
                                   int max_iter = 200);

double geomed_objective(const std::vector<ParamVector>& points, const ParamVector& y);

// Robust aggregation of full local models: the new model is the geometric
// median of {theta + g_m}.
ParamVector rfa_aggregate(const ParamVector& theta, const std::vector<ParamVector>& uploads,
                          double tol = 1e-8, int max_iter = 200);

// Robust aggregation of the updates themselves: theta + geomed({g_m}).
ParamVector raga_aggregate(const ParamVector& theta, const std::vector<ParamVector>& uploads,
                           double tol = 1e-8, int max_iter = 200);

}  // namespace fedsim
