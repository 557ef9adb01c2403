#pragma once

#include <vector>

#include "fedsim/dataset.hpp"
#include "fedsim/objective.hpp"
#include "fedsim/rng.hpp"
#include "fedsim/vecmath.hpp"

namespace fedsim {

// Degree of divergence between an upload g and the reference direction r:
//   lambda = c * (1 - cos(g, r)),  clamped to [0, 2c].
// An aligned upload gets 0, an opposed one 2c. c in [0, 1] tunes how hard
// misaligned updates are pulled toward the reference.
double dod(const ParamVector& g, const ParamVector& r, double c);

// Benign-setting calibration: blends g toward r while keeping g's length,
//   v = (1 - lambda) g + lambda (|g| / |r|) r.
// Degenerate norms fall back gracefully: |r| ~ 0 returns g unchanged,
// |g| ~ 0 returns g (the zero vector stays zero).
ParamVector modify_drag(const ParamVector& g, const ParamVector& r, double lambda);

// Byzantine-resilient calibration: rescales g to the reference's length and
// blends toward r,
//   v = (1 - lambda) (|r| / |g|) g + lambda r,
// so a hostile upload can never dominate by magnitude. |g| ~ 0 yields
// lambda * r; |r| ~ 0 yields the zero vector.
ParamVector modify_br(const ParamVector& g, const ParamVector& r, double lambda);

// Round-0 reference: plain mean of the seeding-pass uploads.
ParamVector reference_init(const std::vector<ParamVector>& uploads);

// Reference recursion: r_t = (1 - alpha) r_{t-1} + alpha delta_{t-1}.
ParamVector reference_step(const ParamVector& r_prev, const ParamVector& delta_prev, double alpha);

// Unrolled form of the recursion after t steps:
//   r_t = (1-alpha)^t g0 + sum_{i<t} alpha (1-alpha)^{t-i-1} delta_i.
// Kept independent of reference_step so each can check the other.
ParamVector closed_form_reference(const ParamVector& g0_mean,
                                  const std::vector<ParamVector>& deltas, double alpha, int t);

// Mean of the calibrated updates; throws ProtocolError if empty.
ParamVector aggregate_modified(const std::vector<ParamVector>& vs);

// Reference state carried across rounds by the benign-setting aggregator.
struct DragState {
    ParamVector r;           // current reference direction
    ParamVector delta_prev;  // last aggregated update
    double alpha = 0.25;
    double c = 0.1;
    int round = 0;

    // When retain_history is set, g0_mean and all deltas are kept and the
    // recursion is cross-checked against the closed form every round.
    bool retain_history = false;
    ParamVector g0_mean;
    std::vector<ParamVector> delta_history;
};

struct BrDragOptions {
    double stepsize = 0.01;
    int local_steps = 5;
    int batch_size = 10;
    bool robust_root = false;   // geometric median over per-sample gradients
    double weiszfeld_tol = 1e-8;
    int weiszfeld_max_iter = 200;
};

// Server-side reference: runs the same local SGD recipe the workers use,
// but on the server's root dataset, and returns theta_after - theta.
ParamVector root_reference(const Objective& obj, const LabeledDataset& root,
                           const ParamVector& theta, const BrDragOptions& opt, RngStream& rng);

// Per-round calibration diagnostics, aggregated over the selected cohort.
struct DodReport {
    std::vector<double> lambda;         // one per selected worker
    std::vector<double> cosine;         // cos(g_m, r)
    double lambda_mean = 0.0;
    double lambda_max = 0.0;
    double benign_cosine = 0.0;     // (1/S) sum over selected benign workers
    double malicious_cosine = 0.0;  // (1/S) sum over selected malicious workers
    double norm_ratio = 0.0;        // (1/S) sum_benign cos * |r| / |g|
    double benign_weight = 0.0;     // (1/S) sum_benign (1 - lambda) |r| / |g|
    bool has_malicious = false;
    bool has_benign = false;
};

DodReport compute_dod_report(const std::vector<ParamVector>& uploads,
                             const std::vector<bool>& upload_is_malicious,
                             const ParamVector& r, const std::vector<double>& lambda);

}  // namespace fedsim
