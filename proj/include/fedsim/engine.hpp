#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "fedsim/attacks.hpp"
#include "fedsim/config.hpp"
#include "fedsim/dataset.hpp"
#include "fedsim/objective.hpp"
#include "fedsim/rng.hpp"
#include "fedsim/vecmath.hpp"

namespace fedsim {

// Everything a run needs besides the evolving model: the objective, the
// per-worker shards (already label-flipped where the attack says so), the
// clean pools used for evaluation, the server's root dataset, and the
// malicious-worker designation.
struct SimSetup {
    std::shared_ptr<Objective> objective;
    std::vector<LabeledDataset> worker_data;
    LabeledDataset train_pool;  // clean; loss is always measured here
    LabeledDataset test_pool;   // clean held-out rows; empty for non-classifiers
    LabeledDataset root;        // server-side class-balanced sample
    AttackPlan plan;
};

// Deterministic in cfg alone. Draws only from the partition and attack
// seeds (plus the objective seed for data generation).
SimSetup build_setup(const FedConfig& cfg);

// S distinct worker ids, uniform over subsets, ascending.
std::vector<int> select_workers(int workers, int cohort, RngStream& rng);

// How a local SGD step folds in the aggregator's correction term.
enum class LocalRule {
    Sgd,         // theta -= eta * grad
    Prox,        // theta -= eta * (grad + mu * (theta - anchor))
    Scaffold,    // theta -= eta * (grad - control_local + control_global)
    AcgPenalty,  // theta -= eta * (grad + beta * (theta - anchor))
};

struct LocalOptions {
    LocalRule rule = LocalRule::Sgd;
    int steps = 1;
    int batch_size = 1;
    double stepsize = 0.01;
    double prox_mu = 0.0;
    double acg_beta = 0.0;
    const ParamVector* anchor = nullptr;          // Prox / AcgPenalty
    const ParamVector* control_local = nullptr;   // Scaffold
    const ParamVector* control_global = nullptr;  // Scaffold
};

struct LocalResult {
    ParamVector update;      // theta_after - theta_before
    ParamVector first_grad;  // raw batch gradient at the starting model
};

LocalResult local_train(const Objective& obj, const LabeledDataset& data,
                        const ParamVector& theta0, const LocalOptions& opt, RngStream& batches);

struct RoundRecord {
    int round = 0;
    std::optional<double> loss;      // clean pooled train loss, eval rounds only
    std::optional<double> accuracy;  // clean held-out accuracy, classifiers only
    double delta_norm = 0.0;
    std::optional<double> lambda_mean;
    std::optional<double> lambda_max;
    std::optional<double> benign_cosine;     // y^t
    std::optional<double> malicious_cosine;  // x^t
    std::optional<double> norm_ratio;        // rho^t
    std::optional<double> benign_weight;     // b^t
    double attack_w = 0.0;                   // |A intersect S^t| / S
    std::vector<int> selected;
    double wall_ms = 0.0;  // measurement only; excluded from metric files
};

struct RunHooks {
    // Called with the updated model after every round.
    std::function<void(int round, const ParamVector& theta)> on_theta;
    // Per-round divergence scale for the Byzantine-resilient aggregator;
    // overrides the constant c_t from the config.
    std::function<double(int round)> c_t_schedule;
};

// Runs T rounds. Results are identical for any `threads` value; threads > 1
// only parallelizes local training within a round.
std::vector<RoundRecord> run_experiment(const FedConfig& cfg, int threads = 1,
                                        const RunHooks* hooks = nullptr);

// Same, reusing a prebuilt setup (the setup is deterministic in cfg, so
// this is purely a time saver for repeated runs).
std::vector<RoundRecord> run_experiment(const FedConfig& cfg, const SimSetup& setup,
                                        int threads = 1, const RunHooks* hooks = nullptr);

}  // namespace fedsim
