#pragma once

#include <cstdint>
#include <string>

namespace fedsim {

enum class AggregatorKind {
    FedAvg,
    FedProx,
    Scaffold,
    FedExp,
    FedAcg,
    FlTrust,
    Rfa,
    Raga,
    Drag,
    BrDrag,
};

enum class AttackKind {
    None,
    NoiseInjection,
    SignFlip,
    LabelFlip,
};

enum class ObjectiveKind {
    Quadratic,
    Logistic,
    Mlp,
};

std::string to_string(AggregatorKind k);
std::string to_string(AttackKind k);
std::string to_string(ObjectiveKind k);
AggregatorKind aggregator_from_string(const std::string& s);  // throws ConfigError
AttackKind attack_from_string(const std::string& s);
ObjectiveKind objective_from_string(const std::string& s);

// Independent base seeds; every random decision hangs off exactly one of
// them (plus a usage tag), so e.g. changing the attack seed can never
// perturb batch order or worker selection.
struct SeedPack {
    std::uint64_t partition = 101;
    std::uint64_t selection = 202;
    std::uint64_t batches = 303;
    std::uint64_t attack = 404;
};

// Derives the four stream seeds from one master seed.
SeedPack seeds_from_master(std::uint64_t master);

struct ObjectiveConfig {
    ObjectiveKind kind = ObjectiveKind::Logistic;
    std::uint64_t seed = 9001;

    // Classification task (logistic / mlp).
    int samples = 2000;
    int features = 15;
    int classes = 10;
    double class_separation = 2.0;
    double test_fraction = 0.2;
    int hidden_units = 16;
    std::string csv_path;  // when set, load data instead of generating it

    // Quadratic suite: per-worker strongly convex components.
    int dimension = 10;
    int samples_per_worker = 32;
    double curvature_min = 0.5;
    double curvature_max = 3.0;
    double optima_spread = 1.0;
    double anchor_noise = 0.0;
    double theta0_fill = 0.0;
};

struct AggregatorConfig {
    AggregatorKind kind = AggregatorKind::FedAvg;

    // Divergence-based adaptive aggregation.
    double alpha = 0.25;    // reference momentum mixing
    double c = 0.1;         // divergence scale, benign setting
    double c_t = 0.5;       // divergence scale, Byzantine-resilient variant
    bool keep_reference_history = false;  // retain history and self-check the
                                          // reference recursion each round

    // Server-side root dataset (Byzantine-resilient variant and trust-weighted
    // baseline).
    double root_fraction = 0.1;
    int root_max = 3000;
    bool root_robust = false;  // geometric median over per-sample gradients
                               // instead of the batch mean

    // Baseline hyperparameters.
    double prox_mu = 0.2;
    double exp_epsilon = 0.001;
    double acg_beta = 0.2;
    double acg_lambda = 0.85;

    // Geometric-median solver.
    double weiszfeld_tol = 1e-8;
    int weiszfeld_max_iter = 200;
};

struct AttackConfig {
    AttackKind kind = AttackKind::None;
    double ratio = 0.0;         // fraction of workers that are malicious
    double noise_scale = 3.0;   // variance of the Gaussian factor by default
    bool noise_scale_is_std = false;
    double label_fraction = 0.5;
};

struct FedConfig {
    int rounds = 200;
    int workers = 40;
    int selected = 10;
    int local_steps = 5;
    int batch_size = 10;
    double stepsize = 0.01;
    int eval_stride = 1;
    double dirichlet_beta = 0.1;

    ObjectiveConfig objective;
    AggregatorConfig aggregator;
    AttackConfig attack;
    SeedPack seeds;

    // Throws ConfigError naming the offending field.
    void validate() const;
};

// Sectioned key=value text ([experiment], [objective], [partition],
// [aggregator], [attack], [seeds]; '#' comments). Unknown sections or keys
// are rejected with a line number. The result is validated.
FedConfig parse_config_text(const std::string& text, const std::string& origin = "<config>");
FedConfig load_config(const std::string& path);

// Canonical round-trippable dump (same format load_config reads).
std::string dump_config(const FedConfig& cfg);

}  // namespace fedsim
