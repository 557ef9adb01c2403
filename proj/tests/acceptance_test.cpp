// End-to-end acceptance battery. Each criterion prints exactly one
// PASS/FAIL line; the process exits nonzero if any of them fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "fedsim/baselines.hpp"
#include "fedsim/config.hpp"
#include "fedsim/drag.hpp"
#include "fedsim/engine.hpp"
#include "fedsim/metrics_io.hpp"
#include "fedsim/objective.hpp"
#include "fedsim/oracles.hpp"
#include "fedsim/rng.hpp"
#include "fedsim/vecmath.hpp"

using namespace fedsim;

namespace {

ParamVector random_vec(RngStream& rng, int d, double scale = 1.0) {
    ParamVector v(static_cast<std::size_t>(d));
    for (auto& x : v) x = scale * rng.normal();
    return v;
}

// --- criterion 1: algebraic properties of the calibration rules ---------

bool algebraic_suite(std::string& detail) {
    RngStream rng(20260101);
    for (int trial = 0; trial < 1000; ++trial) {
        ParamVector g = random_vec(rng, 8);
        ParamVector r = random_vec(rng, 8);
        double c = rng.uniform();
        double lam = dod(g, r, c);

        if (lam < 0.0 || lam > 2.0 * c) {
            detail = "divergence degree escaped [0, 2c]";
            return false;
        }

        double k = std::exp(2.0 * rng.normal());
        double m = std::exp(2.0 * rng.normal());
        if (std::abs(dod(scaled(g, k), scaled(r, m), c) - lam) > 1e-12) {
            detail = "divergence degree is not scale-invariant at 1e-12";
            return false;
        }

        double cs = cosine(g, r);
        ParamVector v = modify_drag(g, r, lam);
        ParamVector r_hat = scaled(r, 1.0 / norm2(r));
        double gain = dot(sub(v, g), r_hat);
        double expected = c * (1.0 - cs) * (1.0 - cs) * norm2(g);
        if (std::abs(gain - expected) > 1e-10) {
            detail = "alignment gain deviates from c(1-cos)^2|g| at 1e-10";
            return false;
        }

        ParamVector vb = modify_br(g, r, lam);
        double vn = norm2(vb);
        double rn = norm2(r);
        if (vn > (std::abs(1.0 - lam) + lam) * rn + 1e-12) {
            detail = "norm bound |v| <= (|1-l|+l)|r| violated";
            return false;
        }
        if (lam <= 1.0 && vn > rn + 1e-12) {
            detail = "norm bound |v| <= |r| violated for l <= 1";
            return false;
        }
    }
    return true;
}

// --- criterion 2: closed-form reference equals the iterated recursion ---

bool closed_form_vs_recursion(std::string& detail) {
    RngStream rng(20260102);
    for (double alpha : {0.01, 0.25, 0.75}) {
        ParamVector g0 = random_vec(rng, 10);
        std::vector<ParamVector> deltas;
        ParamVector r = g0;
        for (int t = 1; t <= 100; ++t) {
            deltas.push_back(random_vec(rng, 10));
            r = reference_step(r, deltas.back(), alpha);
            ParamVector closed = closed_form_reference(g0, deltas, alpha, t);
            for (int i = 0; i < 10; ++i) {
                if (std::abs(r[i] - closed[i]) > 1e-9) {
                    std::ostringstream os;
                    os << "alpha=" << alpha << " t=" << t << " coordinate gap "
                       << std::abs(r[i] - closed[i]);
                    detail = os.str();
                    return false;
                }
            }
        }
    }
    return true;
}

// --- criterion 3: zero divergence scale reduces to mean aggregation -----

FedConfig reduction_config() {
    FedConfig cfg;
    cfg.rounds = 50;
    cfg.workers = 10;
    cfg.selected = 5;
    cfg.local_steps = 3;
    cfg.batch_size = 5;
    cfg.stepsize = 0.05;
    cfg.dirichlet_beta = 0.5;
    cfg.objective.kind = ObjectiveKind::Logistic;
    cfg.objective.samples = 500;
    cfg.objective.features = 6;
    cfg.objective.classes = 3;
    cfg.objective.class_separation = 2.0;
    cfg.objective.seed = 20260103;
    return cfg;
}

bool reduction_to_mean(std::string& detail) {
    auto capture = [](const FedConfig& cfg) {
        std::vector<ParamVector> thetas;
        RunHooks hooks;
        hooks.on_theta = [&](int, const ParamVector& th) { thetas.push_back(th); };
        run_experiment(cfg, 1, &hooks);
        return thetas;
    };

    FedConfig avg = reduction_config();
    avg.aggregator.kind = AggregatorKind::FedAvg;
    FedConfig drg = reduction_config();
    drg.aggregator.kind = AggregatorKind::Drag;
    drg.aggregator.c = 0.0;

    std::vector<ParamVector> a = capture(avg);
    std::vector<ParamVector> b = capture(drg);
    if (a.size() != b.size()) {
        detail = "trajectory lengths differ";
        return false;
    }
    for (std::size_t t = 0; t < a.size(); ++t) {
        for (std::size_t i = 0; i < a[t].size(); ++i) {
            if (std::abs(a[t][i] - b[t][i]) > 1e-12) {
                std::ostringstream os;
                os << "round " << t << " coordinate " << i << " gap "
                   << std::abs(a[t][i] - b[t][i]);
                detail = os.str();
                return false;
            }
        }
    }
    return true;
}

// --- criterion 4: geometric-median solver vs brute-force grid -----------

bool geomed_vs_grid(std::string& detail) {
    RngStream rng(20260104);
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<ParamVector> pts;
        for (int i = 0; i < 7; ++i) pts.push_back(random_vec(rng, 2, 3.0));
        WeiszfeldResult res = weiszfeld_geomed(pts);
        for (std::size_t i = 1; i < res.objective_trace.size(); ++i) {
            if (res.objective_trace[i] > res.objective_trace[i - 1] + 1e-12) {
                detail = "objective increased between iterations";
                return false;
            }
        }
        GridSearchResult grid = grid_geomed_2d(pts);
        double gap = std::abs(geomed_objective(pts, res.point) - grid.objective);
        if (gap > 1e-3) {
            std::ostringstream os;
            os << "trial " << trial << " objective gap " << gap;
            detail = os.str();
            return false;
        }
    }
    return true;
}

// --- criterion 5: analytic gradients vs central finite differences ------

bool gradient_checks(std::string& detail) {
    auto check = [&](const Objective& obj, const LabeledDataset& ds, std::uint64_t seed,
                     const char* name) {
        RngStream rng(seed);
        std::vector<int> rows;
        for (int i = 0; i < std::min(8, ds.size()); ++i) {
            rows.push_back(rng.uniform_index(ds.size()));
        }
        for (int p = 0; p < 20; ++p) {
            ParamVector theta(static_cast<std::size_t>(obj.dim()));
            for (auto& v : theta) v = 0.6 * rng.normal();
            ParamVector analytic = obj.batch_grad(theta, ds, rows);
            ParamVector numeric = fd_gradient(obj, ds, rows, theta);
            double err = vector_rel_error(analytic, numeric);
            if (err > 1e-5) {
                std::ostringstream os;
                os << name << " point " << p << " relative error " << err;
                detail = os.str();
                return false;
            }
        }
        return true;
    };

    ObjectiveConfig oc;
    oc.kind = ObjectiveKind::Quadratic;
    oc.dimension = 5;
    oc.samples_per_worker = 6;
    oc.anchor_noise = 0.3;  // anchors off-centre so per-sample terms differ
    oc.seed = 20260105;
    QuadraticSuite suite = make_quadratic_suite(oc, 3);
    if (!check(*suite.objective, suite.pooled, 1, "quadratic")) return false;

    LabeledDataset cls = make_synthetic_classification(80, 5, 3, 2.0, 20260106);
    if (!check(LogisticObjective(5, 3), cls, 2, "logistic")) return false;
    if (!check(MlpObjective(5, 6, 3, 20260107), cls, 3, "mlp")) return false;
    return true;
}

// --- criteria 6/7: full-scale training protocol on synthetic data -------

FedConfig protocol_config(std::uint64_t master_seed) {
    FedConfig cfg;
    cfg.rounds = 300;
    cfg.workers = 40;
    cfg.selected = 10;
    cfg.local_steps = 5;
    cfg.batch_size = 10;
    cfg.stepsize = 0.01;
    cfg.eval_stride = 10;  // the final round is always evaluated
    cfg.dirichlet_beta = 0.1;
    cfg.objective.kind = ObjectiveKind::Logistic;
    cfg.objective.samples = 2000;
    cfg.objective.features = 15;
    cfg.objective.classes = 10;
    cfg.objective.class_separation = 2.0;
    cfg.objective.seed = 9001;
    cfg.seeds = seeds_from_master(master_seed);
    return cfg;
}

struct FinalMetrics {
    double loss = 0.0;
    double accuracy = 0.0;
    double initial_loss = 0.0;
};

FinalMetrics run_final(const FedConfig& cfg) {
    SimSetup setup = build_setup(cfg);
    FinalMetrics out;
    out.initial_loss =
        evaluate(*setup.objective, setup.objective->initial_theta(), setup.train_pool).loss;
    std::vector<RoundRecord> records = run_experiment(cfg, setup);
    const RoundRecord& last = records.back();
    out.loss = last.loss.value_or(std::nan(""));
    out.accuracy = last.accuracy.value_or(std::nan(""));
    return out;
}

bool drift_mitigation(std::string& detail) {
    double acc_drag = 0.0, acc_avg = 0.0, loss_drag = 0.0, loss_avg = 0.0;
    const std::uint64_t seeds[] = {1, 2, 3};
    for (std::uint64_t s : seeds) {
        FedConfig drg = protocol_config(s);
        drg.aggregator.kind = AggregatorKind::Drag;
        drg.aggregator.alpha = 0.25;
        drg.aggregator.c = 0.25;
        FinalMetrics fd = run_final(drg);
        acc_drag += fd.accuracy / 3.0;
        loss_drag += fd.loss / 3.0;

        FedConfig avg = protocol_config(s);
        avg.aggregator.kind = AggregatorKind::FedAvg;
        FinalMetrics fa = run_final(avg);
        acc_avg += fa.accuracy / 3.0;
        loss_avg += fa.loss / 3.0;
    }
    std::ostringstream os;
    os << "test acc " << acc_drag << " vs " << acc_avg << ", train loss " << loss_drag
       << " vs " << loss_avg;
    detail = os.str();
    return acc_drag >= acc_avg && loss_drag <= loss_avg;
}

bool byzantine_resilience(std::string& detail) {
    auto attacked = [](std::uint64_t s, AggregatorKind kind) {
        FedConfig cfg = protocol_config(s);
        cfg.aggregator.kind = kind;
        cfg.aggregator.c_t = 0.5;
        cfg.attack.kind = AttackKind::SignFlip;
        cfg.attack.ratio = 0.6;
        return cfg;
    };

    double br_loss = 0.0, avg_loss = 0.0, rfa_loss = 0.0, raga_loss = 0.0, initial = 0.0;
    for (std::uint64_t s : {1ULL, 2ULL, 3ULL}) {
        FinalMetrics br = run_final(attacked(s, AggregatorKind::BrDrag));
        br_loss += br.loss / 3.0;
        initial += br.initial_loss / 3.0;
        avg_loss += run_final(attacked(s, AggregatorKind::FedAvg)).loss / 3.0;
        rfa_loss += run_final(attacked(s, AggregatorKind::Rfa)).loss / 3.0;
        raga_loss += run_final(attacked(s, AggregatorKind::Raga)).loss / 3.0;
    }
    std::ostringstream os;
    os << "losses: initial " << initial << ", resilient " << br_loss << ", mean " << avg_loss
       << ", median-of-models " << rfa_loss << ", median-of-updates " << raga_loss;
    detail = os.str();
    return br_loss < initial && br_loss < avg_loss && rfa_loss > br_loss && raga_loss > br_loss;
}

// --- criterion 8: serial and parallel runs write identical bytes --------

bool parallel_determinism(std::string& detail) {
    FedConfig cfg = protocol_config(1);
    cfg.rounds = 60;
    cfg.eval_stride = 1;
    cfg.aggregator.kind = AggregatorKind::Drag;
    cfg.attack.kind = AttackKind::NoiseInjection;
    cfg.attack.ratio = 0.3;

    // At least 4 threads even on a single-core host, so the threaded code
    // path is genuinely exercised rather than collapsing back to serial.
    unsigned hw = std::thread::hardware_concurrency();
    int max_threads = std::max(4, static_cast<int>(hw));
    std::string serial = metrics_to_jsonl(run_experiment(cfg, 1));
    std::string parallel = metrics_to_jsonl(run_experiment(cfg, max_threads));
    if (serial != parallel) {
        detail = "metrics differ between 1 and " + std::to_string(max_threads) + " threads";
        return false;
    }
    detail = std::to_string(max_threads) + " threads";
    return true;
}

// --- criterion 9: the attack seed is isolated from benign randomness ----

bool attack_stream_isolation(std::string& detail) {
    FedConfig cfg = protocol_config(1);
    cfg.rounds = 30;
    cfg.eval_stride = 1;
    cfg.aggregator.kind = AggregatorKind::BrDrag;
    cfg.attack.kind = AttackKind::NoiseInjection;
    cfg.attack.ratio = 0.0;

    FedConfig toggled = cfg;
    toggled.seeds.attack = cfg.seeds.attack + 123456789;

    if (metrics_to_jsonl(run_experiment(cfg)) != metrics_to_jsonl(run_experiment(toggled))) {
        detail = "toggling the attack seed changed benign metrics";
        return false;
    }
    return true;
}

struct Criterion {
    int id;
    const char* label;
    double budget_seconds;
    std::function<bool(std::string&)> fn;
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {1, "calibration algebra (divergence range, scale invariance, alignment gain, norm bounds)",
         1.0, algebraic_suite},
        {2, "reference closed form equals iterated recursion (1e-9, 100 rounds)", 1.0,
         closed_form_vs_recursion},
        {3, "zero divergence scale reproduces mean aggregation (1e-12, 50 rounds)", 5.0,
         reduction_to_mean},
        {4, "geometric median matches brute-force grid search (1e-3, 5 trials)", 5.0,
         geomed_vs_grid},
        {5, "analytic gradients match finite differences (1e-5, 3 objectives x 20 points)", 10.0,
         gradient_checks},
        {6, "calibrated aggregation beats plain mean under heterogeneity (3 seeds)", 120.0,
         drift_mitigation},
        {7, "resilient variant survives 60% sign flipping; medians degrade (3 seeds)", 180.0,
         byzantine_resilience},
        {8, "serial and maximally parallel runs write identical bytes", 120.0,
         parallel_determinism},
        {9, "attack seed is isolated from the benign path", 60.0, attack_stream_isolation},
    };

    int failures = 0;
    for (const auto& crit : criteria) {
        std::string detail;
        const auto start = std::chrono::steady_clock::now();
        bool ok = false;
        try {
            ok = crit.fn(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_budget = elapsed < crit.budget_seconds;
        const bool pass = ok && in_budget;
        if (!pass) ++failures;

        std::printf("criterion %d: %s (%.2fs%s) - %s%s%s\n", crit.id, pass ? "PASS" : "FAIL",
                    elapsed, in_budget ? "" : ", over budget", crit.label,
                    detail.empty() ? "" : ": ", detail.c_str());
        std::fflush(stdout);
    }

    if (failures > 0) {
        std::printf("%d of %zu criteria failed\n", failures, criteria.size());
        return 1;
    }
    std::printf("all %zu criteria passed\n", criteria.size());
    return 0;
}
