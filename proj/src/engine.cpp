#include "fedsim/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <string>
#include <thread>

#include "fedsim/baselines.hpp"
#include "fedsim/drag.hpp"
#include "fedsim/errors.hpp"

namespace fedsim {

namespace {

// Blocked parallel map; the first exception wins and is rethrown after join.
void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
    if (n <= 0) return;
    threads = std::min(threads, n);
    if (threads <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::mutex err_mutex;
    std::exception_ptr first_error;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int tid = 0; tid < threads; ++tid) {
        pool.emplace_back([&, tid] {
            for (int i = tid; i < n; i += threads) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mutex);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

int root_size_for(const FedConfig& cfg, int train_size) {
    const int want = static_cast<int>(std::lround(cfg.aggregator.root_fraction * train_size));
    return std::max(1, std::min(cfg.aggregator.root_max, want));
}

}  // namespace

std::vector<int> select_workers(int workers, int cohort, RngStream& rng) {
    if (cohort > workers) throw ConfigError("selected: cohort exceeds worker count");
    if (cohort < 1) throw ConfigError("selected: cohort must be >= 1");
    return rng.sample_without_replacement(workers, cohort);
}

LocalResult local_train(const Objective& obj, const LabeledDataset& data,
                        const ParamVector& theta0, const LocalOptions& opt, RngStream& batches) {
    if (data.size() == 0) throw DataError("local_train: worker dataset is empty");
    if (static_cast<int>(theta0.size()) != obj.dim()) {
        throw DimensionError("local_train: theta dimension does not match objective");
    }
    LocalResult res;
    ParamVector theta = theta0;
    for (int u = 0; u < opt.steps; ++u) {
        const MiniBatch batch = sample_batch(data, opt.batch_size, batches);
        ParamVector grad = obj.batch_grad(theta, data, batch.indices);
        if (u == 0) res.first_grad = grad;
        switch (opt.rule) {
            case LocalRule::Sgd:
                break;
            case LocalRule::Prox:
                axpy(opt.prox_mu, sub(theta, *opt.anchor), grad);
                break;
            case LocalRule::Scaffold:
                for (std::size_t i = 0; i < grad.size(); ++i) {
                    grad[i] += (*opt.control_global)[i] - (*opt.control_local)[i];
                }
                break;
            case LocalRule::AcgPenalty:
                axpy(opt.acg_beta, sub(theta, *opt.anchor), grad);
                break;
        }
        axpy(-opt.stepsize, grad, theta);
    }
    res.update = sub(theta, theta0);
    return res;
}

SimSetup build_setup(const FedConfig& cfg) {
    cfg.validate();
    SimSetup setup;

    if (cfg.objective.kind == ObjectiveKind::Quadratic) {
        QuadraticSuite suite = make_quadratic_suite(cfg.objective, cfg.workers);
        setup.objective = suite.objective;
        setup.worker_data = std::move(suite.worker_data);
        setup.train_pool = std::move(suite.pooled);
    } else {
        LabeledDataset full =
            cfg.objective.csv_path.empty()
                ? make_synthetic_classification(cfg.objective.samples, cfg.objective.features,
                                                cfg.objective.classes,
                                                cfg.objective.class_separation, cfg.objective.seed)
                : load_csv_dataset(cfg.objective.csv_path);
        TrainTestSplit split = split_train_test(full, cfg.objective.test_fraction);
        setup.objective = make_classifier_objective(cfg.objective, full);
        setup.train_pool = std::move(split.train);
        setup.test_pool = std::move(split.test);
        setup.worker_data = dirichlet_partition(setup.train_pool, cfg.workers,
                                                cfg.dirichlet_beta, cfg.seeds.partition);
    }

    RngStream root_rng = make_stream(cfg.seeds.partition, StreamUse::RootDraw);
    setup.root = draw_class_balanced(setup.train_pool,
                                     root_size_for(cfg, setup.train_pool.size()), root_rng);

    setup.plan = make_attack_plan(cfg.attack, cfg.workers, cfg.seeds.attack);
    if (setup.plan.kind == AttackKind::LabelFlip) {
        for (int m : setup.plan.malicious) {
            RngStream flip_rng = make_stream(cfg.seeds.attack, StreamUse::LabelFlip,
                                             static_cast<std::uint64_t>(m));
            setup.worker_data[static_cast<std::size_t>(m)] =
                label_flip(setup.worker_data[static_cast<std::size_t>(m)],
                           cfg.attack.label_fraction, flip_rng);
        }
    }
    return setup;
}

namespace {

class FederationSim {
  public:
    FederationSim(const FedConfig& cfg, const SimSetup& setup, int threads, const RunHooks* hooks)
        : cfg_(cfg),
          setup_(setup),
          threads_(std::max(1, threads)),
          hooks_(hooks),
          theta_(setup.objective->initial_theta()) {
        const int dim = setup.objective->dim();
        switch (cfg.aggregator.kind) {
            case AggregatorKind::Scaffold:
                scaffold_ = ScaffoldState::zeros(cfg.workers, dim);
                break;
            case AggregatorKind::Drag:
                drag_.alpha = cfg.aggregator.alpha;
                drag_.c = cfg.aggregator.c;
                drag_.retain_history = cfg.aggregator.keep_reference_history;
                break;
            default:
                break;
        }
    }

    std::vector<RoundRecord> run() {
        std::vector<RoundRecord> records;
        records.reserve(static_cast<std::size_t>(cfg_.rounds));
        for (int t = 0; t < cfg_.rounds; ++t) {
            try {
                records.push_back(run_round(t));
            } catch (const FedError& e) {
                throw ProtocolError("round " + std::to_string(t) + ": " + e.what());
            }
            if (hooks_ && hooks_->on_theta) hooks_->on_theta(t, theta_);
        }
        return records;
    }

  private:
    // One local-training pass over the selected cohort, with the attack
    // transform applied to the uploads of compromised workers.
    struct CohortPass {
        std::vector<ParamVector> uploads;
        std::vector<ParamVector> first_grads;
        std::vector<bool> malicious;
    };

    CohortPass cohort_pass(int t, const std::vector<int>& selected, StreamUse batch_use,
                           StreamUse noise_use, const LocalOptions& base_opt) {
        const int n = static_cast<int>(selected.size());
        CohortPass pass;
        pass.uploads.resize(static_cast<std::size_t>(n));
        pass.first_grads.resize(static_cast<std::size_t>(n));
        pass.malicious.resize(static_cast<std::size_t>(n), false);

        parallel_for(n, threads_, [&](int i) {
            const int worker = selected[static_cast<std::size_t>(i)];
            LocalOptions opt = base_opt;
            if (opt.rule == LocalRule::Scaffold) {
                opt.control_local = &scaffold_.h_m[static_cast<std::size_t>(worker)];
                opt.control_global = &scaffold_.h;
            }
            RngStream batches = make_stream(cfg_.seeds.batches, batch_use,
                                            static_cast<std::uint64_t>(worker),
                                            static_cast<std::uint64_t>(t));
            LocalResult res = local_train(*setup_.objective,
                                          setup_.worker_data[static_cast<std::size_t>(worker)],
                                          theta_, opt, batches);
            pass.first_grads[static_cast<std::size_t>(i)] = std::move(res.first_grad);
            ParamVector upload = std::move(res.update);
            if (setup_.plan.kind != AttackKind::None && setup_.plan.is_malicious(worker)) {
                pass.malicious[static_cast<std::size_t>(i)] = true;
                switch (setup_.plan.kind) {
                    case AttackKind::NoiseInjection: {
                        RngStream noise = make_stream(cfg_.seeds.attack, noise_use,
                                                      static_cast<std::uint64_t>(worker),
                                                      static_cast<std::uint64_t>(t));
                        upload = noise_inject(upload, cfg_.attack.noise_scale,
                                              cfg_.attack.noise_scale_is_std, noise);
                        break;
                    }
                    case AttackKind::SignFlip:
                        upload = sign_flip(upload);
                        break;
                    case AttackKind::LabelFlip:  // data poisoned at setup
                    case AttackKind::None:
                        break;
                }
            }
            pass.uploads[static_cast<std::size_t>(i)] = std::move(upload);
        });
        return pass;
    }

    LocalOptions plain_options() const {
        LocalOptions opt;
        opt.steps = cfg_.local_steps;
        opt.batch_size = cfg_.batch_size;
        opt.stepsize = cfg_.stepsize;
        return opt;
    }

    double c_for_round(int t) const {
        if (hooks_ && hooks_->c_t_schedule) return hooks_->c_t_schedule(t);
        return cfg_.aggregator.c_t;
    }

    ParamVector compute_root_reference(int t) {
        BrDragOptions opt;
        opt.stepsize = cfg_.stepsize;
        opt.local_steps = cfg_.local_steps;
        opt.batch_size = cfg_.batch_size;
        opt.robust_root = cfg_.aggregator.root_robust;
        opt.weiszfeld_tol = cfg_.aggregator.weiszfeld_tol;
        opt.weiszfeld_max_iter = cfg_.aggregator.weiszfeld_max_iter;
        RngStream rng = make_stream(cfg_.seeds.batches, StreamUse::RootBatches, 0,
                                    static_cast<std::uint64_t>(t));
        return root_reference(*setup_.objective, setup_.root, theta_, opt, rng);
    }

    // Reference for this round per the momentum recursion; round 0 runs the
    // dedicated seeding pass (its own batch/noise streams, so the main pass
    // consumes exactly the streams every other aggregator would).
    ParamVector drag_reference(int t, const std::vector<int>& selected) {
        if (t == 0) {
            CohortPass warm = cohort_pass(t, selected, StreamUse::WarmupBatches,
                                          StreamUse::NoiseWarmup, plain_options());
            ParamVector r = reference_init(warm.uploads);
            if (drag_.retain_history) drag_.g0_mean = r;
            return r;
        }
        ParamVector r = reference_step(drag_.r, drag_.delta_prev, drag_.alpha);
        if (drag_.retain_history) {
            const ParamVector check = closed_form_reference(
                drag_.g0_mean, drag_.delta_history, drag_.alpha, t);
            for (std::size_t i = 0; i < r.size(); ++i) {
                if (std::abs(r[i] - check[i]) > 1e-9) {
                    throw ProtocolError("reference recursion deviates from its closed form");
                }
            }
        }
        return r;
    }

    RoundRecord run_round(int t) {
        const auto start = std::chrono::steady_clock::now();
        RoundRecord rec;
        rec.round = t;

        RngStream sel_rng = make_stream(cfg_.seeds.selection, StreamUse::Selection, 0,
                                        static_cast<std::uint64_t>(t));
        rec.selected = select_workers(cfg_.workers, cfg_.selected, sel_rng);

        int malicious_selected = 0;
        for (int w : rec.selected) {
            if (setup_.plan.kind != AttackKind::None && setup_.plan.is_malicious(w)) {
                ++malicious_selected;
            }
        }
        rec.attack_w = static_cast<double>(malicious_selected) / cfg_.selected;

        ParamVector delta;
        switch (cfg_.aggregator.kind) {
            case AggregatorKind::FedAvg: {
                CohortPass pass = cohort_pass(t, rec.selected, StreamUse::Batches,
                                              StreamUse::Noise, plain_options());
                delta = fedavg_aggregate(pass.uploads);
                axpy(1.0, delta, theta_);
                break;
            }
            case AggregatorKind::FedProx: {
                LocalOptions opt = plain_options();
                opt.rule = LocalRule::Prox;
                opt.prox_mu = cfg_.aggregator.prox_mu;
                opt.anchor = &theta_;
                CohortPass pass = cohort_pass(t, rec.selected, StreamUse::Batches,
                                              StreamUse::Noise, opt);
                delta = fedavg_aggregate(pass.uploads);
                axpy(1.0, delta, theta_);
                break;
            }
            case AggregatorKind::Scaffold: {
                LocalOptions opt = plain_options();
                opt.rule = LocalRule::Scaffold;
                CohortPass pass = cohort_pass(t, rec.selected, StreamUse::Batches,
                                              StreamUse::Noise, opt);
                delta = fedavg_aggregate(pass.uploads);
                axpy(1.0, delta, theta_);
                scaffold_update_controls(scaffold_, rec.selected, pass.first_grads, cfg_.workers);
                break;
            }
            case AggregatorKind::FedExp: {
                CohortPass pass = cohort_pass(t, rec.selected, StreamUse::Batches,
                                              StreamUse::Noise, plain_options());
                FedExpResult res = fedexp_step(pass.uploads, cfg_.aggregator.exp_epsilon);
                delta = std::move(res.delta);
                axpy(1.0, delta, theta_);
                break;
            }
            case AggregatorKind::FedAcg: {
                const ParamVector anchor = fedacg_anchor(acg_, theta_, cfg_.aggregator.acg_lambda);
                LocalOptions opt = plain_options();
                opt.rule = LocalRule::AcgPenalty;
                opt.acg_beta = cfg_.aggregator.acg_beta;
                opt.anchor = &anchor;
                CohortPass pass = cohort_pass(t, rec.selected, StreamUse::Batches,
                                              StreamUse::Noise, opt);
                const ParamVector before = theta_;
                theta_ = fedacg_server_update(acg_, theta_, pass.uploads,
                                              cfg_.aggregator.acg_lambda);
                delta = sub(theta_, before);
                break;
            }
            case AggregatorKind::FlTrust: {
                const ParamVector r = compute_root_reference(t);
                CohortPass pass = cohort_pass(t, rec.selected, StreamUse::Batches,
                                              StreamUse::Noise, plain_options());
                std::vector<ParamVector> modified;
                modified.reserve(pass.uploads.size());
                for (const auto& g : pass.uploads) modified.push_back(fltrust_modify(g, r));
                delta = mean_of(modified);
                axpy(1.0, delta, theta_);
                fill_reference_diagnostics(rec, pass, r, nullptr);
                break;
            }
            case AggregatorKind::Rfa: {
                CohortPass pass = cohort_pass(t, rec.selected, StreamUse::Batches,
                                              StreamUse::Noise, plain_options());
                ParamVector next = rfa_aggregate(theta_, pass.uploads,
                                                 cfg_.aggregator.weiszfeld_tol,
                                                 cfg_.aggregator.weiszfeld_max_iter);
                delta = sub(next, theta_);
                theta_ = std::move(next);
                break;
            }
            case AggregatorKind::Raga: {
                CohortPass pass = cohort_pass(t, rec.selected, StreamUse::Batches,
                                              StreamUse::Noise, plain_options());
                ParamVector next = raga_aggregate(theta_, pass.uploads,
                                                  cfg_.aggregator.weiszfeld_tol,
                                                  cfg_.aggregator.weiszfeld_max_iter);
                delta = sub(next, theta_);
                theta_ = std::move(next);
                break;
            }
            case AggregatorKind::Drag: {
                const ParamVector r = drag_reference(t, rec.selected);
                CohortPass pass = cohort_pass(t, rec.selected, StreamUse::Batches,
                                              StreamUse::Noise, plain_options());
                std::vector<double> lambda(pass.uploads.size());
                std::vector<ParamVector> calibrated(pass.uploads.size());
                for (std::size_t i = 0; i < pass.uploads.size(); ++i) {
                    lambda[i] = dod(pass.uploads[i], r, drag_.c);
                    calibrated[i] = modify_drag(pass.uploads[i], r, lambda[i]);
                }
                delta = aggregate_modified(calibrated);
                axpy(1.0, delta, theta_);
                fill_reference_diagnostics(rec, pass, r, &lambda);
                drag_.r = r;
                drag_.delta_prev = delta;
                drag_.round = t + 1;
                if (drag_.retain_history) drag_.delta_history.push_back(delta);
                break;
            }
            case AggregatorKind::BrDrag: {
                const double c_round = c_for_round(t);
                const ParamVector r = compute_root_reference(t);
                CohortPass pass = cohort_pass(t, rec.selected, StreamUse::Batches,
                                              StreamUse::Noise, plain_options());
                std::vector<double> lambda(pass.uploads.size());
                std::vector<ParamVector> calibrated(pass.uploads.size());
                for (std::size_t i = 0; i < pass.uploads.size(); ++i) {
                    lambda[i] = dod(pass.uploads[i], r, c_round);
                    calibrated[i] = modify_br(pass.uploads[i], r, lambda[i]);
                }
                delta = aggregate_modified(calibrated);
                axpy(1.0, delta, theta_);
                fill_reference_diagnostics(rec, pass, r, &lambda);
                break;
            }
        }

        if (!all_finite(theta_)) {
            throw ProtocolError("global model left the finite range (diverged)");
        }
        rec.delta_norm = norm2(delta);

        if (t % cfg_.eval_stride == 0 || t == cfg_.rounds - 1) {
            rec.loss = evaluate(*setup_.objective, theta_, setup_.train_pool).loss;
            if (setup_.objective->is_classifier() && setup_.test_pool.size() > 0) {
                rec.accuracy = evaluate(*setup_.objective, theta_, setup_.test_pool).accuracy;
            }
        }

        rec.wall_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - start)
                          .count();
        return rec;
    }

    // lambda == nullptr: reference exists but no divergence scaling (the
    // trust-weighted baseline) - only the cosine diagnostics are recorded.
    void fill_reference_diagnostics(RoundRecord& rec, const CohortPass& pass,
                                    const ParamVector& r, const std::vector<double>* lambda) {
        const std::vector<double> zeros(pass.uploads.size(), 0.0);
        const DodReport rep =
            compute_dod_report(pass.uploads, pass.malicious, r, lambda ? *lambda : zeros);
        if (lambda) {
            rec.lambda_mean = rep.lambda_mean;
            rec.lambda_max = rep.lambda_max;
            if (rep.has_benign) rec.benign_weight = rep.benign_weight;
        }
        if (rep.has_benign) {
            rec.benign_cosine = rep.benign_cosine;
            rec.norm_ratio = rep.norm_ratio;
        }
        if (rep.has_malicious) rec.malicious_cosine = rep.malicious_cosine;
    }

    const FedConfig& cfg_;
    const SimSetup& setup_;
    int threads_;
    const RunHooks* hooks_;
    ParamVector theta_;

    DragState drag_;
    ScaffoldState scaffold_;
    FedAcgState acg_;
};

}  // namespace

std::vector<RoundRecord> run_experiment(const FedConfig& cfg, const SimSetup& setup,
                                        int threads, const RunHooks* hooks) {
    FederationSim sim(cfg, setup, threads, hooks);
    return sim.run();
}

std::vector<RoundRecord> run_experiment(const FedConfig& cfg, int threads, const RunHooks* hooks) {
    const SimSetup setup = build_setup(cfg);
    return run_experiment(cfg, setup, threads, hooks);
}

}  // namespace fedsim
