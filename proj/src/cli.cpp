#include "fedsim/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fedsim/baselines.hpp"
#include "fedsim/drag.hpp"
#include "fedsim/engine.hpp"
#include "fedsim/errors.hpp"
#include "fedsim/metrics_io.hpp"
#include "fedsim/oracles.hpp"

namespace fedsim {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

int resolve_threads(int flag_value) {
    if (flag_value > 0) return flag_value;
    if (const char* env = std::getenv("FEDSIM_THREADS")) {
        try {
            const int n = std::stoi(env);
            if (n > 0) return n;
        } catch (const std::exception&) {
            throw ConfigError("FEDSIM_THREADS: cannot parse '" + std::string(env) + "'");
        }
    }
    return 1;
}

struct Overrides {
    std::optional<std::uint64_t> master_seed;
    std::optional<std::string> aggregator;
    std::optional<std::string> attack;
    std::optional<double> ratio;
    std::optional<double> beta;
    std::optional<int> rounds;
};

void apply_overrides(FedConfig& cfg, const Overrides& ov) {
    if (ov.aggregator) cfg.aggregator.kind = aggregator_from_string(*ov.aggregator);
    if (ov.attack) cfg.attack.kind = attack_from_string(*ov.attack);
    if (ov.ratio) cfg.attack.ratio = *ov.ratio;
    if (ov.beta) cfg.dirichlet_beta = *ov.beta;
    if (ov.rounds) cfg.rounds = *ov.rounds;
    if (ov.master_seed) cfg.seeds = seeds_from_master(*ov.master_seed);
    cfg.validate();
}

// Runs one experiment into out_dir: manifest first (status running), then
// metrics + timings, then the manifest again marked complete. A run that
// throws leaves a manifest marked partial behind.
void run_to_directory(const FedConfig& cfg, const fs::path& out_dir, int threads) {
    fs::create_directories(out_dir);
    char hash_hex[32];
    std::snprintf(hash_hex, sizeof hash_hex, "%016llx",
                  static_cast<unsigned long long>(config_hash(cfg)));

    Manifest m;
    m.status = "running";
    m.started_utc = utc_timestamp_now();
    m.config_hash_hex = hash_hex;
    m.config = cfg;
    write_manifest(m, out_dir / "manifest.json");

    std::vector<RoundRecord> records;
    try {
        records = run_experiment(cfg, threads);
    } catch (...) {
        m.status = "partial";
        m.finished_utc = utc_timestamp_now();
        write_manifest(m, out_dir / "manifest.json");
        throw;
    }
    write_metrics(records, out_dir / m.metrics_jsonl, out_dir / m.metrics_csv);
    write_timings(records, out_dir / "timings.csv");
    m.status = "complete";
    m.finished_utc = utc_timestamp_now();
    write_manifest(m, out_dir / "manifest.json");
}

std::string compact_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

// ------------------------------------------------------------------ verify

bool verify_closed_form() {
    RngStream rng(20240901);
    constexpr int kDim = 10;
    constexpr int kRounds = 100;
    double worst = 0.0;
    for (double alpha : {0.01, 0.25, 0.75}) {
        ParamVector g0(kDim);
        for (double& x : g0) x = rng.normal();
        std::vector<ParamVector> deltas;
        ParamVector r = g0;
        for (int t = 1; t <= kRounds; ++t) {
            ParamVector delta(kDim);
            for (double& x : delta) x = rng.normal();
            deltas.push_back(delta);
            r = reference_step(r, delta, alpha);
            const ParamVector direct = closed_form_reference(g0, deltas, alpha, t);
            for (int i = 0; i < kDim; ++i) {
                worst = std::max(worst, std::abs(r[static_cast<std::size_t>(i)] -
                                                 direct[static_cast<std::size_t>(i)]));
            }
        }
    }
    std::printf("  reference recursion vs closed form: max |diff| = %.3g (tolerance 1e-9)\n", worst);
    return worst <= 1e-9;
}

bool verify_geomed() {
    RngStream rng(20240902);
    bool ok = true;
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<ParamVector> pts;
        for (int i = 0; i < 7; ++i) pts.push_back({rng.normal(), rng.normal()});
        const WeiszfeldResult w = weiszfeld_geomed(pts, 1e-10, 500);
        const GridSearchResult g = grid_geomed_2d(pts);
        const double gap = std::abs(w.objective_trace.back() - g.objective);
        bool monotone = true;
        for (std::size_t i = 1; i < w.objective_trace.size(); ++i) {
            if (w.objective_trace[i] > w.objective_trace[i - 1] + 1e-12) monotone = false;
        }
        std::printf("  geometric median trial %d: |objective gap| = %.3g, monotone=%s\n",
                    trial, gap, monotone ? "yes" : "no");
        if (gap > 1e-3 || !monotone) ok = false;
    }
    return ok;
}

bool verify_gradients() {
    RngStream rng(20240903);
    bool ok = true;

    struct Case {
        const char* name;
        std::shared_ptr<Objective> obj;
        LabeledDataset data;
    };
    std::vector<Case> cases;

    {
        ObjectiveConfig oc;
        oc.kind = ObjectiveKind::Quadratic;
        oc.seed = 11;
        oc.dimension = 6;
        oc.samples_per_worker = 8;
        oc.anchor_noise = 0.5;
        QuadraticSuite suite = make_quadratic_suite(oc, 3);
        cases.push_back({"quadratic", suite.objective, suite.pooled});
    }
    {
        LabeledDataset ds = make_synthetic_classification(60, 8, 3, 2.0, 12);
        cases.push_back({"logistic", std::make_shared<LogisticObjective>(8, 3), ds});
    }
    {
        LabeledDataset ds = make_synthetic_classification(60, 8, 3, 2.0, 13);
        cases.push_back({"mlp", std::make_shared<MlpObjective>(8, 16, 3, 14), ds});
    }

    std::vector<int> rows;
    for (int i = 0; i < 16; ++i) rows.push_back(i);
    for (const auto& c : cases) {
        double worst = 0.0;
        for (int point = 0; point < 20; ++point) {
            ParamVector theta(static_cast<std::size_t>(c.obj->dim()));
            for (double& x : theta) x = 0.5 * rng.normal();
            const ParamVector analytic = c.obj->batch_grad(theta, c.data, rows);
            const ParamVector numeric = fd_gradient(*c.obj, c.data, rows, theta, 1e-5);
            worst = std::max(worst, vector_rel_error(analytic, numeric));
        }
        std::printf("  %s gradient vs central differences: max rel err = %.3g (tolerance 1e-5)\n",
                    c.name, worst);
        if (worst > 1e-5) ok = false;
    }
    return ok;
}

int cmd_verify() {
    int failures = 0;
    std::printf("verify: reference recursion closed form\n");
    if (!verify_closed_form()) ++failures;
    std::printf("verify: geometric median vs grid search\n");
    if (!verify_geomed()) ++failures;
    std::printf("verify: analytic gradients vs finite differences\n");
    if (!verify_gradients()) ++failures;
    if (failures) {
        std::printf("verify: FAILED (%d check group%s)\n", failures, failures == 1 ? "" : "s");
        return 3;
    }
    std::printf("verify: all checks passed\n");
    return 0;
}

// ------------------------------------------------------------ export-plots

struct PlotRow {
    std::string aggregator;
    std::uint64_t seed = 0;
    int round = 0;
    std::string loss;
    std::string accuracy;
};

int cmd_export_plots(const fs::path& in_dir, const fs::path& out_dir) {
    if (!fs::is_directory(in_dir)) throw IoError("export-plots: " + in_dir.string() + " is not a directory");
    fs::create_directories(out_dir);

    // figure key: (attack kind, ratio, beta) -> rows
    std::map<std::string, std::vector<PlotRow>> figures;

    std::vector<fs::path> run_dirs;
    for (const auto& entry : fs::directory_iterator(in_dir)) {
        if (entry.is_directory() && fs::exists(entry.path() / "manifest.json")) {
            run_dirs.push_back(entry.path());
        }
    }
    std::sort(run_dirs.begin(), run_dirs.end());
    if (run_dirs.empty()) throw IoError("export-plots: no run directories with manifests under " + in_dir.string());

    for (const auto& dir : run_dirs) {
        const Manifest m = read_manifest(dir / "manifest.json");
        if (m.status != "complete") {
            std::fprintf(stderr, "export-plots: skipping %s (status %s)\n", dir.string().c_str(),
                         m.status.c_str());
            continue;
        }
        const std::string key = to_string(m.config.attack.kind) + "_r" +
                                compact_num(m.config.attack.ratio) + "_b" +
                                compact_num(m.config.dirichlet_beta);
        std::ifstream metrics(dir / m.metrics_jsonl);
        if (!metrics) throw IoError("export-plots: cannot open metrics for " + dir.string());
        std::string line;
        while (std::getline(metrics, line)) {
            if (line.empty()) continue;
            json j;
            try {
                j = json::parse(line);
            } catch (const json::exception& e) {
                throw IoError("export-plots: bad metrics line in " + dir.string() + ": " + e.what());
            }
            PlotRow row;
            row.aggregator = to_string(m.config.aggregator.kind);
            row.seed = m.config.seeds.partition;
            row.round = j.at("round").get<int>();
            if (!j.at("loss").is_null()) row.loss = format_double(j.at("loss").get<double>());
            if (!j.at("accuracy").is_null()) {
                row.accuracy = format_double(j.at("accuracy").get<double>());
            }
            figures[key].push_back(std::move(row));
        }
    }

    for (auto& [key, rows] : figures) {
        std::sort(rows.begin(), rows.end(), [](const PlotRow& a, const PlotRow& b) {
            if (a.aggregator != b.aggregator) return a.aggregator < b.aggregator;
            if (a.seed != b.seed) return a.seed < b.seed;
            return a.round < b.round;
        });
        const fs::path path = out_dir / ("fig_" + key + ".csv");
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("export-plots: cannot write " + path.string());
        out << "round,aggregator,seed,loss,accuracy\n";
        for (const auto& r : rows) {
            out << r.round << ',' << r.aggregator << ',' << r.seed << ',' << r.loss << ','
                << r.accuracy << '\n';
        }
        std::printf("export-plots: wrote %s (%zu rows)\n", path.string().c_str(), rows.size());
    }
    return 0;
}

}  // namespace

int run_cli(int argc, char** argv) {
    CLI::App app{"Deterministic federated-learning simulator with divergence-based "
                 "adaptive aggregation"};
    app.require_subcommand(1);

    // ---- run
    auto* run = app.add_subcommand("run", "Run one experiment from a config file");
    std::string run_config, run_out;
    Overrides ov;
    int threads_flag = 0;
    run->add_option("--config", run_config, "Experiment config file")->required();
    run->add_option("--out", run_out, "Output directory")->required();
    std::uint64_t seed_val = 0;
    bool seed_set = false;
    run->add_option_function<std::uint64_t>(
           "--seed", [&](std::uint64_t v) { seed_val = v; seed_set = true; },
           "Master seed; derives all four stream seeds");
    std::string ov_aggregator, ov_attack;
    double ov_ratio = 0.0, ov_beta = 0.0;
    int ov_rounds = 0;
    auto* opt_agg = run->add_option("--aggregator", ov_aggregator, "Override aggregator kind");
    auto* opt_att = run->add_option("--attack", ov_attack, "Override attack kind");
    auto* opt_ratio = run->add_option("--ratio", ov_ratio, "Override attack ratio");
    auto* opt_beta = run->add_option("--beta", ov_beta, "Override Dirichlet beta");
    auto* opt_rounds = run->add_option("--rounds", ov_rounds, "Override round count");
    run->add_option("--threads", threads_flag, "Worker threads (default: FEDSIM_THREADS or 1)");

    // ---- rerun
    auto* rerun = app.add_subcommand("rerun", "Re-run the experiment recorded in a manifest");
    std::string rerun_manifest, rerun_out;
    int rerun_threads = 0;
    rerun->add_option("--manifest", rerun_manifest, "Path to manifest.json")->required();
    rerun->add_option("--out", rerun_out, "Output directory")->required();
    rerun->add_option("--threads", rerun_threads, "Worker threads");

    // ---- sweep
    auto* sweep = app.add_subcommand("sweep", "Grid of experiments over hyperparameters");
    std::string sweep_config, sweep_out;
    std::vector<std::string> sweep_aggregators;
    std::vector<double> sweep_alphas, sweep_cs, sweep_betas, sweep_ratios;
    std::vector<std::uint64_t> sweep_seeds;
    int sweep_threads = 0;
    sweep->add_option("--config", sweep_config, "Base config file")->required();
    sweep->add_option("--out", sweep_out, "Output root directory")->required();
    sweep->add_option("--aggregators", sweep_aggregators, "Aggregator kinds to sweep");
    sweep->add_option("--alphas", sweep_alphas, "Reference momentum values");
    sweep->add_option("--cs", sweep_cs, "Divergence scale values");
    sweep->add_option("--betas", sweep_betas, "Dirichlet concentration values");
    sweep->add_option("--ratios", sweep_ratios, "Malicious worker ratios");
    sweep->add_option("--seeds", sweep_seeds, "Master seeds");
    sweep->add_option("--threads", sweep_threads, "Worker threads per experiment");

    // ---- verify
    auto* verify = app.add_subcommand(
        "verify", "Check core numerics against independent oracles");

    // ---- export-plots
    auto* plots = app.add_subcommand("export-plots", "Aggregate run metrics into per-figure CSVs");
    std::string plots_in, plots_out;
    plots->add_option("--in", plots_in, "Directory containing run subdirectories")->required();
    plots->add_option("--out", plots_out, "Directory for figure CSVs")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (run->parsed()) {
            FedConfig cfg = load_config(run_config);
            if (seed_set) ov.master_seed = seed_val;
            if (opt_agg->count()) ov.aggregator = ov_aggregator;
            if (opt_att->count()) ov.attack = ov_attack;
            if (opt_ratio->count()) ov.ratio = ov_ratio;
            if (opt_beta->count()) ov.beta = ov_beta;
            if (opt_rounds->count()) ov.rounds = ov_rounds;
            apply_overrides(cfg, ov);
            run_to_directory(cfg, run_out, resolve_threads(threads_flag));
            std::printf("run: wrote %s\n", (fs::path(run_out) / "metrics.jsonl").string().c_str());
            return 0;
        }
        if (rerun->parsed()) {
            const Manifest m = read_manifest(rerun_manifest);
            m.config.validate();
            run_to_directory(m.config, rerun_out, resolve_threads(rerun_threads));
            std::printf("rerun: wrote %s\n",
                        (fs::path(rerun_out) / "metrics.jsonl").string().c_str());
            return 0;
        }
        if (sweep->parsed()) {
            const FedConfig base = load_config(sweep_config);
            if (sweep_aggregators.empty()) sweep_aggregators = {to_string(base.aggregator.kind)};
            if (sweep_alphas.empty()) sweep_alphas = {base.aggregator.alpha};
            if (sweep_cs.empty()) sweep_cs = {base.aggregator.kind == AggregatorKind::BrDrag
                                                  ? base.aggregator.c_t
                                                  : base.aggregator.c};
            if (sweep_betas.empty()) sweep_betas = {base.dirichlet_beta};
            if (sweep_ratios.empty()) sweep_ratios = {base.attack.ratio};

            const int threads = resolve_threads(sweep_threads);
            int count = 0;
            for (const auto& agg : sweep_aggregators) {
                for (double alpha : sweep_alphas) {
                    for (double c : sweep_cs) {
                        for (double beta : sweep_betas) {
                            for (double ratio : sweep_ratios) {
                                const std::size_t n_seeds = std::max<std::size_t>(1, sweep_seeds.size());
                                for (std::size_t si = 0; si < n_seeds; ++si) {
                                    FedConfig cfg = base;
                                    cfg.aggregator.kind = aggregator_from_string(agg);
                                    cfg.aggregator.alpha = alpha;
                                    cfg.aggregator.c = c;
                                    cfg.aggregator.c_t = c;
                                    cfg.dirichlet_beta = beta;
                                    cfg.attack.ratio = ratio;
                                    std::uint64_t seed_tag = cfg.seeds.partition;
                                    if (!sweep_seeds.empty()) {
                                        cfg.seeds = seeds_from_master(sweep_seeds[si]);
                                        seed_tag = sweep_seeds[si];
                                    }
                                    cfg.validate();
                                    const std::string name = agg + "_a" + compact_num(alpha) +
                                                             "_c" + compact_num(c) + "_b" +
                                                             compact_num(beta) + "_r" +
                                                             compact_num(ratio) + "_s" +
                                                             std::to_string(seed_tag);
                                    run_to_directory(cfg, fs::path(sweep_out) / name, threads);
                                    std::printf("sweep: finished %s\n", name.c_str());
                                    ++count;
                                }
                            }
                        }
                    }
                }
            }
            std::printf("sweep: %d experiment%s complete\n", count, count == 1 ? "" : "s");
            return 0;
        }
        if (verify->parsed()) return cmd_verify();
        if (plots->parsed()) return cmd_export_plots(plots_in, plots_out);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}

}  // namespace fedsim
