#include "fedsim/metrics_io.hpp"

#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fedsim/errors.hpp"

namespace fedsim {

using nlohmann::json;

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

void append_field(std::string& out, const char* key, const std::optional<double>& v,
                  bool trailing_comma = true) {
    out += '"';
    out += key;
    out += "\":";
    out += v ? format_double(*v) : "null";
    if (trailing_comma) out += ',';
}

std::string csv_cell(const std::optional<double>& v) {
    return v ? format_double(*v) : std::string();
}

}  // namespace

std::string metrics_to_jsonl(const std::vector<RoundRecord>& records) {
    std::string out;
    for (const auto& r : records) {
        out += "{\"round\":" + std::to_string(r.round) + ',';
        append_field(out, "loss", r.loss);
        append_field(out, "accuracy", r.accuracy);
        append_field(out, "delta_norm", r.delta_norm);
        append_field(out, "lambda_mean", r.lambda_mean);
        append_field(out, "lambda_max", r.lambda_max);
        append_field(out, "benign_cosine", r.benign_cosine);
        append_field(out, "malicious_cosine", r.malicious_cosine);
        append_field(out, "norm_ratio", r.norm_ratio);
        append_field(out, "benign_weight", r.benign_weight);
        append_field(out, "attack_w", r.attack_w);
        out += "\"selected\":[";
        for (std::size_t i = 0; i < r.selected.size(); ++i) {
            if (i) out += ',';
            out += std::to_string(r.selected[i]);
        }
        out += "]}\n";
    }
    return out;
}

std::string metrics_to_csv(const std::vector<RoundRecord>& records) {
    std::string out =
        "round,loss,accuracy,delta_norm,lambda_mean,lambda_max,benign_cosine,"
        "malicious_cosine,norm_ratio,benign_weight,attack_w,selected\n";
    for (const auto& r : records) {
        out += std::to_string(r.round) + ',';
        out += csv_cell(r.loss) + ',';
        out += csv_cell(r.accuracy) + ',';
        out += format_double(r.delta_norm) + ',';
        out += csv_cell(r.lambda_mean) + ',';
        out += csv_cell(r.lambda_max) + ',';
        out += csv_cell(r.benign_cosine) + ',';
        out += csv_cell(r.malicious_cosine) + ',';
        out += csv_cell(r.norm_ratio) + ',';
        out += csv_cell(r.benign_weight) + ',';
        out += format_double(r.attack_w) + ',';
        for (std::size_t i = 0; i < r.selected.size(); ++i) {
            if (i) out += ';';
            out += std::to_string(r.selected[i]);
        }
        out += '\n';
    }
    return out;
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << content;
    if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace

void write_metrics(const std::vector<RoundRecord>& records,
                   const std::filesystem::path& jsonl_path,
                   const std::filesystem::path& csv_path) {
    write_file(jsonl_path, metrics_to_jsonl(records));
    write_file(csv_path, metrics_to_csv(records));
}

void write_timings(const std::vector<RoundRecord>& records, const std::filesystem::path& path) {
    std::string out = "round,wall_ms\n";
    for (const auto& r : records) {
        out += std::to_string(r.round) + ',' + format_double(r.wall_ms) + '\n';
    }
    write_file(path, out);
}

std::uint64_t config_hash(const FedConfig& cfg) {
    const std::string text = dump_config(cfg);
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    return h;
}

namespace {

json seeds_to_json(const SeedPack& s) {
    return json{{"partition", s.partition},
                {"selection", s.selection},
                {"batches", s.batches},
                {"attack", s.attack}};
}

json config_to_json(const FedConfig& cfg) {
    json j;
    j["experiment"] = {
        {"rounds", cfg.rounds},         {"workers", cfg.workers},
        {"selected", cfg.selected},     {"local_steps", cfg.local_steps},
        {"batch_size", cfg.batch_size}, {"stepsize", cfg.stepsize},
        {"eval_stride", cfg.eval_stride},
    };
    j["objective"] = {
        {"kind", to_string(cfg.objective.kind)},
        {"seed", cfg.objective.seed},
        {"samples", cfg.objective.samples},
        {"features", cfg.objective.features},
        {"classes", cfg.objective.classes},
        {"class_separation", cfg.objective.class_separation},
        {"test_fraction", cfg.objective.test_fraction},
        {"hidden_units", cfg.objective.hidden_units},
        {"csv", cfg.objective.csv_path},
        {"dimension", cfg.objective.dimension},
        {"samples_per_worker", cfg.objective.samples_per_worker},
        {"curvature_min", cfg.objective.curvature_min},
        {"curvature_max", cfg.objective.curvature_max},
        {"optima_spread", cfg.objective.optima_spread},
        {"anchor_noise", cfg.objective.anchor_noise},
        {"theta0_fill", cfg.objective.theta0_fill},
    };
    j["partition"] = {{"beta", cfg.dirichlet_beta}};
    j["aggregator"] = {
        {"kind", to_string(cfg.aggregator.kind)},
        {"alpha", cfg.aggregator.alpha},
        {"c", cfg.aggregator.c},
        {"c_t", cfg.aggregator.c_t},
        {"keep_reference_history", cfg.aggregator.keep_reference_history},
        {"root_fraction", cfg.aggregator.root_fraction},
        {"root_max", cfg.aggregator.root_max},
        {"root_robust", cfg.aggregator.root_robust},
        {"prox_mu", cfg.aggregator.prox_mu},
        {"exp_epsilon", cfg.aggregator.exp_epsilon},
        {"acg_beta", cfg.aggregator.acg_beta},
        {"acg_lambda", cfg.aggregator.acg_lambda},
        {"weiszfeld_tol", cfg.aggregator.weiszfeld_tol},
        {"weiszfeld_max_iter", cfg.aggregator.weiszfeld_max_iter},
    };
    j["attack"] = {
        {"kind", to_string(cfg.attack.kind)},
        {"ratio", cfg.attack.ratio},
        {"noise_scale", cfg.attack.noise_scale},
        {"noise_scale_is_std", cfg.attack.noise_scale_is_std},
        {"label_fraction", cfg.attack.label_fraction},
    };
    j["seeds"] = seeds_to_json(cfg.seeds);
    return j;
}

FedConfig config_from_json(const json& j) {
    FedConfig cfg;
    const auto& e = j.at("experiment");
    cfg.rounds = e.at("rounds").get<int>();
    cfg.workers = e.at("workers").get<int>();
    cfg.selected = e.at("selected").get<int>();
    cfg.local_steps = e.at("local_steps").get<int>();
    cfg.batch_size = e.at("batch_size").get<int>();
    cfg.stepsize = e.at("stepsize").get<double>();
    cfg.eval_stride = e.at("eval_stride").get<int>();

    const auto& o = j.at("objective");
    cfg.objective.kind = objective_from_string(o.at("kind").get<std::string>());
    cfg.objective.seed = o.at("seed").get<std::uint64_t>();
    cfg.objective.samples = o.at("samples").get<int>();
    cfg.objective.features = o.at("features").get<int>();
    cfg.objective.classes = o.at("classes").get<int>();
    cfg.objective.class_separation = o.at("class_separation").get<double>();
    cfg.objective.test_fraction = o.at("test_fraction").get<double>();
    cfg.objective.hidden_units = o.at("hidden_units").get<int>();
    cfg.objective.csv_path = o.at("csv").get<std::string>();
    cfg.objective.dimension = o.at("dimension").get<int>();
    cfg.objective.samples_per_worker = o.at("samples_per_worker").get<int>();
    cfg.objective.curvature_min = o.at("curvature_min").get<double>();
    cfg.objective.curvature_max = o.at("curvature_max").get<double>();
    cfg.objective.optima_spread = o.at("optima_spread").get<double>();
    cfg.objective.anchor_noise = o.at("anchor_noise").get<double>();
    cfg.objective.theta0_fill = o.at("theta0_fill").get<double>();

    cfg.dirichlet_beta = j.at("partition").at("beta").get<double>();

    const auto& a = j.at("aggregator");
    cfg.aggregator.kind = aggregator_from_string(a.at("kind").get<std::string>());
    cfg.aggregator.alpha = a.at("alpha").get<double>();
    cfg.aggregator.c = a.at("c").get<double>();
    cfg.aggregator.c_t = a.at("c_t").get<double>();
    cfg.aggregator.keep_reference_history = a.at("keep_reference_history").get<bool>();
    cfg.aggregator.root_fraction = a.at("root_fraction").get<double>();
    cfg.aggregator.root_max = a.at("root_max").get<int>();
    cfg.aggregator.root_robust = a.at("root_robust").get<bool>();
    cfg.aggregator.prox_mu = a.at("prox_mu").get<double>();
    cfg.aggregator.exp_epsilon = a.at("exp_epsilon").get<double>();
    cfg.aggregator.acg_beta = a.at("acg_beta").get<double>();
    cfg.aggregator.acg_lambda = a.at("acg_lambda").get<double>();
    cfg.aggregator.weiszfeld_tol = a.at("weiszfeld_tol").get<double>();
    cfg.aggregator.weiszfeld_max_iter = a.at("weiszfeld_max_iter").get<int>();

    const auto& at = j.at("attack");
    cfg.attack.kind = attack_from_string(at.at("kind").get<std::string>());
    cfg.attack.ratio = at.at("ratio").get<double>();
    cfg.attack.noise_scale = at.at("noise_scale").get<double>();
    cfg.attack.noise_scale_is_std = at.at("noise_scale_is_std").get<bool>();
    cfg.attack.label_fraction = at.at("label_fraction").get<double>();

    const auto& s = j.at("seeds");
    cfg.seeds.partition = s.at("partition").get<std::uint64_t>();
    cfg.seeds.selection = s.at("selection").get<std::uint64_t>();
    cfg.seeds.batches = s.at("batches").get<std::uint64_t>();
    cfg.seeds.attack = s.at("attack").get<std::uint64_t>();
    return cfg;
}

}  // namespace

void write_manifest(const Manifest& m, const std::filesystem::path& path) {
    json j;
    j["artifact_version"] = m.artifact_version;
    j["status"] = m.status;
    j["started_utc"] = m.started_utc;
    j["finished_utc"] = m.finished_utc;
    j["config_hash"] = m.config_hash_hex;
    j["config"] = config_to_json(m.config);
    j["output"] = {{"metrics_jsonl", m.metrics_jsonl}, {"metrics_csv", m.metrics_csv}};

    const std::filesystem::path tmp = path.string() + ".tmp";
    write_file(tmp, j.dump(2) + "\n");
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot move manifest into place at " + path.string() + ": " + ec.message());
}

Manifest read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw IoError("malformed manifest " + path.string() + ": " + e.what());
    }
    Manifest m;
    try {
        m.artifact_version = j.at("artifact_version").get<std::string>();
        m.status = j.at("status").get<std::string>();
        m.started_utc = j.at("started_utc").get<std::string>();
        m.finished_utc = j.at("finished_utc").get<std::string>();
        m.config_hash_hex = j.at("config_hash").get<std::string>();
        m.config = config_from_json(j.at("config"));
        m.metrics_jsonl = j.at("output").at("metrics_jsonl").get<std::string>();
        m.metrics_csv = j.at("output").at("metrics_csv").get<std::string>();
    } catch (const json::exception& e) {
        throw IoError("manifest " + path.string() + " is missing fields: " + e.what());
    }
    return m;
}

std::string utc_timestamp_now() {
    const std::time_t now = std::time(nullptr);
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

}  // namespace fedsim
