#include "fedsim/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "fedsim/errors.hpp"
#include "fedsim/rng.hpp"

namespace fedsim {

std::string to_string(AggregatorKind k) {
    switch (k) {
        case AggregatorKind::FedAvg: return "fedavg";
        case AggregatorKind::FedProx: return "fedprox";
        case AggregatorKind::Scaffold: return "scaffold";
        case AggregatorKind::FedExp: return "fedexp";
        case AggregatorKind::FedAcg: return "fedacg";
        case AggregatorKind::FlTrust: return "fltrust";
        case AggregatorKind::Rfa: return "rfa";
        case AggregatorKind::Raga: return "raga";
        case AggregatorKind::Drag: return "drag";
        case AggregatorKind::BrDrag: return "brdrag";
    }
    return "?";
}

std::string to_string(AttackKind k) {
    switch (k) {
        case AttackKind::None: return "none";
        case AttackKind::NoiseInjection: return "noise";
        case AttackKind::SignFlip: return "signflip";
        case AttackKind::LabelFlip: return "labelflip";
    }
    return "?";
}

std::string to_string(ObjectiveKind k) {
    switch (k) {
        case ObjectiveKind::Quadratic: return "quadratic";
        case ObjectiveKind::Logistic: return "logistic";
        case ObjectiveKind::Mlp: return "mlp";
    }
    return "?";
}

AggregatorKind aggregator_from_string(const std::string& s) {
    static const std::map<std::string, AggregatorKind> table = {
        {"fedavg", AggregatorKind::FedAvg},   {"fedprox", AggregatorKind::FedProx},
        {"scaffold", AggregatorKind::Scaffold}, {"fedexp", AggregatorKind::FedExp},
        {"fedacg", AggregatorKind::FedAcg},   {"fltrust", AggregatorKind::FlTrust},
        {"rfa", AggregatorKind::Rfa},         {"raga", AggregatorKind::Raga},
        {"drag", AggregatorKind::Drag},       {"brdrag", AggregatorKind::BrDrag},
    };
    const auto it = table.find(s);
    if (it == table.end()) throw ConfigError("aggregator.kind: unknown aggregator '" + s + "'");
    return it->second;
}

AttackKind attack_from_string(const std::string& s) {
    static const std::map<std::string, AttackKind> table = {
        {"none", AttackKind::None},
        {"noise", AttackKind::NoiseInjection},
        {"signflip", AttackKind::SignFlip},
        {"labelflip", AttackKind::LabelFlip},
    };
    const auto it = table.find(s);
    if (it == table.end()) throw ConfigError("attack.kind: unknown attack '" + s + "'");
    return it->second;
}

ObjectiveKind objective_from_string(const std::string& s) {
    static const std::map<std::string, ObjectiveKind> table = {
        {"quadratic", ObjectiveKind::Quadratic},
        {"logistic", ObjectiveKind::Logistic},
        {"mlp", ObjectiveKind::Mlp},
    };
    const auto it = table.find(s);
    if (it == table.end()) throw ConfigError("objective.kind: unknown objective '" + s + "'");
    return it->second;
}

SeedPack seeds_from_master(std::uint64_t master) {
    SeedPack s;
    s.partition = stream_seed(master, StreamUse::DataGen, 0, 1);
    s.selection = stream_seed(master, StreamUse::DataGen, 0, 2);
    s.batches = stream_seed(master, StreamUse::DataGen, 0, 3);
    s.attack = stream_seed(master, StreamUse::DataGen, 0, 4);
    return s;
}

void FedConfig::validate() const {
    auto fail = [](const std::string& field, const std::string& why) {
        throw ConfigError(field + ": " + why);
    };
    if (rounds < 0) fail("experiment.rounds", "must be >= 0");
    if (workers < 1) fail("experiment.workers", "must be >= 1");
    if (selected < 1 || selected > workers) {
        fail("experiment.selected", "must lie in [1, workers]");
    }
    if (local_steps < 1) fail("experiment.local_steps", "must be >= 1");
    if (batch_size < 1) fail("experiment.batch_size", "must be >= 1");
    if (!(stepsize > 0.0)) fail("experiment.stepsize", "must be positive");
    if (eval_stride < 1) fail("experiment.eval_stride", "must be >= 1");
    if (!(dirichlet_beta > 0.0)) fail("partition.beta", "must be positive");

    if (objective.kind == ObjectiveKind::Quadratic) {
        if (objective.dimension < 1) fail("objective.dimension", "must be >= 1");
        if (objective.samples_per_worker < 1) fail("objective.samples_per_worker", "must be >= 1");
        if (!(objective.curvature_min > 0.0)) fail("objective.curvature_min", "must be positive");
        if (objective.curvature_max < objective.curvature_min) {
            fail("objective.curvature_max", "must be >= curvature_min");
        }
        if (objective.anchor_noise < 0.0) fail("objective.anchor_noise", "must be >= 0");
        if (objective.optima_spread < 0.0) fail("objective.optima_spread", "must be >= 0");
    } else {
        if (objective.csv_path.empty()) {
            if (objective.samples < workers) fail("objective.samples", "need at least one sample per worker");
            if (objective.features < 1) fail("objective.features", "must be >= 1");
            if (objective.classes < 2) fail("objective.classes", "must be >= 2");
            if (objective.class_separation < 0.0) fail("objective.class_separation", "must be >= 0");
        }
        if (objective.test_fraction < 0.0 || objective.test_fraction >= 1.0) {
            fail("objective.test_fraction", "must lie in [0, 1)");
        }
        if (objective.kind == ObjectiveKind::Mlp && objective.hidden_units < 1) {
            fail("objective.hidden_units", "must be >= 1");
        }
    }

    if (!(aggregator.alpha > 0.0) || !(aggregator.alpha < 1.0)) {
        fail("aggregator.alpha", "must lie in (0, 1)");
    }
    if (aggregator.c < 0.0 || aggregator.c > 1.0) fail("aggregator.c", "must lie in [0, 1]");
    if (aggregator.c_t < 0.0 || aggregator.c_t > 1.0) fail("aggregator.c_t", "must lie in [0, 1]");
    if (!(aggregator.root_fraction > 0.0) || aggregator.root_fraction > 1.0) {
        fail("aggregator.root_fraction", "must lie in (0, 1]");
    }
    if (aggregator.root_max < 1) fail("aggregator.root_max", "must be >= 1");
    if (!(aggregator.prox_mu >= 0.0)) fail("aggregator.prox_mu", "must be >= 0");
    if (!(aggregator.exp_epsilon > 0.0)) fail("aggregator.exp_epsilon", "must be positive");
    if (aggregator.acg_beta < 0.0) fail("aggregator.acg_beta", "must be >= 0");
    if (aggregator.acg_lambda < 0.0 || aggregator.acg_lambda >= 1.0) {
        fail("aggregator.acg_lambda", "must lie in [0, 1)");
    }
    if (!(aggregator.weiszfeld_tol > 0.0)) fail("aggregator.weiszfeld_tol", "must be positive");
    if (aggregator.weiszfeld_max_iter < 1) fail("aggregator.weiszfeld_max_iter", "must be >= 1");

    if (attack.ratio < 0.0 || attack.ratio > 1.0) fail("attack.ratio", "must lie in [0, 1]");
    if (!(attack.noise_scale > 0.0)) fail("attack.noise_scale", "must be positive");
    if (attack.label_fraction < 0.0 || attack.label_fraction > 1.0) {
        fail("attack.label_fraction", "must lie in [0, 1]");
    }
}

namespace {

struct Cursor {
    FedConfig* cfg;
    std::string origin;
    int line = 0;

    [[noreturn]] void fail(const std::string& why) const {
        throw ConfigError(origin + ":" + std::to_string(line) + ": " + why);
    }

    long long to_int(const std::string& v) const {
        try {
            std::size_t used = 0;
            const long long x = std::stoll(v, &used);
            if (used != v.size()) fail("trailing characters in integer '" + v + "'");
            return x;
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception&) {
            fail("cannot parse integer '" + v + "'");
        }
    }

    std::uint64_t to_u64(const std::string& v) const {
        try {
            std::size_t used = 0;
            const unsigned long long x = std::stoull(v, &used);
            if (used != v.size()) fail("trailing characters in integer '" + v + "'");
            return x;
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception&) {
            fail("cannot parse unsigned integer '" + v + "'");
        }
    }

    double to_double(const std::string& v) const {
        try {
            std::size_t used = 0;
            const double x = std::stod(v, &used);
            if (used != v.size()) fail("trailing characters in number '" + v + "'");
            return x;
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception&) {
            fail("cannot parse number '" + v + "'");
        }
    }

    bool to_bool(const std::string& v) const {
        if (v == "true" || v == "1" || v == "yes") return true;
        if (v == "false" || v == "0" || v == "no") return false;
        fail("cannot parse boolean '" + v + "' (use true/false)");
    }
};

std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

using Setter = std::function<void(Cursor&, const std::string&)>;

const std::map<std::string, std::map<std::string, Setter>>& schema() {
    static const std::map<std::string, std::map<std::string, Setter>> s = {
        {"experiment",
         {
             {"rounds", [](Cursor& c, const std::string& v) { c.cfg->rounds = static_cast<int>(c.to_int(v)); }},
             {"workers", [](Cursor& c, const std::string& v) { c.cfg->workers = static_cast<int>(c.to_int(v)); }},
             {"selected", [](Cursor& c, const std::string& v) { c.cfg->selected = static_cast<int>(c.to_int(v)); }},
             {"local_steps", [](Cursor& c, const std::string& v) { c.cfg->local_steps = static_cast<int>(c.to_int(v)); }},
             {"batch_size", [](Cursor& c, const std::string& v) { c.cfg->batch_size = static_cast<int>(c.to_int(v)); }},
             {"stepsize", [](Cursor& c, const std::string& v) { c.cfg->stepsize = c.to_double(v); }},
             {"eval_stride", [](Cursor& c, const std::string& v) { c.cfg->eval_stride = static_cast<int>(c.to_int(v)); }},
         }},
        {"objective",
         {
             {"kind", [](Cursor& c, const std::string& v) { c.cfg->objective.kind = objective_from_string(v); }},
             {"seed", [](Cursor& c, const std::string& v) { c.cfg->objective.seed = c.to_u64(v); }},
             {"samples", [](Cursor& c, const std::string& v) { c.cfg->objective.samples = static_cast<int>(c.to_int(v)); }},
             {"features", [](Cursor& c, const std::string& v) { c.cfg->objective.features = static_cast<int>(c.to_int(v)); }},
             {"classes", [](Cursor& c, const std::string& v) { c.cfg->objective.classes = static_cast<int>(c.to_int(v)); }},
             {"class_separation", [](Cursor& c, const std::string& v) { c.cfg->objective.class_separation = c.to_double(v); }},
             {"test_fraction", [](Cursor& c, const std::string& v) { c.cfg->objective.test_fraction = c.to_double(v); }},
             {"hidden_units", [](Cursor& c, const std::string& v) { c.cfg->objective.hidden_units = static_cast<int>(c.to_int(v)); }},
             {"csv", [](Cursor& c, const std::string& v) { c.cfg->objective.csv_path = v; }},
             {"dimension", [](Cursor& c, const std::string& v) { c.cfg->objective.dimension = static_cast<int>(c.to_int(v)); }},
             {"samples_per_worker", [](Cursor& c, const std::string& v) { c.cfg->objective.samples_per_worker = static_cast<int>(c.to_int(v)); }},
             {"curvature_min", [](Cursor& c, const std::string& v) { c.cfg->objective.curvature_min = c.to_double(v); }},
             {"curvature_max", [](Cursor& c, const std::string& v) { c.cfg->objective.curvature_max = c.to_double(v); }},
             {"optima_spread", [](Cursor& c, const std::string& v) { c.cfg->objective.optima_spread = c.to_double(v); }},
             {"anchor_noise", [](Cursor& c, const std::string& v) { c.cfg->objective.anchor_noise = c.to_double(v); }},
             {"theta0_fill", [](Cursor& c, const std::string& v) { c.cfg->objective.theta0_fill = c.to_double(v); }},
         }},
        {"partition",
         {
             {"beta", [](Cursor& c, const std::string& v) { c.cfg->dirichlet_beta = c.to_double(v); }},
         }},
        {"aggregator",
         {
             {"kind", [](Cursor& c, const std::string& v) { c.cfg->aggregator.kind = aggregator_from_string(v); }},
             {"alpha", [](Cursor& c, const std::string& v) { c.cfg->aggregator.alpha = c.to_double(v); }},
             {"c", [](Cursor& c, const std::string& v) { c.cfg->aggregator.c = c.to_double(v); }},
             {"c_t", [](Cursor& c, const std::string& v) { c.cfg->aggregator.c_t = c.to_double(v); }},
             {"keep_reference_history", [](Cursor& c, const std::string& v) { c.cfg->aggregator.keep_reference_history = c.to_bool(v); }},
             {"root_fraction", [](Cursor& c, const std::string& v) { c.cfg->aggregator.root_fraction = c.to_double(v); }},
             {"root_max", [](Cursor& c, const std::string& v) { c.cfg->aggregator.root_max = static_cast<int>(c.to_int(v)); }},
             {"root_robust", [](Cursor& c, const std::string& v) { c.cfg->aggregator.root_robust = c.to_bool(v); }},
             {"prox_mu", [](Cursor& c, const std::string& v) { c.cfg->aggregator.prox_mu = c.to_double(v); }},
             {"exp_epsilon", [](Cursor& c, const std::string& v) { c.cfg->aggregator.exp_epsilon = c.to_double(v); }},
             {"acg_beta", [](Cursor& c, const std::string& v) { c.cfg->aggregator.acg_beta = c.to_double(v); }},
             {"acg_lambda", [](Cursor& c, const std::string& v) { c.cfg->aggregator.acg_lambda = c.to_double(v); }},
             {"weiszfeld_tol", [](Cursor& c, const std::string& v) { c.cfg->aggregator.weiszfeld_tol = c.to_double(v); }},
             {"weiszfeld_max_iter", [](Cursor& c, const std::string& v) { c.cfg->aggregator.weiszfeld_max_iter = static_cast<int>(c.to_int(v)); }},
         }},
        {"attack",
         {
             {"kind", [](Cursor& c, const std::string& v) { c.cfg->attack.kind = attack_from_string(v); }},
             {"ratio", [](Cursor& c, const std::string& v) { c.cfg->attack.ratio = c.to_double(v); }},
             {"noise_scale", [](Cursor& c, const std::string& v) { c.cfg->attack.noise_scale = c.to_double(v); }},
             {"noise_scale_is_std", [](Cursor& c, const std::string& v) { c.cfg->attack.noise_scale_is_std = c.to_bool(v); }},
             {"label_fraction", [](Cursor& c, const std::string& v) { c.cfg->attack.label_fraction = c.to_double(v); }},
         }},
        {"seeds",
         {
             {"partition", [](Cursor& c, const std::string& v) { c.cfg->seeds.partition = c.to_u64(v); }},
             {"selection", [](Cursor& c, const std::string& v) { c.cfg->seeds.selection = c.to_u64(v); }},
             {"batches", [](Cursor& c, const std::string& v) { c.cfg->seeds.batches = c.to_u64(v); }},
             {"attack", [](Cursor& c, const std::string& v) { c.cfg->seeds.attack = c.to_u64(v); }},
         }},
    };
    return s;
}

}  // namespace

FedConfig parse_config_text(const std::string& text, const std::string& origin) {
    FedConfig cfg;
    Cursor cur{&cfg, origin, 0};
    std::istringstream in(text);
    std::string line;
    std::string section;
    while (std::getline(in, line)) {
        ++cur.line;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') cur.fail("unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (schema().find(section) == schema().end()) {
                cur.fail("unknown section [" + section + "]");
            }
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) cur.fail("expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (section.empty()) cur.fail("key '" + key + "' appears before any [section]");
        if (value.empty()) cur.fail("empty value for key '" + key + "'");
        const auto& keys = schema().at(section);
        const auto it = keys.find(key);
        if (it == keys.end()) cur.fail("unknown key '" + key + "' in section [" + section + "]");
        it->second(cur, value);
    }
    cfg.validate();
    return cfg;
}

FedConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), path);
}

namespace {

std::string fmt_num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

std::string dump_config(const FedConfig& cfg) {
    std::ostringstream out;
    out << "[experiment]\n"
        << "rounds = " << cfg.rounds << "\n"
        << "workers = " << cfg.workers << "\n"
        << "selected = " << cfg.selected << "\n"
        << "local_steps = " << cfg.local_steps << "\n"
        << "batch_size = " << cfg.batch_size << "\n"
        << "stepsize = " << fmt_num(cfg.stepsize) << "\n"
        << "eval_stride = " << cfg.eval_stride << "\n\n";

    out << "[objective]\n"
        << "kind = " << to_string(cfg.objective.kind) << "\n"
        << "seed = " << cfg.objective.seed << "\n";
    if (cfg.objective.kind == ObjectiveKind::Quadratic) {
        out << "dimension = " << cfg.objective.dimension << "\n"
            << "samples_per_worker = " << cfg.objective.samples_per_worker << "\n"
            << "curvature_min = " << fmt_num(cfg.objective.curvature_min) << "\n"
            << "curvature_max = " << fmt_num(cfg.objective.curvature_max) << "\n"
            << "optima_spread = " << fmt_num(cfg.objective.optima_spread) << "\n"
            << "anchor_noise = " << fmt_num(cfg.objective.anchor_noise) << "\n"
            << "theta0_fill = " << fmt_num(cfg.objective.theta0_fill) << "\n";
    } else {
        if (!cfg.objective.csv_path.empty()) {
            out << "csv = " << cfg.objective.csv_path << "\n";
        } else {
            out << "samples = " << cfg.objective.samples << "\n"
                << "features = " << cfg.objective.features << "\n"
                << "classes = " << cfg.objective.classes << "\n"
                << "class_separation = " << fmt_num(cfg.objective.class_separation) << "\n";
        }
        out << "test_fraction = " << fmt_num(cfg.objective.test_fraction) << "\n";
        if (cfg.objective.kind == ObjectiveKind::Mlp) {
            out << "hidden_units = " << cfg.objective.hidden_units << "\n";
        }
    }
    out << "\n[partition]\n"
        << "beta = " << fmt_num(cfg.dirichlet_beta) << "\n\n";

    out << "[aggregator]\n"
        << "kind = " << to_string(cfg.aggregator.kind) << "\n"
        << "alpha = " << fmt_num(cfg.aggregator.alpha) << "\n"
        << "c = " << fmt_num(cfg.aggregator.c) << "\n"
        << "c_t = " << fmt_num(cfg.aggregator.c_t) << "\n"
        << "keep_reference_history = " << (cfg.aggregator.keep_reference_history ? "true" : "false") << "\n"
        << "root_fraction = " << fmt_num(cfg.aggregator.root_fraction) << "\n"
        << "root_max = " << cfg.aggregator.root_max << "\n"
        << "root_robust = " << (cfg.aggregator.root_robust ? "true" : "false") << "\n"
        << "prox_mu = " << fmt_num(cfg.aggregator.prox_mu) << "\n"
        << "exp_epsilon = " << fmt_num(cfg.aggregator.exp_epsilon) << "\n"
        << "acg_beta = " << fmt_num(cfg.aggregator.acg_beta) << "\n"
        << "acg_lambda = " << fmt_num(cfg.aggregator.acg_lambda) << "\n"
        << "weiszfeld_tol = " << fmt_num(cfg.aggregator.weiszfeld_tol) << "\n"
        << "weiszfeld_max_iter = " << cfg.aggregator.weiszfeld_max_iter << "\n\n";

    out << "[attack]\n"
        << "kind = " << to_string(cfg.attack.kind) << "\n"
        << "ratio = " << fmt_num(cfg.attack.ratio) << "\n"
        << "noise_scale = " << fmt_num(cfg.attack.noise_scale) << "\n"
        << "noise_scale_is_std = " << (cfg.attack.noise_scale_is_std ? "true" : "false") << "\n"
        << "label_fraction = " << fmt_num(cfg.attack.label_fraction) << "\n\n";

    out << "[seeds]\n"
        << "partition = " << cfg.seeds.partition << "\n"
        << "selection = " << cfg.seeds.selection << "\n"
        << "batches = " << cfg.seeds.batches << "\n"
        << "attack = " << cfg.seeds.attack << "\n";
    return out.str();
}

}  // namespace fedsim
