#include "fedsim/attacks.hpp"

#include <algorithm>
#include <cmath>

#include "fedsim/errors.hpp"

namespace fedsim {

bool AttackPlan::is_malicious(int worker) const {
    return std::binary_search(malicious.begin(), malicious.end(), worker);
}

std::vector<int> assign_malicious(int workers, double ratio, std::uint64_t attack_seed) {
    if (workers <= 0) throw ConfigError("workers: must be positive");
    if (ratio < 0.0 || ratio > 1.0) throw ConfigError("attack.ratio: must lie in [0, 1]");
    const int count = static_cast<int>(std::floor(ratio * workers + 0.5));
    RngStream rng = make_stream(attack_seed, StreamUse::AttackAssign);
    return rng.sample_without_replacement(workers, count);
}

AttackPlan make_attack_plan(const AttackConfig& cfg, int workers, std::uint64_t attack_seed) {
    AttackPlan plan;
    plan.kind = cfg.kind;
    plan.ratio = cfg.ratio;
    if (cfg.kind != AttackKind::None) {
        plan.malicious = assign_malicious(workers, cfg.ratio, attack_seed);
    }
    return plan;
}

ParamVector noise_inject(const ParamVector& g, double scale, bool scale_is_std, RngStream& rng) {
    if (!(scale > 0.0)) throw ConfigError("attack.noise_scale: must be positive");
    const double std_dev = scale_is_std ? scale : std::sqrt(scale);
    const double p = std_dev * rng.normal();
    return scaled(g, p);
}

ParamVector sign_flip(const ParamVector& g) {
    return scaled(g, -1.0);
}

LabeledDataset label_flip(const LabeledDataset& ds, double fraction, RngStream& rng) {
    if (fraction < 0.0 || fraction > 1.0) {
        throw ConfigError("attack.label_fraction: must lie in [0, 1]");
    }
    ds.validate();
    const int n = ds.size();
    const int count = static_cast<int>(std::floor(fraction * n + 0.5));
    const std::vector<int> rows = rng.sample_without_replacement(n, count);
    LabeledDataset out = ds;
    for (int r : rows) {
        out.labels[static_cast<std::size_t>(r)] =
            ds.num_classes - ds.labels[static_cast<std::size_t>(r)] - 1;
    }
    return out;
}

}  // namespace fedsim
