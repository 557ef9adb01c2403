#pragma once

#include <cstdint>
#include <vector>

#include "fedsim/config.hpp"
#include "fedsim/dataset.hpp"
#include "fedsim/rng.hpp"
#include "fedsim/vecmath.hpp"

namespace fedsim {

// Which workers are compromised, fixed for the whole run.
struct AttackPlan {
    AttackKind kind = AttackKind::None;
    double ratio = 0.0;
    std::vector<int> malicious;  // ascending worker ids

    bool is_malicious(int worker) const;
};

// Picks round(ratio * workers) ids uniformly without replacement.
std::vector<int> assign_malicious(int workers, double ratio, std::uint64_t attack_seed);

AttackPlan make_attack_plan(const AttackConfig& cfg, int workers, std::uint64_t attack_seed);

// Upload becomes p * g with one scalar p ~ N(0, scale) per call
// (scale is the variance unless scale_is_std).
ParamVector noise_inject(const ParamVector& g, double scale, bool scale_is_std, RngStream& rng);

// Upload becomes -g.
ParamVector sign_flip(const ParamVector& g);

// Replaces label l with (num_classes - l - 1) on exactly
// round(fraction * n) rows chosen uniformly without replacement.
// Applied once to a worker's local shard; the clean pool is untouched.
LabeledDataset label_flip(const LabeledDataset& ds, double fraction, RngStream& rng);

}  // namespace fedsim
