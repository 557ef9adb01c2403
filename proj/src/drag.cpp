#include "fedsim/drag.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fedsim/baselines.hpp"
#include "fedsim/errors.hpp"

namespace fedsim {

namespace {
constexpr double kNormFloor = 1e-12;
}

double dod(const ParamVector& g, const ParamVector& r, double c) {
    if (c < 0.0 || c > 1.0) {
        throw ConfigError("c: divergence scale must lie in [0, 1], got " + std::to_string(c));
    }
    const double lambda = c * (1.0 - cosine(g, r));
    // cosine is exact in [-1, 1] up to rounding; clamp the last-bit overshoot.
    return std::clamp(lambda, 0.0, 2.0 * c);
}

ParamVector modify_drag(const ParamVector& g, const ParamVector& r, double lambda) {
    check_same_dim(g, r, "modify_drag");
    const double ng = norm2(g);
    const double nr = norm2(r);
    if (nr <= kNormFloor || ng <= kNormFloor) return g;  // nothing to calibrate toward
    const double rscale = lambda * ng / nr;
    ParamVector v(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        v[i] = (1.0 - lambda) * g[i] + rscale * r[i];
    }
    return v;
}

ParamVector modify_br(const ParamVector& g, const ParamVector& r, double lambda) {
    check_same_dim(g, r, "modify_br");
    const double ng = norm2(g);
    const double nr = norm2(r);
    if (nr <= kNormFloor) return ParamVector(g.size(), 0.0);  // no trusted direction
    if (ng <= kNormFloor) return scaled(r, lambda);           // nothing to rescale
    const double gscale = (1.0 - lambda) * nr / ng;
    ParamVector v(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        v[i] = gscale * g[i] + lambda * r[i];
    }
    return v;
}

ParamVector reference_init(const std::vector<ParamVector>& uploads) {
    if (uploads.empty()) throw ProtocolError("reference_init: no uploads");
    return mean_of(uploads);
}

ParamVector reference_step(const ParamVector& r_prev, const ParamVector& delta_prev, double alpha) {
    if (!(alpha > 0.0) || !(alpha < 1.0)) {
        throw ConfigError("alpha: reference mixing must lie in (0, 1), got " + std::to_string(alpha));
    }
    check_same_dim(r_prev, delta_prev, "reference_step");
    ParamVector r(r_prev.size());
    for (std::size_t i = 0; i < r.size(); ++i) {
        r[i] = (1.0 - alpha) * r_prev[i] + alpha * delta_prev[i];
    }
    return r;
}

ParamVector closed_form_reference(const ParamVector& g0_mean,
                                  const std::vector<ParamVector>& deltas, double alpha, int t) {
    if (!(alpha > 0.0) || !(alpha < 1.0)) {
        throw ConfigError("alpha: reference mixing must lie in (0, 1), got " + std::to_string(alpha));
    }
    if (t < 0 || t > static_cast<int>(deltas.size())) {
        throw ProtocolError("closed_form_reference: need 0 <= t <= deltas.size()");
    }
    ParamVector r = scaled(g0_mean, std::pow(1.0 - alpha, t));
    for (int i = 0; i < t; ++i) {
        const double w = alpha * std::pow(1.0 - alpha, t - i - 1);
        axpy(w, deltas[static_cast<std::size_t>(i)], r);
    }
    return r;
}

ParamVector aggregate_modified(const std::vector<ParamVector>& vs) {
    if (vs.empty()) throw ProtocolError("aggregate_modified: empty cohort");
    return mean_of(vs);
}

ParamVector root_reference(const Objective& obj, const LabeledDataset& root,
                           const ParamVector& theta, const BrDragOptions& opt, RngStream& rng) {
    if (root.size() == 0) throw DataError("root_reference: empty root dataset");
    ParamVector cur = theta;
    for (int u = 0; u < opt.local_steps; ++u) {
        const MiniBatch batch = sample_batch(root, opt.batch_size, rng);
        ParamVector grad;
        if (opt.robust_root) {
            // Median-of-gradients hedge against a poisoned root sample.
            std::vector<ParamVector> per_sample;
            per_sample.reserve(batch.indices.size());
            for (int row : batch.indices) {
                ParamVector g(static_cast<std::size_t>(obj.dim()), 0.0);
                obj.add_sample_grad(cur, root, row, g);
                per_sample.push_back(std::move(g));
            }
            grad = weiszfeld_geomed_point(per_sample, opt.weiszfeld_tol, opt.weiszfeld_max_iter);
        } else {
            grad = obj.batch_grad(cur, root, batch.indices);
        }
        axpy(-opt.stepsize, grad, cur);
    }
    return sub(cur, theta);
}

DodReport compute_dod_report(const std::vector<ParamVector>& uploads,
                             const std::vector<bool>& upload_is_malicious,
                             const ParamVector& r, const std::vector<double>& lambda) {
    if (uploads.size() != upload_is_malicious.size() || uploads.size() != lambda.size()) {
        throw ProtocolError("compute_dod_report: upload/flag/lambda counts disagree");
    }
    if (uploads.empty()) throw ProtocolError("compute_dod_report: empty cohort");

    DodReport rep;
    rep.lambda = lambda;
    rep.cosine.resize(uploads.size());
    const double nr = norm2(r);
    const double inv_s = 1.0 / static_cast<double>(uploads.size());
    rep.lambda_max = lambda[0];
    for (std::size_t i = 0; i < uploads.size(); ++i) {
        const double cos_i = cosine(uploads[i], r);
        rep.cosine[i] = cos_i;
        rep.lambda_mean += lambda[i] * inv_s;
        rep.lambda_max = std::max(rep.lambda_max, lambda[i]);
        if (upload_is_malicious[i]) {
            rep.has_malicious = true;
            rep.malicious_cosine += cos_i * inv_s;
        } else {
            rep.has_benign = true;
            rep.benign_cosine += cos_i * inv_s;
            const double ng = norm2(uploads[i]);
            const double rho = ng <= kNormFloor ? 0.0 : nr / ng;
            rep.norm_ratio += cos_i * rho * inv_s;
            rep.benign_weight += (1.0 - lambda[i]) * rho * inv_s;
        }
    }
    return rep;
}

}  // namespace fedsim
