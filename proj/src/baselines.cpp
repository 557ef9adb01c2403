#include "fedsim/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fedsim/errors.hpp"

namespace fedsim {

ParamVector fedavg_aggregate(const std::vector<ParamVector>& uploads) {
    if (uploads.empty()) throw ProtocolError("fedavg_aggregate: empty cohort");
    return mean_of(uploads);
}

ParamVector fedprox_local_step(const ParamVector& theta, const ParamVector& theta_global,
                               const ParamVector& grad, double eta, double mu) {
    check_same_dim(theta, theta_global, "fedprox_local_step");
    check_same_dim(theta, grad, "fedprox_local_step");
    ParamVector out(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) {
        out[i] = theta[i] - eta * (grad[i] + mu * (theta[i] - theta_global[i]));
    }
    return out;
}

ParamVector scaffold_local_step(const ParamVector& theta, const ParamVector& grad,
                                const ParamVector& h_local, const ParamVector& h_global,
                                double eta) {
    check_same_dim(theta, grad, "scaffold_local_step");
    check_same_dim(theta, h_local, "scaffold_local_step");
    check_same_dim(theta, h_global, "scaffold_local_step");
    ParamVector out(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) {
        out[i] = theta[i] - eta * (grad[i] - h_local[i] + h_global[i]);
    }
    return out;
}

ScaffoldState ScaffoldState::zeros(int workers, int dim) {
    ScaffoldState st;
    st.h.assign(static_cast<std::size_t>(dim), 0.0);
    st.h_m.assign(static_cast<std::size_t>(workers),
                  ParamVector(static_cast<std::size_t>(dim), 0.0));
    return st;
}

void scaffold_update_controls(ScaffoldState& st, const std::vector<int>& selected,
                              const std::vector<ParamVector>& first_grads, int workers) {
    if (selected.size() != first_grads.size()) {
        throw ProtocolError("scaffold_update_controls: selected/gradient counts disagree");
    }
    const double inv_m = 1.0 / static_cast<double>(workers);
    for (std::size_t i = 0; i < selected.size(); ++i) {
        const auto w = static_cast<std::size_t>(selected[i]);
        if (w >= st.h_m.size()) throw ProtocolError("scaffold_update_controls: worker id out of range");
        ParamVector& hm = st.h_m[w];
        check_same_dim(hm, first_grads[i], "scaffold_update_controls");
        for (std::size_t j = 0; j < hm.size(); ++j) {
            st.h[j] += inv_m * (first_grads[i][j] - hm[j]);
        }
        hm = first_grads[i];
    }
}

FedExpResult fedexp_step(const std::vector<ParamVector>& uploads, double epsilon) {
    if (uploads.empty()) throw ProtocolError("fedexp_step: empty cohort");
    if (!(epsilon > 0.0)) throw ConfigError("exp_epsilon: must be positive");
    FedExpResult res;
    ParamVector mean = mean_of(uploads);
    double sum_sq = 0.0;
    for (const auto& g : uploads) {
        const double n = norm2(g);
        sum_sq += n * n;
    }
    const double mean_norm = norm2(mean);
    const double denom = 2.0 * static_cast<double>(uploads.size()) *
                         (mean_norm * mean_norm + epsilon);
    res.eta_g = std::max(1.0, sum_sq / denom);
    res.delta = scaled(mean, res.eta_g);
    return res;
}

ParamVector fedacg_anchor(const FedAcgState& st, const ParamVector& theta, double lambda) {
    if (!st.has_prev) return theta;
    ParamVector anchor = st.prev_theta;
    axpy(lambda, st.momentum, anchor);
    return anchor;
}

ParamVector fedacg_server_update(FedAcgState& st, const ParamVector& theta,
                                 const std::vector<ParamVector>& uploads, double lambda) {
    if (uploads.empty()) throw ProtocolError("fedacg_server_update: empty cohort");
    const ParamVector mean = mean_of(uploads);
    if (!st.has_prev) {
        st.momentum.assign(theta.size(), 0.0);
        st.has_prev = true;
    }
    for (std::size_t i = 0; i < st.momentum.size(); ++i) {
        st.momentum[i] = lambda * st.momentum[i] + mean[i];
    }
    st.prev_theta = theta;
    return add(theta, mean);
}

ParamVector fltrust_modify(const ParamVector& g, const ParamVector& r) {
    check_same_dim(g, r, "fltrust_modify");
    const double trust = std::max(0.0, cosine(g, r));
    if (trust == 0.0) return ParamVector(g.size(), 0.0);
    const double nr = norm2(r);
    if (nr <= 1e-12) return ParamVector(g.size(), 0.0);
    return scaled(r, trust * norm2(g) / nr);
}

double geomed_objective(const std::vector<ParamVector>& points, const ParamVector& y) {
    double s = 0.0;
    for (const auto& x : points) s += norm2(sub(x, y));
    return s;
}

WeiszfeldResult weiszfeld_geomed(const std::vector<ParamVector>& points, double tol,
                                 int max_iter) {
    if (points.empty()) throw ProtocolError("weiszfeld_geomed: empty point set");
    if (!(tol > 0.0)) throw ConfigError("weiszfeld_tol: must be positive");
    if (max_iter < 1) throw ConfigError("weiszfeld_max_iter: must be >= 1");
    constexpr double kDistFloor = 1e-12;

    WeiszfeldResult res;
    ParamVector y = mean_of(points);
    res.objective_trace.push_back(geomed_objective(points, y));
    ParamVector best = y;
    double best_obj = res.objective_trace.back();

    for (int it = 0; it < max_iter; ++it) {
        ParamVector num(y.size(), 0.0);
        double den = 0.0;
        for (const auto& x : points) {
            const double d = std::max(norm2(sub(x, y)), kDistFloor);
            axpy(1.0 / d, x, num);
            den += 1.0 / d;
        }
        ParamVector next = scaled(num, 1.0 / den);
        const double step = norm2(sub(next, y));
        y = std::move(next);
        res.iterations = it + 1;
        const double obj = geomed_objective(points, y);
        res.objective_trace.push_back(obj);
        if (obj < best_obj) {
            best_obj = obj;
            best = y;
        }
        if (step < tol) {
            res.converged = true;
            break;
        }
    }
    res.point = res.converged ? y : best;
    return res;
}

ParamVector weiszfeld_geomed_point(const std::vector<ParamVector>& points, double tol,
                                   int max_iter) {
    return weiszfeld_geomed(points, tol, max_iter).point;
}

ParamVector rfa_aggregate(const ParamVector& theta, const std::vector<ParamVector>& uploads,
                          double tol, int max_iter) {
    if (uploads.empty()) throw ProtocolError("rfa_aggregate: empty cohort");
    std::vector<ParamVector> models;
    models.reserve(uploads.size());
    for (const auto& g : uploads) models.push_back(add(theta, g));
    return weiszfeld_geomed_point(models, tol, max_iter);
}

ParamVector raga_aggregate(const ParamVector& theta, const std::vector<ParamVector>& uploads,
                           double tol, int max_iter) {
    if (uploads.empty()) throw ProtocolError("raga_aggregate: empty cohort");
    return add(theta, weiszfeld_geomed_point(uploads, tol, max_iter));
}

}  // namespace fedsim
