#include "fedsim/objective.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fedsim/errors.hpp"
#include "fedsim/rng.hpp"

namespace fedsim {

int Objective::predict(const ParamVector&, const LabeledDataset&, int) const {
    throw ProtocolError("predict: objective is not a classifier");
}

double Objective::batch_loss(const ParamVector& theta, const LabeledDataset& ds,
                             std::span<const int> rows) const {
    if (rows.empty()) throw DataError("batch_loss: empty index set");
    double s = 0.0;
    for (int r : rows) s += sample_loss(theta, ds, r);
    return s / static_cast<double>(rows.size());
}

ParamVector Objective::batch_grad(const ParamVector& theta, const LabeledDataset& ds,
                                  std::span<const int> rows) const {
    if (rows.empty()) throw DataError("batch_grad: empty index set");
    ParamVector g(static_cast<std::size_t>(dim()), 0.0);
    for (int r : rows) add_sample_grad(theta, ds, r, g);
    const double inv = 1.0 / static_cast<double>(rows.size());
    for (double& x : g) x *= inv;
    return g;
}

double Objective::full_loss(const ParamVector& theta, const LabeledDataset& ds) const {
    std::vector<int> rows(static_cast<std::size_t>(ds.size()));
    for (int i = 0; i < ds.size(); ++i) rows[static_cast<std::size_t>(i)] = i;
    return batch_loss(theta, ds, rows);
}

ParamVector Objective::full_grad(const ParamVector& theta, const LabeledDataset& ds) const {
    std::vector<int> rows(static_cast<std::size_t>(ds.size()));
    for (int i = 0; i < ds.size(); ++i) rows[static_cast<std::size_t>(i)] = i;
    return batch_grad(theta, ds, rows);
}

Evaluation evaluate(const Objective& obj, const ParamVector& theta, const LabeledDataset& ds) {
    if (static_cast<int>(theta.size()) != obj.dim()) {
        throw DimensionError("evaluate: theta has " + std::to_string(theta.size()) +
                             " parameters, objective expects " + std::to_string(obj.dim()));
    }
    if (ds.size() == 0) throw DataError("evaluate: empty dataset");
    Evaluation ev;
    ev.loss = obj.full_loss(theta, ds);
    if (obj.is_classifier()) {
        int hits = 0;
        for (int i = 0; i < ds.size(); ++i) {
            if (obj.predict(theta, ds, i) == ds.labels[static_cast<std::size_t>(i)]) ++hits;
        }
        ev.accuracy = static_cast<double>(hits) / ds.size();
    }
    return ev;
}

// ---------------------------------------------------------------- quadratic

QuadraticObjective::QuadraticObjective(std::vector<ParamVector> curvatures, double theta0_fill)
    : curvatures_(std::move(curvatures)), theta0_fill_(theta0_fill) {
    if (curvatures_.empty()) throw ConfigError("quadratic: need at least one component");
    for (const auto& a : curvatures_) {
        if (a.size() != curvatures_[0].size()) {
            throw DimensionError("quadratic: curvature dimension mismatch");
        }
        for (double v : a) {
            if (!(v > 0.0)) throw ConfigError("quadratic: curvatures must be positive");
        }
    }
}

int QuadraticObjective::dim() const {
    return static_cast<int>(curvatures_[0].size());
}

double QuadraticObjective::sample_loss(const ParamVector& theta, const LabeledDataset& ds,
                                       int row) const {
    const auto x = ds.row(row);
    const auto& a = curvatures_[static_cast<std::size_t>(ds.labels[static_cast<std::size_t>(row)])];
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double d = theta[j] - x[j];
        s += a[j] * d * d;
    }
    return 0.5 * s;
}

void QuadraticObjective::add_sample_grad(const ParamVector& theta, const LabeledDataset& ds,
                                         int row, ParamVector& out) const {
    const auto x = ds.row(row);
    const auto& a = curvatures_[static_cast<std::size_t>(ds.labels[static_cast<std::size_t>(row)])];
    for (std::size_t j = 0; j < a.size(); ++j) out[j] += a[j] * (theta[j] - x[j]);
}

ParamVector QuadraticObjective::initial_theta() const {
    return ParamVector(static_cast<std::size_t>(dim()), theta0_fill_);
}

QuadraticSuite make_quadratic_suite(const ObjectiveConfig& cfg, int workers) {
    if (workers <= 0) throw ConfigError("quadratic suite: workers must be positive");
    if (cfg.dimension <= 0) throw ConfigError("dimension: must be positive");
    if (cfg.samples_per_worker <= 0) throw ConfigError("samples_per_worker: must be positive");
    if (!(cfg.curvature_min > 0.0) || cfg.curvature_max < cfg.curvature_min) {
        throw ConfigError("curvature_min/curvature_max: need 0 < min <= max");
    }

    RngStream rng = make_stream(cfg.seed, StreamUse::DataGen);
    const int d = cfg.dimension;

    std::vector<ParamVector> curvatures;
    std::vector<ParamVector> centers;
    curvatures.reserve(static_cast<std::size_t>(workers));
    centers.reserve(static_cast<std::size_t>(workers));
    for (int m = 0; m < workers; ++m) {
        ParamVector a(static_cast<std::size_t>(d));
        ParamVector c(static_cast<std::size_t>(d));
        for (int j = 0; j < d; ++j) {
            a[static_cast<std::size_t>(j)] =
                cfg.curvature_min + (cfg.curvature_max - cfg.curvature_min) * rng.uniform();
            c[static_cast<std::size_t>(j)] = cfg.optima_spread * rng.normal();
        }
        curvatures.push_back(std::move(a));
        centers.push_back(std::move(c));
    }

    QuadraticSuite suite;
    suite.objective = std::make_shared<QuadraticObjective>(curvatures, cfg.theta0_fill);
    suite.centers = centers;
    suite.pooled.feature_dim = d;
    suite.pooled.num_classes = workers;

    ParamVector x(static_cast<std::size_t>(d));
    for (int m = 0; m < workers; ++m) {
        LabeledDataset shard;
        shard.feature_dim = d;
        shard.num_classes = workers;
        for (int i = 0; i < cfg.samples_per_worker; ++i) {
            for (int j = 0; j < d; ++j) {
                x[static_cast<std::size_t>(j)] =
                    centers[static_cast<std::size_t>(m)][static_cast<std::size_t>(j)] +
                    cfg.anchor_noise * rng.normal();
            }
            shard.push_row(x, m);
            suite.pooled.push_row(x, m);
        }
        suite.worker_data.push_back(std::move(shard));
    }
    return suite;
}

// ----------------------------------------------------------------- logistic

LogisticObjective::LogisticObjective(int feature_dim, int num_classes)
    : feature_dim_(feature_dim), num_classes_(num_classes) {
    if (feature_dim <= 0 || num_classes < 2) {
        throw ConfigError("logistic: need feature_dim >= 1 and num_classes >= 2");
    }
}

int LogisticObjective::dim() const {
    return num_classes_ * feature_dim_ + num_classes_;
}

void LogisticObjective::logits(const ParamVector& theta, std::span<const double> x,
                               std::vector<double>& out) const {
    out.assign(static_cast<std::size_t>(num_classes_), 0.0);
    for (int k = 0; k < num_classes_; ++k) {
        const double* w = theta.data() + static_cast<std::size_t>(k) * feature_dim_;
        double s = theta[static_cast<std::size_t>(num_classes_ * feature_dim_ + k)];
        for (int j = 0; j < feature_dim_; ++j) s += w[j] * x[static_cast<std::size_t>(j)];
        out[static_cast<std::size_t>(k)] = s;
    }
}

namespace {

// In-place softmax with the max-shift trick; returns log(sum exp).
double log_sum_exp_to_probs(std::vector<double>& z) {
    const double zmax = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double& v : z) {
        v = std::exp(v - zmax);
        sum += v;
    }
    for (double& v : z) v /= sum;
    return zmax + std::log(sum);
}

}  // namespace

double LogisticObjective::sample_loss(const ParamVector& theta, const LabeledDataset& ds,
                                      int row) const {
    std::vector<double> z;
    logits(theta, ds.row(row), z);
    const int y = ds.labels[static_cast<std::size_t>(row)];
    const double zmax = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - zmax);
    return zmax + std::log(sum) - z[static_cast<std::size_t>(y)];
}

void LogisticObjective::add_sample_grad(const ParamVector& theta, const LabeledDataset& ds,
                                        int row, ParamVector& out) const {
    const auto x = ds.row(row);
    std::vector<double> p;
    logits(theta, x, p);
    log_sum_exp_to_probs(p);
    const int y = ds.labels[static_cast<std::size_t>(row)];
    p[static_cast<std::size_t>(y)] -= 1.0;
    for (int k = 0; k < num_classes_; ++k) {
        const double pk = p[static_cast<std::size_t>(k)];
        double* w = out.data() + static_cast<std::size_t>(k) * feature_dim_;
        for (int j = 0; j < feature_dim_; ++j) w[j] += pk * x[static_cast<std::size_t>(j)];
        out[static_cast<std::size_t>(num_classes_ * feature_dim_ + k)] += pk;
    }
}

int LogisticObjective::predict(const ParamVector& theta, const LabeledDataset& ds, int row) const {
    std::vector<double> z;
    logits(theta, ds.row(row), z);
    return static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
}

ParamVector LogisticObjective::initial_theta() const {
    return ParamVector(static_cast<std::size_t>(dim()), 0.0);
}

// ---------------------------------------------------------------------- mlp

MlpObjective::MlpObjective(int feature_dim, int hidden, int num_classes, std::uint64_t init_seed)
    : feature_dim_(feature_dim), hidden_(hidden), num_classes_(num_classes), init_seed_(init_seed) {
    if (feature_dim <= 0 || hidden <= 0 || num_classes < 2) {
        throw ConfigError("mlp: need feature_dim >= 1, hidden >= 1, num_classes >= 2");
    }
}

int MlpObjective::dim() const {
    return hidden_ * feature_dim_ + hidden_ + num_classes_ * hidden_ + num_classes_;
}

void MlpObjective::forward(const ParamVector& theta, std::span<const double> x,
                           std::vector<double>& hidden_out, std::vector<double>& logits_out) const {
    const double* w1 = theta.data();
    const double* b1 = w1 + static_cast<std::size_t>(hidden_) * feature_dim_;
    const double* w2 = b1 + hidden_;
    const double* b2 = w2 + static_cast<std::size_t>(num_classes_) * hidden_;

    hidden_out.assign(static_cast<std::size_t>(hidden_), 0.0);
    for (int h = 0; h < hidden_; ++h) {
        const double* row = w1 + static_cast<std::size_t>(h) * feature_dim_;
        double s = b1[h];
        for (int j = 0; j < feature_dim_; ++j) s += row[j] * x[static_cast<std::size_t>(j)];
        hidden_out[static_cast<std::size_t>(h)] = std::tanh(s);
    }
    logits_out.assign(static_cast<std::size_t>(num_classes_), 0.0);
    for (int k = 0; k < num_classes_; ++k) {
        const double* row = w2 + static_cast<std::size_t>(k) * hidden_;
        double s = b2[k];
        for (int h = 0; h < hidden_; ++h) s += row[h] * hidden_out[static_cast<std::size_t>(h)];
        logits_out[static_cast<std::size_t>(k)] = s;
    }
}

double MlpObjective::sample_loss(const ParamVector& theta, const LabeledDataset& ds,
                                 int row) const {
    std::vector<double> h, z;
    forward(theta, ds.row(row), h, z);
    const int y = ds.labels[static_cast<std::size_t>(row)];
    const double zmax = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - zmax);
    return zmax + std::log(sum) - z[static_cast<std::size_t>(y)];
}

void MlpObjective::add_sample_grad(const ParamVector& theta, const LabeledDataset& ds,
                                   int row, ParamVector& out) const {
    const auto x = ds.row(row);
    std::vector<double> h, p;
    forward(theta, x, h, p);
    log_sum_exp_to_probs(p);
    const int y = ds.labels[static_cast<std::size_t>(row)];
    p[static_cast<std::size_t>(y)] -= 1.0;  // p is now dLoss/dLogits

    const double* w2 = theta.data() + static_cast<std::size_t>(hidden_) * feature_dim_ + hidden_;
    double* gw1 = out.data();
    double* gb1 = gw1 + static_cast<std::size_t>(hidden_) * feature_dim_;
    double* gw2 = gb1 + hidden_;
    double* gb2 = gw2 + static_cast<std::size_t>(num_classes_) * hidden_;

    // Output layer.
    for (int k = 0; k < num_classes_; ++k) {
        const double pk = p[static_cast<std::size_t>(k)];
        double* row_g = gw2 + static_cast<std::size_t>(k) * hidden_;
        for (int j = 0; j < hidden_; ++j) row_g[j] += pk * h[static_cast<std::size_t>(j)];
        gb2[k] += pk;
    }
    // Hidden layer: delta_h = (W2' p) .* (1 - h^2).
    for (int j = 0; j < hidden_; ++j) {
        double back = 0.0;
        for (int k = 0; k < num_classes_; ++k) {
            back += w2[static_cast<std::size_t>(k) * hidden_ + j] * p[static_cast<std::size_t>(k)];
        }
        const double hj = h[static_cast<std::size_t>(j)];
        const double dj = back * (1.0 - hj * hj);
        double* row_g = gw1 + static_cast<std::size_t>(j) * feature_dim_;
        for (int i = 0; i < feature_dim_; ++i) row_g[i] += dj * x[static_cast<std::size_t>(i)];
        gb1[j] += dj;
    }
}

int MlpObjective::predict(const ParamVector& theta, const LabeledDataset& ds, int row) const {
    std::vector<double> h, z;
    forward(theta, ds.row(row), h, z);
    return static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
}

ParamVector MlpObjective::initial_theta() const {
    // Zero weights make the hidden layer's gradient vanish identically, so
    // start from small seeded uniform values instead.
    RngStream rng = make_stream(init_seed_, StreamUse::ThetaInit);
    ParamVector theta(static_cast<std::size_t>(dim()));
    const double s1 = 0.5 / std::sqrt(static_cast<double>(feature_dim_));
    const double s2 = 0.5 / std::sqrt(static_cast<double>(hidden_));
    const std::size_t w1_end = static_cast<std::size_t>(hidden_) * feature_dim_ + hidden_;
    for (std::size_t i = 0; i < theta.size(); ++i) {
        const double s = i < w1_end ? s1 : s2;
        theta[i] = s * (2.0 * rng.uniform() - 1.0);
    }
    return theta;
}

std::shared_ptr<Objective> make_classifier_objective(const ObjectiveConfig& cfg,
                                                     const LabeledDataset& data) {
    switch (cfg.kind) {
        case ObjectiveKind::Logistic:
            return std::make_shared<LogisticObjective>(data.feature_dim, data.num_classes);
        case ObjectiveKind::Mlp:
            return std::make_shared<MlpObjective>(data.feature_dim, cfg.hidden_units,
                                                  data.num_classes, cfg.seed);
        case ObjectiveKind::Quadratic:
            throw ConfigError("objective.kind: quadratic objectives carry their own data; "
                              "use make_quadratic_suite");
    }
    throw ConfigError("objective.kind: unknown kind");
}

}  // namespace fedsim
