#pragma once

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "fedsim/config.hpp"
#include "fedsim/dataset.hpp"
#include "fedsim/vecmath.hpp"

namespace fedsim {

// A differentiable training objective. Losses and gradients over an index
// set are always the arithmetic mean of per-sample values, accumulated in
// index order.
class Objective {
  public:
    virtual ~Objective() = default;

    virtual int dim() const = 0;
    virtual bool is_classifier() const = 0;

    virtual double sample_loss(const ParamVector& theta, const LabeledDataset& ds,
                               int row) const = 0;
    // out += d(sample_loss)/d(theta); used to accumulate batch means.
    virtual void add_sample_grad(const ParamVector& theta, const LabeledDataset& ds,
                                 int row, ParamVector& out) const = 0;

    // Predicted class (argmax, ties to the lowest index); classifiers only.
    virtual int predict(const ParamVector& theta, const LabeledDataset& ds, int row) const;

    virtual ParamVector initial_theta() const = 0;

    double batch_loss(const ParamVector& theta, const LabeledDataset& ds,
                      std::span<const int> rows) const;
    ParamVector batch_grad(const ParamVector& theta, const LabeledDataset& ds,
                           std::span<const int> rows) const;

    double full_loss(const ParamVector& theta, const LabeledDataset& ds) const;
    ParamVector full_grad(const ParamVector& theta, const LabeledDataset& ds) const;
};

struct Evaluation {
    double loss = 0.0;
    std::optional<double> accuracy;  // classifiers only
};

// Mean loss over the whole dataset, plus accuracy for classifiers.
// Throws DimensionError if theta does not match the objective.
Evaluation evaluate(const Objective& obj, const ParamVector& theta, const LabeledDataset& ds);

// Per-component quadratic: sample (x, l) costs 0.5 (theta-x)' A_l (theta-x)
// with diagonal positive definite A_l. Component l's samples are anchors
// near that component's optimum, so each worker owns one curvature bowl.
class QuadraticObjective : public Objective {
  public:
    QuadraticObjective(std::vector<ParamVector> curvatures, double theta0_fill);

    int dim() const override;
    bool is_classifier() const override { return false; }
    double sample_loss(const ParamVector& theta, const LabeledDataset& ds, int row) const override;
    void add_sample_grad(const ParamVector& theta, const LabeledDataset& ds, int row,
                         ParamVector& out) const override;
    ParamVector initial_theta() const override;

    const std::vector<ParamVector>& curvatures() const { return curvatures_; }

  private:
    std::vector<ParamVector> curvatures_;  // one diagonal per component
    double theta0_fill_;
};

// Linear softmax classifier. Parameter layout: weight rows first
// (class-major, length classes*features), then the bias vector.
class LogisticObjective : public Objective {
  public:
    LogisticObjective(int feature_dim, int num_classes);

    int dim() const override;
    bool is_classifier() const override { return true; }
    double sample_loss(const ParamVector& theta, const LabeledDataset& ds, int row) const override;
    void add_sample_grad(const ParamVector& theta, const LabeledDataset& ds, int row,
                         ParamVector& out) const override;
    int predict(const ParamVector& theta, const LabeledDataset& ds, int row) const override;
    ParamVector initial_theta() const override;  // zeros

  private:
    void logits(const ParamVector& theta, std::span<const double> x, std::vector<double>& out) const;
    int feature_dim_;
    int num_classes_;
};

// One hidden layer, tanh activation, softmax output. Parameter layout:
// W1 (hidden x features), b1, W2 (classes x hidden), b2.
class MlpObjective : public Objective {
  public:
    MlpObjective(int feature_dim, int hidden, int num_classes, std::uint64_t init_seed);

    int dim() const override;
    bool is_classifier() const override { return true; }
    double sample_loss(const ParamVector& theta, const LabeledDataset& ds, int row) const override;
    void add_sample_grad(const ParamVector& theta, const LabeledDataset& ds, int row,
                         ParamVector& out) const override;
    int predict(const ParamVector& theta, const LabeledDataset& ds, int row) const override;
    ParamVector initial_theta() const override;  // small seeded uniform values

  private:
    void forward(const ParamVector& theta, std::span<const double> x,
                 std::vector<double>& hidden_out, std::vector<double>& logits_out) const;
    int feature_dim_;
    int hidden_;
    int num_classes_;
    std::uint64_t init_seed_;
};

// The quadratic suite couples the objective with per-worker data: worker m
// owns component m, whose anchors sit at that component's optimum (plus
// optional jitter).
struct QuadraticSuite {
    std::shared_ptr<QuadraticObjective> objective;
    std::vector<LabeledDataset> worker_data;  // one shard per worker
    LabeledDataset pooled;                    // concatenation, worker-major
    std::vector<ParamVector> centers;         // component optima (for oracles)
};

QuadraticSuite make_quadratic_suite(const ObjectiveConfig& cfg, int workers);

std::shared_ptr<Objective> make_classifier_objective(const ObjectiveConfig& cfg,
                                                     const LabeledDataset& data);

}  // namespace fedsim
