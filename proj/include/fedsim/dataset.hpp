#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fedsim/rng.hpp"

namespace fedsim {

// Row-major feature matrix plus integer labels in [0, num_classes).
struct LabeledDataset {
    int feature_dim = 0;
    int num_classes = 0;
    std::vector<double> features;  // size() == labels.size() * feature_dim
    std::vector<int> labels;

    int size() const { return static_cast<int>(labels.size()); }

    std::span<const double> row(int i) const {
        return {features.data() + static_cast<std::size_t>(i) * feature_dim,
                static_cast<std::size_t>(feature_dim)};
    }

    void push_row(std::span<const double> x, int label);

    // Throws DataError if sizes disagree or a label is out of range.
    void validate() const;
};

// Indices into a dataset drawn with replacement.
struct MiniBatch {
    std::vector<int> indices;
};

// Gaussian class clusters: class k gets mean mu_k with pairwise distance
// `separation` (exactly, when num_classes <= feature_dim), unit covariance,
// near-balanced counts, rows shuffled. Deterministic in `seed`.
LabeledDataset make_synthetic_classification(int samples, int feature_dim, int num_classes,
                                             double separation, std::uint64_t seed);

// First (1 - test_fraction) rows -> train, rest -> test. Rows were already
// shuffled at generation time, so a prefix split is unbiased.
struct TrainTestSplit {
    LabeledDataset train;
    LabeledDataset test;
};
TrainTestSplit split_train_test(const LabeledDataset& ds, double test_fraction);

// Heterogeneous split: for each class, worker shares are drawn from a
// symmetric Dirichlet(beta) and samples are assigned by largest remainder,
// so the parts cover the input exactly. Redraws (bounded) until every
// worker owns at least one sample; throws PartitionError otherwise.
std::vector<std::vector<int>> dirichlet_partition_indices(const LabeledDataset& ds, int workers,
                                                          double beta, std::uint64_t seed);
std::vector<LabeledDataset> dirichlet_partition(const LabeledDataset& ds, int workers,
                                                double beta, std::uint64_t seed);

LabeledDataset subset(const LabeledDataset& ds, const std::vector<int>& indices);

// `size` indices drawn uniformly with replacement.
MiniBatch sample_batch(const LabeledDataset& ds, int size, RngStream& rng);

// Class-balanced draw without replacement (per class; class totals are
// balanced by largest remainder when size % num_classes != 0).
LabeledDataset draw_class_balanced(const LabeledDataset& ds, int size, RngStream& rng);

// CSV with a header row; every column but the last is a feature, the last
// column is an integer label. Errors carry 1-based line numbers.
LabeledDataset load_csv_dataset(const std::string& path);

// Empirical label-distribution entropy (nats) of one dataset.
double label_entropy(const LabeledDataset& ds);

}  // namespace fedsim
