#include "fedsim/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "fedsim/errors.hpp"

namespace fedsim {

void LabeledDataset::push_row(std::span<const double> x, int label) {
    if (static_cast<int>(x.size()) != feature_dim) {
        throw DimensionError("push_row: row has " + std::to_string(x.size()) +
                             " features, dataset expects " + std::to_string(feature_dim));
    }
    features.insert(features.end(), x.begin(), x.end());
    labels.push_back(label);
}

void LabeledDataset::validate() const {
    if (feature_dim <= 0) throw DataError("dataset: feature_dim must be positive");
    if (num_classes <= 0) throw DataError("dataset: num_classes must be positive");
    if (features.size() != labels.size() * static_cast<std::size_t>(feature_dim)) {
        throw DataError("dataset: feature buffer size does not match label count");
    }
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= num_classes) {
            throw DataError("dataset: label " + std::to_string(labels[i]) + " at row " +
                            std::to_string(i) + " outside [0, " +
                            std::to_string(num_classes) + ")");
        }
    }
}

LabeledDataset make_synthetic_classification(int samples, int feature_dim, int num_classes,
                                             double separation, std::uint64_t seed) {
    if (feature_dim <= 0) throw ConfigError("make_synthetic_classification: feature_dim must be positive");
    if (num_classes < 2) throw ConfigError("make_synthetic_classification: need at least 2 classes");
    if (samples < num_classes) {
        throw ConfigError("make_synthetic_classification: need at least one sample per class");
    }
    if (separation < 0.0) throw ConfigError("make_synthetic_classification: separation must be >= 0");

    RngStream rng = make_stream(seed, StreamUse::DataGen);

    // Class means. Along distinct coordinate axes the pairwise distance of
    // s/sqrt(2)*e_k is exactly s; with more classes than dimensions, fall
    // back to random unit directions at the same radius.
    std::vector<std::vector<double>> means(static_cast<std::size_t>(num_classes),
                                           std::vector<double>(static_cast<std::size_t>(feature_dim), 0.0));
    const double radius = separation / std::sqrt(2.0);
    for (int k = 0; k < num_classes; ++k) {
        auto& mu = means[static_cast<std::size_t>(k)];
        if (num_classes <= feature_dim) {
            mu[static_cast<std::size_t>(k)] = radius;
        } else {
            double nrm = 0.0;
            for (double& x : mu) {
                x = rng.normal();
                nrm += x * x;
            }
            nrm = std::sqrt(nrm);
            if (nrm < 1e-12) nrm = 1.0;
            for (double& x : mu) x *= radius / nrm;
        }
    }

    LabeledDataset ds;
    ds.feature_dim = feature_dim;
    ds.num_classes = num_classes;
    ds.features.reserve(static_cast<std::size_t>(samples) * feature_dim);
    ds.labels.reserve(static_cast<std::size_t>(samples));

    // Near-balanced counts: the first samples % num_classes classes get one extra.
    std::vector<double> x(static_cast<std::size_t>(feature_dim));
    for (int k = 0; k < num_classes; ++k) {
        int count = samples / num_classes + (k < samples % num_classes ? 1 : 0);
        const auto& mu = means[static_cast<std::size_t>(k)];
        for (int i = 0; i < count; ++i) {
            for (int j = 0; j < feature_dim; ++j) {
                x[static_cast<std::size_t>(j)] = mu[static_cast<std::size_t>(j)] + rng.normal();
            }
            ds.push_row(x, k);
        }
    }

    // Shuffle rows so prefix splits are label-agnostic.
    std::vector<int> order(static_cast<std::size_t>(samples));
    for (int i = 0; i < samples; ++i) order[static_cast<std::size_t>(i)] = i;
    rng.shuffle(order);
    return subset(ds, order);
}

TrainTestSplit split_train_test(const LabeledDataset& ds, double test_fraction) {
    if (test_fraction < 0.0 || test_fraction >= 1.0) {
        throw DataError("split_train_test: test_fraction must lie in [0, 1)");
    }
    const int n = ds.size();
    const int n_test = static_cast<int>(std::lround(test_fraction * n));
    std::vector<int> train_idx;
    std::vector<int> test_idx;
    for (int i = 0; i < n - n_test; ++i) train_idx.push_back(i);
    for (int i = n - n_test; i < n; ++i) test_idx.push_back(i);
    if (train_idx.empty()) throw DataError("split_train_test: empty train split");
    return {subset(ds, train_idx), subset(ds, test_idx)};
}

namespace {

// Largest-remainder apportionment of `total` items to `shares`.
// Deterministic: remainder ties break toward the lower index.
std::vector<int> apportion(const std::vector<double>& shares, int total) {
    const int k = static_cast<int>(shares.size());
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    std::vector<std::pair<double, int>> remainders;
    remainders.reserve(static_cast<std::size_t>(k));
    int assigned = 0;
    for (int i = 0; i < k; ++i) {
        const double want = shares[static_cast<std::size_t>(i)] * total;
        const int base = static_cast<int>(std::floor(want));
        counts[static_cast<std::size_t>(i)] = base;
        assigned += base;
        remainders.emplace_back(want - base, i);
    }
    std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    for (int r = 0; r < total - assigned; ++r) {
        counts[static_cast<std::size_t>(remainders[static_cast<std::size_t>(r)].second)]++;
    }
    return counts;
}

}  // namespace

std::vector<std::vector<int>> dirichlet_partition_indices(const LabeledDataset& ds, int workers,
                                                          double beta, std::uint64_t seed) {
    if (workers <= 0) throw PartitionError("dirichlet_partition: workers must be positive");
    if (!(beta > 0.0)) throw PartitionError("dirichlet_partition: beta must be positive");
    ds.validate();
    if (ds.size() < workers) {
        throw PartitionError("dirichlet_partition: fewer samples (" + std::to_string(ds.size()) +
                             ") than workers (" + std::to_string(workers) + ")");
    }

    std::vector<std::vector<int>> by_class(static_cast<std::size_t>(ds.num_classes));
    for (int i = 0; i < ds.size(); ++i) {
        by_class[static_cast<std::size_t>(ds.labels[static_cast<std::size_t>(i)])].push_back(i);
    }

    RngStream rng = make_stream(seed, StreamUse::Partition);
    constexpr int kMaxRetries = 1000;
    for (int attempt = 0; attempt < kMaxRetries; ++attempt) {
        std::vector<std::vector<int>> parts(static_cast<std::size_t>(workers));
        for (auto& cls : by_class) {
            if (cls.empty()) continue;
            std::vector<int> rows = cls;
            rng.shuffle(rows);
            const std::vector<double> shares = rng.dirichlet(beta, workers);
            const std::vector<int> counts = apportion(shares, static_cast<int>(rows.size()));
            int cursor = 0;
            for (int w = 0; w < workers; ++w) {
                for (int c = 0; c < counts[static_cast<std::size_t>(w)]; ++c) {
                    parts[static_cast<std::size_t>(w)].push_back(rows[static_cast<std::size_t>(cursor++)]);
                }
            }
        }
        const bool all_nonempty = std::all_of(parts.begin(), parts.end(),
                                              [](const auto& p) { return !p.empty(); });
        if (all_nonempty) {
            for (auto& p : parts) std::sort(p.begin(), p.end());
            return parts;
        }
    }
    throw PartitionError("dirichlet_partition: could not produce non-empty shards for all " +
                         std::to_string(workers) + " workers after " +
                         std::to_string(kMaxRetries) + " draws (beta=" + std::to_string(beta) + ")");
}

std::vector<LabeledDataset> dirichlet_partition(const LabeledDataset& ds, int workers,
                                                double beta, std::uint64_t seed) {
    const auto parts = dirichlet_partition_indices(ds, workers, beta, seed);
    std::vector<LabeledDataset> out;
    out.reserve(parts.size());
    for (const auto& idx : parts) out.push_back(subset(ds, idx));
    return out;
}

LabeledDataset subset(const LabeledDataset& ds, const std::vector<int>& indices) {
    LabeledDataset out;
    out.feature_dim = ds.feature_dim;
    out.num_classes = ds.num_classes;
    out.features.reserve(indices.size() * static_cast<std::size_t>(ds.feature_dim));
    out.labels.reserve(indices.size());
    for (int i : indices) {
        if (i < 0 || i >= ds.size()) {
            throw DataError("subset: index " + std::to_string(i) + " out of range");
        }
        out.push_row(ds.row(i), ds.labels[static_cast<std::size_t>(i)]);
    }
    return out;
}

MiniBatch sample_batch(const LabeledDataset& ds, int size, RngStream& rng) {
    if (ds.size() == 0) throw DataError("sample_batch: empty dataset");
    if (size <= 0) throw DataError("sample_batch: batch size must be positive");
    MiniBatch b;
    b.indices.resize(static_cast<std::size_t>(size));
    for (int i = 0; i < size; ++i) {
        b.indices[static_cast<std::size_t>(i)] = rng.uniform_index(ds.size());
    }
    return b;
}

LabeledDataset draw_class_balanced(const LabeledDataset& ds, int size, RngStream& rng) {
    ds.validate();
    if (size <= 0) throw DataError("draw_class_balanced: size must be positive");
    std::vector<std::vector<int>> by_class(static_cast<std::size_t>(ds.num_classes));
    for (int i = 0; i < ds.size(); ++i) {
        by_class[static_cast<std::size_t>(ds.labels[static_cast<std::size_t>(i)])].push_back(i);
    }
    std::vector<double> shares(static_cast<std::size_t>(ds.num_classes),
                               1.0 / ds.num_classes);
    std::vector<int> want = apportion(shares, size);
    std::vector<int> chosen;
    for (int k = 0; k < ds.num_classes; ++k) {
        auto& rows = by_class[static_cast<std::size_t>(k)];
        const int take = std::min<int>(want[static_cast<std::size_t>(k)],
                                       static_cast<int>(rows.size()));
        const std::vector<int> pick = rng.sample_without_replacement(
            static_cast<int>(rows.size()), take);
        for (int p : pick) chosen.push_back(rows[static_cast<std::size_t>(p)]);
    }
    if (chosen.empty()) throw DataError("draw_class_balanced: nothing drawn");
    std::sort(chosen.begin(), chosen.end());
    return subset(ds, chosen);
}

LabeledDataset load_csv_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("load_csv_dataset: cannot open " + path);

    std::string line;
    if (!std::getline(in, line)) throw DataError(path + ": missing header row");
    int columns = 1;
    for (char ch : line) {
        if (ch == ',') ++columns;
    }
    if (columns < 2) throw DataError(path + ":1: need at least one feature column and a label");

    LabeledDataset ds;
    ds.feature_dim = columns - 1;
    int max_label = -1;
    int line_no = 1;
    std::vector<double> row(static_cast<std::size_t>(ds.feature_dim));
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        int col = 0;
        int label = -1;
        while (std::getline(ss, cell, ',')) {
            if (col >= columns) break;
            try {
                std::size_t used = 0;
                const double v = std::stod(cell, &used);
                if (col < ds.feature_dim) {
                    row[static_cast<std::size_t>(col)] = v;
                } else {
                    label = static_cast<int>(std::lround(v));
                    if (std::abs(v - label) > 1e-9) {
                        throw DataError(path + ":" + std::to_string(line_no) +
                                        ": label column must be an integer, got '" + cell + "'");
                    }
                }
            } catch (const DataError&) {
                throw;
            } catch (const std::exception&) {
                throw DataError(path + ":" + std::to_string(line_no) +
                                ": cannot parse value '" + cell + "'");
            }
            ++col;
        }
        if (col != columns) {
            throw DataError(path + ":" + std::to_string(line_no) + ": expected " +
                            std::to_string(columns) + " columns, got " + std::to_string(col));
        }
        if (label < 0) {
            throw DataError(path + ":" + std::to_string(line_no) + ": negative label");
        }
        max_label = std::max(max_label, label);
        ds.push_row(row, label);
    }
    if (ds.size() == 0) throw DataError(path + ": no data rows");
    ds.num_classes = max_label + 1;
    if (ds.num_classes < 2) ds.num_classes = 2;
    ds.validate();
    return ds;
}

double label_entropy(const LabeledDataset& ds) {
    if (ds.size() == 0) return 0.0;
    std::vector<int> counts(static_cast<std::size_t>(ds.num_classes), 0);
    for (int l : ds.labels) counts[static_cast<std::size_t>(l)]++;
    double h = 0.0;
    for (int c : counts) {
        if (c == 0) continue;
        const double p = static_cast<double>(c) / ds.size();
        h -= p * std::log(p);
    }
    return h;
}

}  // namespace fedsim
