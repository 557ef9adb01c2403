#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace fedsim {

// Every consumer of randomness draws from its own stream, keyed by
// (base seed, usage tag, worker id, round). Streams are therefore
// independent of execution order and thread schedule: a worker trained
// on thread 3 sees exactly the bits it would see on thread 0, and
// adding draws to one stream never shifts another. Distribution
// transforms are written out explicitly (rather than using
// std::*_distribution) because the standard does not pin down their
// exact output sequences across library implementations.
enum class StreamUse : std::uint64_t {
    DataGen = 1,        // synthetic dataset generation
    ThetaInit = 2,      // model initialisation
    Partition = 3,      // heterogeneous data split
    RootDraw = 4,       // server-side root dataset selection
    Selection = 5,      // per-round worker selection
    Batches = 6,        // per-(worker, round) mini-batch indices
    WarmupBatches = 7,  // reference-seeding pass at round 0
    RootBatches = 8,    // server-side root mini-batches
    AttackAssign = 9,   // malicious worker designation
    Noise = 10,         // per-(worker, round) noise factors
    NoiseWarmup = 11,   // noise factors for the reference-seeding pass
    LabelFlip = 12,     // per-worker poisoned sample choice
};

// Collapses (base, use, worker, round) into one 64-bit stream seed.
std::uint64_t stream_seed(std::uint64_t base, StreamUse use,
                          std::uint64_t worker = 0, std::uint64_t round = 0);

class RngStream {
  public:
    explicit RngStream(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t u64() { return eng_(); }

    // Uniform on [0, 1) with 53 random bits.
    double uniform();

    // Uniform integer in [0, n); n >= 1. Rejection sampling keeps it unbiased.
    int uniform_index(int n);

    // Standard normal via Box-Muller; the paired value is cached.
    double normal();

    // Gamma(shape, 1), shape > 0, Marsaglia-Tsang method.
    double gamma(double shape);

    // Probability vector of length k drawn from a symmetric Dirichlet(beta).
    std::vector<double> dirichlet(double beta, int k);

    // Fisher-Yates in-place shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
            std::swap(v[static_cast<std::size_t>(i)],
                      v[static_cast<std::size_t>(uniform_index(i + 1))]);
        }
    }

    // k distinct values from {0, ..., n-1}, uniform over subsets,
    // returned in ascending order.
    std::vector<int> sample_without_replacement(int n, int k);

  private:
    std::mt19937_64 eng_;
    bool has_cached_normal_ = false;
    double cached_normal_ = 0.0;
};

RngStream make_stream(std::uint64_t base, StreamUse use,
                      std::uint64_t worker = 0, std::uint64_t round = 0);

}  // namespace fedsim
