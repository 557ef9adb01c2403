#include "fedsim/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fedsim/errors.hpp"

namespace fedsim {

namespace {

// splitmix64 finalizer; good avalanche, cheap, and stable across platforms.
std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

std::uint64_t stream_seed(std::uint64_t base, StreamUse use,
                          std::uint64_t worker, std::uint64_t round) {
    std::uint64_t h = mix64(base);
    h = mix64(h ^ static_cast<std::uint64_t>(use));
    h = mix64(h ^ worker);
    h = mix64(h ^ round);
    return h;
}

RngStream make_stream(std::uint64_t base, StreamUse use,
                      std::uint64_t worker, std::uint64_t round) {
    return RngStream(stream_seed(base, use, worker, round));
}

double RngStream::uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
}

int RngStream::uniform_index(int n) {
    if (n <= 0) throw ProtocolError("uniform_index: n must be positive");
    const std::uint64_t un = static_cast<std::uint64_t>(n);
    const std::uint64_t limit =
        std::numeric_limits<std::uint64_t>::max() -
        std::numeric_limits<std::uint64_t>::max() % un;
    std::uint64_t x;
    do {
        x = eng_();
    } while (x >= limit);
    return static_cast<int>(x % un);
}

double RngStream::normal() {
    if (has_cached_normal_) {
        has_cached_normal_ = false;
        return cached_normal_;
    }
    // u1 in (0, 1] so the log is finite.
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * 3.14159265358979323846 * u2;
    cached_normal_ = radius * std::sin(angle);
    has_cached_normal_ = true;
    return radius * std::cos(angle);
}

double RngStream::gamma(double shape) {
    if (!(shape > 0.0)) throw ProtocolError("gamma: shape must be positive");
    if (shape < 1.0) {
        // Boost to shape+1 and scale back: X = Gamma(a+1) * U^(1/a).
        const double u = 1.0 - uniform();
        return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x;
        double v;
        do {
            x = normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = 1.0 - uniform();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

std::vector<double> RngStream::dirichlet(double beta, int k) {
    if (k <= 0) throw ProtocolError("dirichlet: k must be positive");
    if (!(beta > 0.0)) throw ProtocolError("dirichlet: beta must be positive");
    std::vector<double> out(static_cast<std::size_t>(k));
    double sum = 0.0;
    do {
        sum = 0.0;
        for (double& x : out) {
            x = gamma(beta);
            sum += x;
        }
        // All-zero draws are possible only through underflow at tiny beta;
        // redraw rather than return NaNs.
    } while (sum <= 0.0);
    for (double& x : out) x /= sum;
    return out;
}

std::vector<int> RngStream::sample_without_replacement(int n, int k) {
    if (k < 0 || k > n) {
        throw ProtocolError("sample_without_replacement: need 0 <= k <= n, got k=" +
                            std::to_string(k) + " n=" + std::to_string(n));
    }
    std::vector<int> pool(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i;
    // Partial Fisher-Yates: after k swaps the prefix is a uniform k-subset.
    for (int i = 0; i < k; ++i) {
        const int j = i + uniform_index(n - i);
        std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
    }
    pool.resize(static_cast<std::size_t>(k));
    std::sort(pool.begin(), pool.end());
    return pool;
}

}  // namespace fedsim
