#include <cmath>
#include <vector>

#include <doctest.h>

#include "fedsim/errors.hpp"
#include "fedsim/rng.hpp"
#include "fedsim/vecmath.hpp"

using namespace fedsim;

TEST_SUITE("vecmath") {

TEST_CASE("dot products") {
    CHECK(dot({1, 0}, {0, 1}) == 0.0);
    CHECK(dot({1, 2}, {3, 4}) == 11.0);
    CHECK(dot({3, 4}, {3, 4}) == 25.0);
    CHECK_THROWS_AS(dot({1, 2}, {1, 2, 3}), DimensionError);
}

TEST_CASE("norms") {
    CHECK(norm2({0, 0, 0}) == 0.0);
    CHECK(norm2({3, 4}) == 5.0);

    // Positive homogeneity: |k a| = k |a|.
    ParamVector a{0.3, -1.7, 2.2, 0.0};
    for (double k : {0.5, 2.0, 17.25}) {
        CHECK(norm2(scaled(a, k)) == doctest::Approx(k * norm2(a)).epsilon(1e-14));
    }
}

TEST_CASE("cosine basics") {
    ParamVector a{0.4, -1.1, 2.0};
    CHECK(cosine(a, a) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(cosine(a, scaled(a, -1.0)) == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(cosine({1, 0}, {1, 1}) == doctest::Approx(0.7071067811865).epsilon(1e-12));
    CHECK_THROWS_AS(cosine({1, 0}, {1, 0, 0}), DimensionError);
}

TEST_CASE("cosine zero-norm guard and clamping") {
    CHECK(cosine({0, 0}, {1, 1}) == 0.0);
    CHECK(cosine({1, 1}, {0, 0}) == 0.0);
    CHECK(cosine({1e-13, 0}, {1, 0}) == 0.0);

    // |cos| <= 1 for all finite inputs, including near-parallel pairs that
    // would overshoot 1 without the clamp.
    RngStream rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        ParamVector x(8), y(8);
        for (int i = 0; i < 8; ++i) x[i] = rng.normal();
        double jitter = 1e-9 * rng.normal();
        for (int i = 0; i < 8; ++i) y[i] = x[i] * (1.0 + jitter);
        double cs = cosine(x, y);
        CHECK(cs <= 1.0);
        CHECK(cs >= -1.0);
    }
}

TEST_CASE("cosine scale invariance") {
    RngStream rng(23);
    for (int trial = 0; trial < 300; ++trial) {
        ParamVector x(6), y(6);
        for (int i = 0; i < 6; ++i) {
            x[i] = rng.normal();
            y[i] = rng.normal();
        }
        double k = std::exp(3.0 * rng.normal());
        double m = std::exp(3.0 * rng.normal());
        CHECK(std::abs(cosine(scaled(x, k), scaled(y, m)) - cosine(x, y)) <= 1e-12);
    }
}

TEST_CASE("linear_combine") {
    ParamVector a{1.5, -2.5};
    CHECK(linear_combine({1.0}, {a}) == a);
    CHECK(linear_combine({0.5, 0.5}, {{2, 0}, {0, 2}}) == ParamVector{1, 1});
    CHECK(linear_combine({1.0, -1.0}, {a, a}) == ParamVector{0, 0});
    CHECK_THROWS_AS(linear_combine({1.0, 2.0}, {a}), DimensionError);
    CHECK_THROWS_AS(linear_combine({1.0, 1.0}, {{1, 2}, {1, 2, 3}}), DimensionError);
}

TEST_CASE("linear_combine is order-deterministic") {
    RngStream rng(5);
    std::vector<double> coeffs(7);
    std::vector<ParamVector> vecs(7, ParamVector(5));
    for (int i = 0; i < 7; ++i) {
        coeffs[i] = rng.normal();
        for (int j = 0; j < 5; ++j) vecs[i][j] = rng.normal();
    }
    ParamVector first = linear_combine(coeffs, vecs);
    ParamVector second = linear_combine(coeffs, vecs);
    CHECK(first == second);  // bit-identical, not approximately equal
}

TEST_CASE("mean_of") {
    CHECK(mean_of({{2, 0}, {0, 2}}) == ParamVector{1, 1});
    CHECK(mean_of({{3, -1}}) == ParamVector{3, -1});
    CHECK_THROWS_AS(mean_of({}), ProtocolError);
}

TEST_CASE("elementwise helpers") {
    CHECK(add({1, 2}, {3, 4}) == ParamVector{4, 6});
    CHECK(sub({1, 2}, {3, 4}) == ParamVector{-2, -2});
    CHECK(scaled({1, -2}, -3.0) == ParamVector{-3, 6});

    ParamVector y{1, 1};
    axpy(2.0, {3, -1}, y);
    CHECK(y == ParamVector{7, -1});

    CHECK(all_finite({1, 2, 3}));
    CHECK_FALSE(all_finite({1, std::nan(""), 3}));
    CHECK_FALSE(all_finite({1, INFINITY}));
}

}  // TEST_SUITE
