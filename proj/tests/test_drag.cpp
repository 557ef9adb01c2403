#include <cmath>
#include <vector>

#include <doctest.h>

#include "fedsim/drag.hpp"
#include "fedsim/errors.hpp"
#include "fedsim/objective.hpp"
#include "fedsim/rng.hpp"
#include "fedsim/vecmath.hpp"

using namespace fedsim;

namespace {

ParamVector random_vec(RngStream& rng, int d, double scale = 1.0) {
    ParamVector v(static_cast<std::size_t>(d));
    for (auto& x : v) x = scale * rng.normal();
    return v;
}

}  // namespace

TEST_SUITE("drag") {

TEST_CASE("divergence degree endpoints") {
    ParamVector r{0.3, -1.0, 2.0};
    CHECK(dod(r, r, 0.7) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(dod(scaled(r, -1.0), r, 1.0) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(dod({1, 0}, {1, 1}, 0.5) == doctest::Approx(0.14644660940672624).epsilon(1e-12));
    CHECK_THROWS_AS(dod({1, 0}, {1, 1}, -0.1), ConfigError);
    CHECK_THROWS_AS(dod({1, 0}, {1, 1}, 1.5), ConfigError);
    CHECK_THROWS_AS(dod({1, 0}, {1, 0, 0}, 0.5), DimensionError);
}

TEST_CASE("divergence degree stays in [0, 2c] and ignores scale") {
    RngStream rng(19);
    for (int trial = 0; trial < 500; ++trial) {
        ParamVector g = random_vec(rng, 6);
        ParamVector r = random_vec(rng, 6);
        double c = rng.uniform();
        double lam = dod(g, r, c);
        CHECK(lam >= 0.0);
        CHECK(lam <= 2.0 * c);

        double k = std::exp(2.0 * rng.normal());
        double m = std::exp(2.0 * rng.normal());
        CHECK(std::abs(dod(scaled(g, k), scaled(r, m), c) - lam) <= 1e-12);
    }
}

TEST_CASE("benign calibration examples") {
    ParamVector g{1, 0};
    ParamVector r{0, 2};
    ParamVector v = modify_drag(g, r, 0.5);
    CHECK(v[0] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(v[1] == doctest::Approx(0.5).epsilon(1e-14));

    // lambda = 0 must reproduce g bit-for-bit; the plain-mean reduction
    // depends on it.
    ParamVector g2{0.1234567890123456, -7.5};
    CHECK(modify_drag(g2, r, 0.0) == g2);

    // Degenerate norms leave the upload untouched.
    CHECK(modify_drag(g, {0, 0}, 0.5) == g);
    ParamVector zero{0, 0};
    CHECK(modify_drag(zero, r, 0.5) == zero);
}

TEST_CASE("benign calibration alignment gain") {
    // For lambda = c (1 - cos), the reference-direction component grows by
    // exactly c (1 - cos)^2 |g|. Worked example: g=(1,0), r=(0,2), c=0.5
    // has cos = 0, so the gain is 0.5.
    ParamVector g{1, 0};
    ParamVector r{0, 2};
    double c = 0.5;
    double lam = dod(g, r, c);
    ParamVector v = modify_drag(g, r, lam);
    ParamVector r_hat = scaled(r, 1.0 / norm2(r));
    CHECK(dot(sub(v, g), r_hat) == doctest::Approx(0.5).epsilon(1e-12));

    RngStream rng(29);
    for (int trial = 0; trial < 1000; ++trial) {
        ParamVector gg = random_vec(rng, 5);
        ParamVector rr = random_vec(rng, 5);
        double cc = rng.uniform();
        double cs = cosine(gg, rr);
        double ll = dod(gg, rr, cc);
        ParamVector vv = modify_drag(gg, rr, ll);
        ParamVector rh = scaled(rr, 1.0 / norm2(rr));
        double gain = dot(sub(vv, gg), rh);
        double expected = cc * (1.0 - cs) * (1.0 - cs) * norm2(gg);
        CHECK(std::abs(gain - expected) <= 1e-10);
        CHECK(gain >= -1e-12);
    }
}

TEST_CASE("resilient calibration worked values") {
    ParamVector g{2, 0};
    ParamVector r{0, 1};
    ParamVector v = modify_br(g, r, 0.5);
    CHECK(v[0] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(v[1] == doctest::Approx(0.5).epsilon(1e-14));

    // Aligned upload passes through as the reference itself.
    ParamVector r2{0.4, -1.0};
    ParamVector same = modify_br(r2, r2, 0.0);
    CHECK(same[0] == doctest::Approx(r2[0]).epsilon(1e-14));
    CHECK(same[1] == doctest::Approx(r2[1]).epsilon(1e-14));

    // Full reversal with c_t = 0.5: lambda = 1, so v = r exactly.
    double lam = dod(scaled(r2, -1.0), r2, 0.5);
    CHECK(lam == doctest::Approx(1.0).epsilon(1e-12));
    ParamVector rev = modify_br(scaled(r2, -1.0), r2, lam);
    CHECK(rev[0] == doctest::Approx(r2[0]).epsilon(1e-12));
    CHECK(rev[1] == doctest::Approx(r2[1]).epsilon(1e-12));

    // Degenerate norms.
    ParamVector tiny_g{0, 0};
    ParamVector fall = modify_br(tiny_g, r2, 0.3);
    CHECK(fall[0] == doctest::Approx(0.3 * r2[0]).epsilon(1e-14));
    CHECK(fall[1] == doctest::Approx(0.3 * r2[1]).epsilon(1e-14));
    CHECK(modify_br(g, {0, 0}, 0.3) == ParamVector{0, 0});
}

TEST_CASE("resilient calibration norm bounds") {
    RngStream rng(31);
    for (int trial = 0; trial < 1000; ++trial) {
        ParamVector g = random_vec(rng, 5);
        ParamVector r = random_vec(rng, 5);
        double c = rng.uniform();
        double lam = dod(g, r, c);
        ParamVector v = modify_br(g, r, lam);
        double vn = norm2(v);
        double rn = norm2(r);
        CHECK(vn <= (std::abs(1.0 - lam) + lam) * rn + 1e-12);
        if (lam <= 1.0) {
            CHECK(vn <= rn + 1e-12);
        }
    }
}

TEST_CASE("reference initialisation") {
    CHECK(reference_init({{3, -1}}) == ParamVector{3, -1});
    CHECK(reference_init({{2, 0}, {0, 2}}) == ParamVector{1, 1});
    CHECK_THROWS_AS(reference_init({}), ProtocolError);

    // Canonical-order summation: the engine always feeds uploads in
    // ascending worker order, so equal multisets in equal order agree
    // bitwise.
    std::vector<ParamVector> ups{{0.1, 0.2}, {0.3, 0.4}, {0.5, 0.6}};
    CHECK(reference_init(ups) == reference_init(ups));
}

TEST_CASE("reference recursion") {
    ParamVector r_prev{1, 2};
    ParamVector delta{5, -2};

    // Near alpha = 1 the recursion forgets history.
    ParamVector near = reference_step(r_prev, delta, 1.0 - 1e-9);
    CHECK(near[0] == doctest::Approx(delta[0]).epsilon(1e-8));
    CHECK(near[1] == doctest::Approx(delta[1]).epsilon(1e-8));

    // Fixed point.
    ParamVector fixed = reference_step(delta, delta, 0.4);
    CHECK(fixed[0] == doctest::Approx(delta[0]).epsilon(1e-14));
    CHECK(fixed[1] == doctest::Approx(delta[1]).epsilon(1e-14));

    CHECK_THROWS_AS(reference_step(r_prev, delta, 0.0), ConfigError);
    CHECK_THROWS_AS(reference_step(r_prev, delta, 1.0), ConfigError);

    // Convexity in 1-d: the output lies between the endpoints.
    RngStream rng(37);
    for (int trial = 0; trial < 200; ++trial) {
        double a = rng.normal(), b = rng.normal();
        double alpha = 0.001 + 0.998 * rng.uniform();
        double out = reference_step({a}, {b}, alpha)[0];
        CHECK(out >= std::min(a, b) - 1e-12);
        CHECK(out <= std::max(a, b) + 1e-12);
    }
}

TEST_CASE("closed form matches one unrolling and normalises weights") {
    ParamVector g0{2, -4};
    std::vector<ParamVector> deltas{{1, 1}};
    double alpha = 0.3;
    ParamVector r1 = closed_form_reference(g0, deltas, alpha, 1);
    CHECK(r1[0] == doctest::Approx((1 - alpha) * 2 + alpha * 1).epsilon(1e-14));
    CHECK(r1[1] == doctest::Approx((1 - alpha) * (-4) + alpha * 1).epsilon(1e-14));

    // All-ones inputs expose the weight total: it must be exactly 1.
    for (double a : {0.01, 0.25, 0.75}) {
        std::vector<ParamVector> ones(20, ParamVector{1.0});
        ParamVector rt = closed_form_reference({1.0}, ones, a, 20);
        CHECK(rt[0] == doctest::Approx(1.0).epsilon(1e-12));
    }

    CHECK_THROWS_AS(closed_form_reference(g0, deltas, alpha, 2), ProtocolError);
}

TEST_CASE("closed form equals the iterated recursion") {
    RngStream rng(41);
    for (double alpha : {0.01, 0.25, 0.75}) {
        ParamVector g0 = random_vec(rng, 10);
        std::vector<ParamVector> deltas;
        ParamVector r = g0;
        for (int t = 1; t <= 50; ++t) {
            deltas.push_back(random_vec(rng, 10));
            r = reference_step(r, deltas.back(), alpha);
            ParamVector closed = closed_form_reference(g0, deltas, alpha, t);
            for (int i = 0; i < 10; ++i) {
                CHECK(std::abs(r[i] - closed[i]) <= 1e-9);
            }
        }
    }
}

TEST_CASE("root-dataset reference on a quadratic") {
    // One full-batch step on a quadratic moves by -eta * A (theta - center).
    ObjectiveConfig oc;
    oc.kind = ObjectiveKind::Quadratic;
    oc.dimension = 3;
    oc.samples_per_worker = 4;
    oc.anchor_noise = 0.0;
    oc.optima_spread = 1.0;
    oc.seed = 71;
    QuadraticSuite suite = make_quadratic_suite(oc, 1);
    const ParamVector& a = suite.objective->curvatures()[0];
    const ParamVector& center = suite.centers[0];

    BrDragOptions opt;
    opt.stepsize = 0.05;
    opt.local_steps = 1;
    opt.batch_size = suite.worker_data[0].size();  // full batch (all rows equal)

    ParamVector theta{1.0, -2.0, 0.5};
    RngStream rng1 = make_stream(5, StreamUse::RootBatches, 0, 0);
    ParamVector r = root_reference(*suite.objective, suite.worker_data[0], theta, opt, rng1);
    for (int i = 0; i < 3; ++i) {
        CHECK(r[i] == doctest::Approx(-0.05 * a[i] * (theta[i] - center[i])).epsilon(1e-12));
    }

    // At the optimum nothing moves.
    RngStream rng2 = make_stream(5, StreamUse::RootBatches, 0, 0);
    ParamVector at_opt = root_reference(*suite.objective, suite.worker_data[0], center, opt, rng2);
    CHECK(norm2(at_opt) == doctest::Approx(0.0).epsilon(1e-15));

    // Identical stream state, identical displacement.
    RngStream rng3 = make_stream(5, StreamUse::RootBatches, 0, 0);
    ParamVector again = root_reference(*suite.objective, suite.worker_data[0], theta, opt, rng3);
    CHECK(again == r);
}

TEST_CASE("aggregation of calibrated updates") {
    ParamVector u{0.7, -0.3};
    ParamVector same = aggregate_modified({u, u, u});
    CHECK(same[0] == doctest::Approx(u[0]).epsilon(1e-15));
    CHECK(same[1] == doctest::Approx(u[1]).epsilon(1e-15));
    CHECK(aggregate_modified({{1, 0}, {0, 1}}) == ParamVector{0.5, 0.5});
    CHECK_THROWS_AS(aggregate_modified({}), ProtocolError);

    // With lambda = 0 everywhere the calibrated mean is the plain mean.
    RngStream rng(47);
    std::vector<ParamVector> ups;
    for (int i = 0; i < 6; ++i) ups.push_back(random_vec(rng, 4));
    ParamVector r = random_vec(rng, 4);
    std::vector<ParamVector> vs;
    for (const auto& g : ups) vs.push_back(modify_drag(g, r, 0.0));
    CHECK(aggregate_modified(vs) == mean_of(ups));
}

TEST_CASE("calibration diagnostics aggregate over the cohort") {
    // Three selected workers: two benign, one malicious; S = 3.
    ParamVector r{1, 0};
    std::vector<ParamVector> ups{{1, 0}, {0, 2}, {-3, 0}};
    std::vector<bool> mal{false, false, true};
    double c = 0.5;
    std::vector<double> lambda;
    for (const auto& g : ups) lambda.push_back(dod(g, r, c));

    DodReport rep = compute_dod_report(ups, mal, r, lambda);
    REQUIRE(rep.lambda.size() == 3u);
    CHECK(rep.has_benign);
    CHECK(rep.has_malicious);
    CHECK(rep.lambda_max == doctest::Approx(dod(ups[2], r, c)).epsilon(1e-14));
    CHECK(rep.lambda_mean ==
          doctest::Approx((lambda[0] + lambda[1] + lambda[2]) / 3.0).epsilon(1e-14));

    // Benign cosine sum: cos((1,0),r) = 1, cos((0,2),r) = 0 -> 1/3.
    CHECK(rep.benign_cosine == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    // Malicious cosine sum: cos((-3,0),r) = -1 -> -1/3.
    CHECK(rep.malicious_cosine == doctest::Approx(-1.0 / 3.0).epsilon(1e-14));
    // Benign norm-weighted alignment: sum cos * |r|/|g| over benign / 3
    //   = (1 * 1/1 + 0 * 1/2) / 3.
    CHECK(rep.norm_ratio == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    // Benign weight: sum (1 - lambda) |r|/|g| over benign / 3.
    double expect_b = ((1 - lambda[0]) * 1.0 + (1 - lambda[1]) * 0.5) / 3.0;
    CHECK(rep.benign_weight == doctest::Approx(expect_b).epsilon(1e-14));
}

}  // TEST_SUITE
