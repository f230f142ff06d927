#include <doctest.h>

#include <cmath>
#include <cstring>

#include "oracles.hpp"
#include "tq/beta.hpp"
#include "tq/codebook.hpp"
#include "tq/eval.hpp"

using tq::BetaCodebook;
using tq::solve_lloyd_max;

TEST_CASE("uniform source has closed-form optimal levels") {
    // d=3 makes the coordinate law uniform on [-1,1]; the optimum is the
    // uniform grid quantizer.
    auto cb1 = solve_lloyd_max(3, 1);
    REQUIRE(cb1.centroids.size() == 2);
    CHECK(cb1.centroids[0] == doctest::Approx(-0.5).epsilon(1e-9));
    CHECK(cb1.centroids[1] == doctest::Approx(0.5).epsilon(1e-9));

    auto cb2 = solve_lloyd_max(3, 2);
    const double expect2[4] = {-0.75, -0.25, 0.25, 0.75};
    for (int i = 0; i < 4; ++i) {
        CHECK(cb2.centroids[i] == doctest::Approx(expect2[i]).epsilon(1e-9));
    }
    // 3 * integral_0^1 (x - 1/2)^2 dx = 3/12
    CHECK(cb2.residual_distortion == doctest::Approx(0.0625).epsilon(1e-9));
    CHECK(cb1.residual_distortion == doctest::Approx(0.25).epsilon(1e-9));
    CHECK(tq::expected_distortion(cb1) == doctest::Approx(0.25).epsilon(1e-9));
}

TEST_CASE("solved codebooks match the dense-grid oracle") {
    for (int d : {3, 45}) {
        for (int b : {1, 2, 3}) {
            CAPTURE(d);
            CAPTURE(b);
            auto cb = solve_lloyd_max(d, b);
            auto ref = oracle::beta_lloyd(d, b);
            for (std::size_t i = 0; i < cb.centroids.size(); ++i) {
                CHECK(cb.centroids[i] == doctest::Approx(ref.centroids[i]).epsilon(1e-7));
            }
            CHECK(cb.residual_distortion ==
                  doctest::Approx(ref.distortion).epsilon(1e-6));
        }
    }
}

TEST_CASE("distortion tracks the published operating points") {
    // Achieved values sit a few percent under the C*4^-b ceiling.
    CHECK(solve_lloyd_max(45, 1).residual_distortion == doctest::Approx(0.36).epsilon(0.05));
    CHECK(solve_lloyd_max(45, 2).residual_distortion == doctest::Approx(0.117).epsilon(0.05));
    CHECK(solve_lloyd_max(45, 3).residual_distortion == doctest::Approx(0.033).epsilon(0.05));
}

TEST_CASE("centroids are symmetric and strictly increasing") {
    for (int d : {2, 16, 45, 1024}) {
        for (int b = 1; b <= 8; ++b) {
            CAPTURE(d);
            CAPTURE(b);
            auto cb = solve_lloyd_max(d, b);
            const int k = cb.levels();
            for (int i = 0; i < k; ++i) {
                CHECK(cb.centroids[i] == doctest::Approx(-cb.centroids[k - 1 - i]).epsilon(1e-9));
                CHECK(cb.centroids[i] > -1.0);
                CHECK(cb.centroids[i] < 1.0);
                if (i) CHECK(cb.centroids[i] > cb.centroids[i - 1]);
            }
        }
    }
}

TEST_CASE("converged codebook is a fixed point of one more sweep") {
    tq::LloydOptions opts;
    for (int b : {1, 3}) {
        CAPTURE(b);
        auto cb = solve_lloyd_max(45, b, opts);
        tq::BetaDistribution dist(45);
        const int k = cb.levels();
        double lo = -1.0;
        for (int i = 0; i < k; ++i) {
            double hi = i + 1 < k ? 0.5 * (cb.centroids[i] + cb.centroids[i + 1]) : 1.0;
            double mean = dist.moment1(lo, hi) / dist.mass(lo, hi);
            CHECK(std::abs(mean - cb.centroids[i]) <= 10 * opts.tolerance);
            lo = hi;
        }
    }
}

TEST_CASE("objective is nonincreasing across sweeps") {
    std::vector<double> trace;
    tq::LloydOptions opts;
    opts.objective_trace = &trace;
    solve_lloyd_max(45, 4, opts);
    REQUIRE(trace.size() > 2);
    for (std::size_t i = 1; i < trace.size(); ++i) {
        CHECK(trace[i] <= trace[i - 1] + 1e-15);
    }
}

TEST_CASE("distortion decreases strictly in bits") {
    for (int d : {3, 16, 45, 1024}) {
        CAPTURE(d);
        double prev = 1e9;
        for (int b = 1; b <= 8; ++b) {
            double v = solve_lloyd_max(d, b).residual_distortion;
            CHECK(v < prev);
            CHECK(v > 0.0);
            prev = v;
        }
    }
}

TEST_CASE("distortion sits between the analytic floor and ceiling") {
    for (int d : {16, 45, 1024}) {
        for (int b = 1; b <= 4; ++b) {
            CAPTURE(d);
            CAPTURE(b);
            double v = solve_lloyd_max(d, b).residual_distortion;
            CHECK(v >= tq::lower_bound_mse(b));
            CHECK(v <= tq::bound_mse(b));
        }
    }
}

TEST_CASE("high dimension matches the Gaussian quantizer") {
    // At d=1024 the coordinate law is numerically Gaussian with variance
    // 1/d, so the d-scaled distortion matches the unit-variance table.
    for (int b = 1; b <= 4; ++b) {
        CAPTURE(b);
        double v = solve_lloyd_max(1024, b).residual_distortion;
        double ref = oracle::gaussian_lloyd(b).distortion;
        CHECK(v == doctest::Approx(ref).epsilon(0.01));
    }
}

TEST_CASE("quantize_scalar picks nearest with lower-index ties") {
    auto cb1 = solve_lloyd_max(3, 1);
    CHECK(tq::quantize_scalar(cb1, 0.9) == 1);
    CHECK(tq::quantize_scalar(cb1, -0.01) == 0);
    CHECK(tq::quantize_scalar(cb1, 0.0) == 0); // exact midpoint -> lower

    auto cb2 = solve_lloyd_max(3, 2);
    CHECK(tq::quantize_scalar(cb2, 0.0) == 1);  // tie between -0.25 and 0.25
    CHECK(tq::quantize_scalar(cb2, -5.0) == 0); // clamps to extreme
    CHECK(tq::quantize_scalar(cb2, 5.0) == 3);
    CHECK(tq::quantize_scalar(cb2, 0.26) == 2);
}

TEST_CASE("solver is deterministic") {
    auto a = solve_lloyd_max(45, 3);
    auto b = solve_lloyd_max(45, 3);
    REQUIRE(a.centroids.size() == b.centroids.size());
    CHECK(std::memcmp(a.centroids.data(), b.centroids.data(),
                      a.centroids.size() * sizeof(double)) == 0);
}

TEST_CASE("iteration cap raises a convergence error carrying the iterate") {
    tq::LloydOptions opts;
    opts.max_iterations = 1;
    try {
        solve_lloyd_max(16, 4, opts);
        FAIL("expected ConvergenceError");
    } catch (const tq::ConvergenceError& e) {
        CHECK(e.last_centroids.size() == 16);
    }
}

TEST_CASE("argument validation") {
    CHECK_THROWS_AS(solve_lloyd_max(1, 3), tq::DimensionError);
    CHECK_THROWS_AS(solve_lloyd_max(45, 0), tq::RangeError);
    CHECK_THROWS_AS(solve_lloyd_max(45, 9), tq::RangeError);
}

TEST_CASE("codebook block round trip") {
    auto cb = solve_lloyd_max(45, 3);
    auto bytes = tq::serialize_codebook(cb);
    CHECK(bytes.size() == 14 + 4 * 8);
    auto back = tq::parse_codebook(bytes);
    CHECK(back.dim == 45);
    CHECK(back.bits == 3);
    for (int i = 0; i < 8; ++i) {
        CHECK(back.centroids[i] ==
              doctest::Approx(cb.centroids[i]).epsilon(1e-7)); // f32 storage
    }

    auto bad = bytes;
    bad[0] = 'X';
    CHECK_THROWS_AS(tq::parse_codebook(bad), tq::FormatError);
    bytes.resize(bytes.size() - 3);
    CHECK_THROWS_AS(tq::parse_codebook(bytes), tq::FormatError);
}
