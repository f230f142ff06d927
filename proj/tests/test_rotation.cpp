#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include "tq/beta.hpp"
#include "tq/rng.hpp"
#include "tq/rotation.hpp"

using tq::Rotation;

namespace {

double frobenius_from_identity(const Rotation& rot) {
    const int d = rot.dim();
    const auto& m = rot.matrix();
    double err = 0.0;
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
            double dot = 0.0;
            for (int k = 0; k < d; ++k) dot += m[k * d + i] * m[k * d + j];
            double target = i == j ? 1.0 : 0.0;
            err += (dot - target) * (dot - target);
        }
    }
    return std::sqrt(err);
}

std::vector<double> random_vector(int d, uint64_t seed) {
    tq::PhiloxRng rng(seed, 99);
    std::vector<double> x(d);
    for (auto& v : x) v = rng.next_gaussian();
    return x;
}

double norm(const std::vector<double>& x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

} // namespace

TEST_CASE("orthogonality within 1e-10 in double") {
    CHECK(frobenius_from_identity(Rotation(45, 7)) < 1e-10);
    CHECK(frobenius_from_identity(Rotation(16, 1234567)) < 1e-10);
}

TEST_CASE("columns have unit norm") {
    Rotation rot(1024, 0);
    const auto& m = rot.matrix();
    for (int j = 0; j < 1024; j += 97) {
        double s = 0.0;
        for (int i = 0; i < 1024; ++i) s += m[i * 1024 + j] * m[i * 1024 + j];
        CHECK(std::sqrt(s) == doctest::Approx(1.0).epsilon(1e-5));
    }
}

TEST_CASE("same (dim, seed) reproduces identical bytes") {
    Rotation a(45, 7), b(45, 7);
    CHECK(std::memcmp(a.matrix().data(), b.matrix().data(),
                      a.matrix().size() * sizeof(double)) == 0);
    Rotation c(45, 8);
    CHECK(std::memcmp(a.matrix().data(), c.matrix().data(),
                      a.matrix().size() * sizeof(double)) != 0);
}

TEST_CASE("apply preserves zero, norms and inner products") {
    Rotation rot(64, 3);
    std::vector<double> zero(64, 0.0);
    auto rz = rot.apply(zero);
    CHECK(*std::max_element(rz.begin(), rz.end()) == 0.0);
    CHECK(*std::min_element(rz.begin(), rz.end()) == 0.0);

    auto x = random_vector(64, 5);
    auto y = random_vector(64, 6);
    auto rx = rot.apply(x);
    auto ry = rot.apply(y);
    CHECK(norm(rx) == doctest::Approx(norm(x)).epsilon(1e-12));
    double xy = 0.0, rxy = 0.0;
    for (int i = 0; i < 64; ++i) {
        xy += x[i] * y[i];
        rxy += rx[i] * ry[i];
    }
    CHECK(rxy == doctest::Approx(xy).epsilon(1e-12));
}

TEST_CASE("apply_inverse undoes apply") {
    Rotation rot(45, 11);
    auto x = random_vector(45, 1);
    auto back = rot.apply_inverse(rot.apply(x));
    for (int i = 0; i < 45; ++i) {
        CHECK(back[i] == doctest::Approx(x[i]).epsilon(1e-10));
    }

    std::vector<double> e1(45, 0.0);
    e1[0] = 1.0;
    auto e1_back = rot.apply_inverse(rot.apply(e1));
    CHECK(e1_back[0] == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("shape and dimension errors") {
    Rotation rot(16, 0);
    std::vector<double> wrong(15, 0.0);
    CHECK_THROWS_AS(rot.apply(wrong), tq::ShapeError);
    CHECK_THROWS_AS(rot.apply_inverse(wrong), tq::ShapeError);
    CHECK_THROWS_AS(Rotation(1, 0), tq::DimensionError);
    CHECK_THROWS_AS(Rotation(8193, 0), tq::DimensionError);
    CHECK_THROWS_AS(Rotation::from_matrix(4, 0, std::vector<double>(15)), tq::ShapeError);
}

TEST_CASE("rotated coordinate follows the sphere coordinate law") {
    // 200 independent seeds, fixed unit vector; KS against the analytic cdf
    // at the 1% critical value 1.63/sqrt(200).
    const int d = 45;
    auto x = random_vector(d, 42);
    double inv = 1.0 / norm(x);
    for (auto& v : x) v *= inv;

    std::vector<double> coords;
    for (uint64_t seed = 0; seed < 200; ++seed) {
        Rotation rot(d, seed);
        coords.push_back(rot.apply(x)[0]);
    }
    std::sort(coords.begin(), coords.end());
    tq::BetaDistribution law(d);
    double ks = 0.0;
    for (std::size_t i = 0; i < coords.size(); ++i) {
        double f = law.cdf(coords[i]);
        ks = std::max(ks, std::max(f - i / 200.0, (i + 1) / 200.0 - f));
    }
    CHECK(ks < 1.63 / std::sqrt(200.0));
}
