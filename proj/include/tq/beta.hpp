#pragma once

#include <vector>

#include "tq/error.hpp"

namespace tq {

// Distribution of a single coordinate of a uniform point on the unit
// (dim-1)-sphere: density proportional to (1 - x^2)^((dim-3)/2) on [-1, 1],
// variance exactly 1/dim.
//
// dim >= 3 is backed by a fixed uniform grid of 2^17 cells with midpoint
// density values, normalized to total mass 1; integrals over arbitrary
// intervals close partial cells analytically against the piecewise-constant
// density. dim == 2 has an endpoint singularity, so it uses the arcsin
// substitution and is fully closed-form (no grid).
class BetaDistribution {
public:
    static constexpr int kGridCells = 1 << 17;

    explicit BetaDistribution(int dim);

    int dim() const { return dim_; }

    // Density at x in [-1, 1]. |x| > 1 throws DomainError. For dim == 2 the
    // density diverges at the endpoints; returns +infinity there.
    double pdf(double x) const;

    // P(X <= x). Exactly 0 at -1 and 1 at +1.
    double cdf(double x) const;

    // Inverse cdf for p in [0, 1].
    double quantile(double p) const;

    // Integrals of f, x f, x^2 f over [a, b] with -1 <= a <= b <= 1.
    double mass(double a, double b) const;
    double moment1(double a, double b) const;
    double moment2(double a, double b) const;

    // log of Gamma(d/2) / (sqrt(pi) Gamma((d-1)/2)).
    static double log_norm_const(int dim);

    // Largest absolute error of the grid-backed cdf/moment integrals.
    static constexpr double kIntegrationTolerance = 1e-10;

private:
    double cell_left(std::size_t i) const { return -1.0 + static_cast<double>(i) * width_; }
    std::size_t cell_of(double x) const;

    int dim_;
    double width_ = 0.0;
    std::vector<double> density_;   // normalized density at cell midpoints
    // prefix integrals of f, x f, x^2 f at cell edges, size kGridCells+1
    std::vector<double> cum_mass_, cum_m1_, cum_m2_;
};

// One-shot conveniences. beta_pdf is closed-form; beta_cdf builds the
// integration grid per call for dim >= 3, so repeated evaluation should go
// through a BetaDistribution instance instead.
double beta_pdf(int dim, double x);
double beta_cdf(int dim, double x);

} // namespace tq
