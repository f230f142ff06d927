#include "tq/beta.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tq {

namespace {

constexpr double kPi = 3.14159265358979323846;

void check_domain(double x) {
    if (!(x >= -1.0 && x <= 1.0)) {
        throw DomainError("beta coordinate out of [-1, 1]: " + std::to_string(x));
    }
}

} // namespace

double BetaDistribution::log_norm_const(int dim) {
    return std::lgamma(0.5 * dim) - 0.5 * std::log(kPi) - std::lgamma(0.5 * (dim - 1));
}

BetaDistribution::BetaDistribution(int dim) : dim_(dim) {
    if (dim < 2) {
        throw DimensionError("coordinate distribution requires dim >= 2, got " +
                             std::to_string(dim));
    }
    if (dim == 2) return; // closed form, no grid

    width_ = 2.0 / kGridCells;
    density_.resize(kGridCells);
    cum_mass_.resize(kGridCells + 1);
    cum_m1_.resize(kGridCells + 1);
    cum_m2_.resize(kGridCells + 1);

    const double log_norm = log_norm_const(dim);
    const double expo = 0.5 * (dim - 3);
    double total = 0.0;
    for (int i = 0; i < kGridCells; ++i) {
        double x = -1.0 + (i + 0.5) * width_;
        double v = std::exp(log_norm + expo * std::log1p(-x * x));
        density_[i] = v;
        total += v * width_;
    }
    // Normalize the discrete measure so cdf(1) is exactly 1; the midpoint
    // rule leaves a residue of order 1e-9 at worst (dim == 4 endpoints).
    const double scale = 1.0 / total;
    cum_mass_[0] = cum_m1_[0] = cum_m2_[0] = 0.0;
    double acc = 0.0, acc1 = 0.0, acc2 = 0.0;
    for (int i = 0; i < kGridCells; ++i) {
        density_[i] *= scale;
        double l = cell_left(i), r = cell_left(i + 1);
        acc += density_[i] * width_;
        acc1 += density_[i] * 0.5 * (r * r - l * l);
        acc2 += density_[i] * (r * r * r - l * l * l) / 3.0;
        cum_mass_[i + 1] = acc;
        cum_m1_[i + 1] = acc1;
        cum_m2_[i + 1] = acc2;
    }
    cum_mass_[kGridCells] = 1.0;
}

std::size_t BetaDistribution::cell_of(double x) const {
    double t = (x + 1.0) / width_;
    auto i = static_cast<long long>(t);
    if (i < 0) i = 0;
    if (i >= kGridCells) i = kGridCells - 1;
    return static_cast<std::size_t>(i);
}

double BetaDistribution::pdf(double x) const {
    check_domain(x);
    if (dim_ == 2) {
        double s = 1.0 - x * x;
        if (s <= 0.0) return std::numeric_limits<double>::infinity();
        return 1.0 / (kPi * std::sqrt(s));
    }
    const double expo = 0.5 * (dim_ - 3);
    if (x == -1.0 || x == 1.0) return expo > 0.0 ? 0.0 : std::exp(log_norm_const(dim_));
    return std::exp(log_norm_const(dim_) + expo * std::log1p(-x * x));
}

double BetaDistribution::cdf(double x) const {
    check_domain(x);
    if (dim_ == 2) return 0.5 + std::asin(x) / kPi;
    if (x <= -1.0) return 0.0;
    if (x >= 1.0) return 1.0;
    std::size_t i = cell_of(x);
    return cum_mass_[i] + density_[i] * (x - cell_left(i));
}

double BetaDistribution::quantile(double p) const {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw DomainError("quantile probability out of [0, 1]");
    }
    if (dim_ == 2) return std::sin(kPi * (p - 0.5));
    if (p <= 0.0) return -1.0;
    if (p >= 1.0) return 1.0;
    auto it = std::upper_bound(cum_mass_.begin(), cum_mass_.end(), p);
    std::size_t i = static_cast<std::size_t>(it - cum_mass_.begin());
    if (i > 0) --i;
    while (i < density_.size() && density_[i] <= 0.0) ++i; // skip underflowed tail cells
    if (i >= density_.size()) return 1.0;
    double x = cell_left(i) + (p - cum_mass_[i]) / density_[i];
    return std::clamp(x, -1.0, 1.0);
}

double BetaDistribution::mass(double a, double b) const {
    check_domain(a);
    check_domain(b);
    if (b <= a) return 0.0;
    if (dim_ == 2) return (std::asin(b) - std::asin(a)) / kPi;
    std::size_t ia = cell_of(a), ib = cell_of(b);
    if (ia == ib) return density_[ia] * (b - a);
    double head = density_[ia] * (cell_left(ia + 1) - a);
    double tail = density_[ib] * (b - cell_left(ib));
    return head + (cum_mass_[ib] - cum_mass_[ia + 1]) + tail;
}

double BetaDistribution::moment1(double a, double b) const {
    check_domain(a);
    check_domain(b);
    if (b <= a) return 0.0;
    if (dim_ == 2) {
        return (std::sqrt(1.0 - a * a) - std::sqrt(1.0 - b * b)) / kPi;
    }
    // Partial cells close analytically against the constant cell density:
    // integral of x f_i over [l, r] is f_i (r^2 - l^2) / 2.
    auto seg = [&](std::size_t i, double l, double r) {
        return density_[i] * 0.5 * (r * r - l * l);
    };
    std::size_t ia = cell_of(a), ib = cell_of(b);
    if (ia == ib) return seg(ia, a, b);
    return seg(ia, a, cell_left(ia + 1)) + (cum_m1_[ib] - cum_m1_[ia + 1]) +
           seg(ib, cell_left(ib), b);
}

double BetaDistribution::moment2(double a, double b) const {
    check_domain(a);
    check_domain(b);
    if (b <= a) return 0.0;
    if (dim_ == 2) {
        auto prim = [](double x) { return std::asin(x) - x * std::sqrt(1.0 - x * x); };
        return (prim(b) - prim(a)) / (2.0 * kPi);
    }
    auto seg = [&](std::size_t i, double l, double r) {
        return density_[i] * (r * r * r - l * l * l) / 3.0;
    };
    std::size_t ia = cell_of(a), ib = cell_of(b);
    if (ia == ib) return seg(ia, a, b);
    return seg(ia, a, cell_left(ia + 1)) + (cum_m2_[ib] - cum_m2_[ia + 1]) +
           seg(ib, cell_left(ib), b);
}

double beta_pdf(int dim, double x) {
    if (dim < 2) {
        throw DimensionError("beta_pdf requires dim >= 2, got " + std::to_string(dim));
    }
    check_domain(x);
    if (dim == 2) {
        double s = 1.0 - x * x;
        if (s <= 0.0) return std::numeric_limits<double>::infinity();
        return 1.0 / (kPi * std::sqrt(s));
    }
    const double expo = 0.5 * (dim - 3);
    if (x == -1.0 || x == 1.0) {
        return expo > 0.0 ? 0.0 : std::exp(BetaDistribution::log_norm_const(dim));
    }
    return std::exp(BetaDistribution::log_norm_const(dim) + expo * std::log1p(-x * x));
}

double beta_cdf(int dim, double x) { return BetaDistribution(dim).cdf(x); }

} // namespace tq
