#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tq/error.hpp"

namespace tq {

// Panter-Dite style constant of the distortion ceiling C * 4^-b.
inline constexpr double kDistortionBoundConstant = 2.7206990463513265; // pi*sqrt(3)/2

// One measurement of the empirical unit-sphere reconstruction MSE against
// the analytic bounds and the codebook's own distortion integral.
struct DistortionReport {
    uint32_t dim = 0;
    int bits = 0;
    uint64_t trials = 0;
    double mean_mse = 0.0;
    double std_err = 0.0;
    double upper_bound = 0.0;       // C * 4^-b
    double lower_bound = 0.0;       // 4^-b
    double oracle_distortion = 0.0; // expected_distortion of the codebook
    double ks_statistic = 0.0;      // first rotated coordinate vs the coordinate law
    uint64_t seed = 0;
};

double bound_mse(int bits);
double lower_bound_mse(int bits);

// Quantizes `trials` uniform unit vectors (normalized Gaussian draws, one
// counter-derived stream per trial) through the full rotate/quantize/pack
// pipeline and reports the measured distortion. Deterministic in
// (d, b, trials, seed) regardless of the worker count.
DistortionReport measure_dmse(int dim, int bits, std::size_t trials, uint64_t seed);

struct ProdReport {
    double mean_sq_err = 0.0;     // E[(<y, x~> - <y, x>)^2]
    double mean_signed_err = 0.0; // bias estimate
};

// Inner-product distortion against one fixed random direction y of norm
// y_scale.
ProdReport measure_dprod(int dim, int bits, std::size_t trials, uint64_t seed,
                         double y_scale = 1.0);

struct KsReport {
    double statistic = 0.0;
    double sample_variance = 0.0;
    std::size_t samples = 0;
};

// Draws fresh seeded rotations, applies each to a fixed unit vector, and
// collects leading coordinates until `samples` values are gathered; returns
// the KS distance to the analytic coordinate law. For dim > 128 each
// rotation contributes up to 32 leading coordinates (pairwise correlation
// is O(1/dim)), which keeps the QR cost bounded.
KsReport ks_coordinate_test(int dim, std::size_t samples, uint64_t seed);

enum class ReportFormat { kJson, kCsv };

ReportFormat report_format_from_name(const std::string& name);

std::string emit_report(std::span<const DistortionReport> reports, ReportFormat format);
std::vector<DistortionReport> parse_reports(const std::string& text, ReportFormat format);

} // namespace tq
