#include "tq/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <nlohmann/json.hpp>
#include <sstream>

#include "tq/beta.hpp"
#include "tq/codebook.hpp"
#include "tq/parallel.hpp"
#include "tq/quantizer.hpp"
#include "tq/rng.hpp"
#include "tq/rotation.hpp"

namespace tq {

namespace {

// Stream ids carved out of the per-seed Philox space so trial streams,
// probe directions, and derived rotation seeds never collide. Stream 0 is
// taken by the Rotation constructor, so trial i uses stream i + 1.
constexpr uint64_t kStreamTrialBase = 1;
constexpr uint64_t kStreamFixedVector = 0x8000000000000000ull;
constexpr uint64_t kStreamRotationSeeds = 0x8000000000000001ull;

void fill_unit_vector(PhiloxRng& rng, double* x, std::size_t d) {
    double sq = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
        x[j] = rng.next_gaussian();
        sq += x[j] * x[j];
    }
    double inv = 1.0 / std::sqrt(sq);
    for (std::size_t j = 0; j < d; ++j) x[j] *= inv;
}

double ks_against_law(std::vector<double>& samples, const BetaDistribution& law) {
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double stat = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        double f = law.cdf(std::clamp(samples[i], -1.0, 1.0));
        double lo = f - static_cast<double>(i) / n;
        double hi = static_cast<double>(i + 1) / n - f;
        stat = std::max(stat, std::max(lo, hi));
    }
    return stat;
}

const char* const kReportFields[] = {"dim",         "bits",        "trials",
                                     "mean_mse",    "std_err",     "upper_bound",
                                     "lower_bound", "oracle_distortion",
                                     "ks_statistic", "seed"};

} // namespace

double bound_mse(int bits) {
    if (bits < 1) throw RangeError("bound_mse: bits must be >= 1");
    return kDistortionBoundConstant * std::pow(4.0, -bits);
}

double lower_bound_mse(int bits) {
    if (bits < 1) throw RangeError("lower_bound_mse: bits must be >= 1");
    return std::pow(4.0, -bits);
}

namespace {

// One block of the measurement pipeline: rotate `n` unit rows, quantize
// each coordinate, run the indices through the bit packer and back, restore
// through the inverse rotation. Everything stays in double; the rotation is
// applied to the whole block at once so the matrix is read once per block
// rather than once per trial.
void roundtrip_block(const Rotation& rot, const BetaCodebook& cb, const double* rows,
                     std::size_t n, double* restored, double* first_coords) {
    const std::size_t d = static_cast<std::size_t>(rot.dim());
    std::vector<double> rotated(n * d);
    rot.apply_rows(rows, rotated.data(), n);
    std::vector<uint8_t> idx(d);
    for (std::size_t i = 0; i < n; ++i) {
        const double* y = rotated.data() + i * d;
        if (first_coords) first_coords[i] = y[0];
        for (std::size_t j = 0; j < d; ++j) {
            idx[j] = static_cast<uint8_t>(quantize_scalar(cb, y[j]));
        }
        auto unpacked = unpack_indices(pack_indices(idx, cb.bits), d, cb.bits);
        double* z = rotated.data() + i * d; // reuse as centroid buffer
        for (std::size_t j = 0; j < d; ++j) z[j] = cb.centroids[unpacked[j]];
    }
    rot.apply_inverse_rows(rotated.data(), restored, n);
}

constexpr std::size_t kTrialChunk = 256;

} // namespace

DistortionReport measure_dmse(int dim, int bits, std::size_t trials, uint64_t seed) {
    if (trials < 100) throw RangeError("measure_dmse: trials must be >= 100");

    BetaCodebook cb = solve_lloyd_max(dim, bits);
    Rotation rot(dim, seed);
    const std::size_t d = static_cast<std::size_t>(dim);

    std::vector<double> sq_err(trials);
    std::vector<double> first_coord(trials);
    parallel_chunks(trials, kTrialChunk, [&](std::size_t lo, std::size_t hi) {
        const std::size_t n = hi - lo;
        std::vector<double> x(n * d), back(n * d);
        for (std::size_t i = lo; i < hi; ++i) {
            PhiloxRng rng(seed, kStreamTrialBase + i);
            fill_unit_vector(rng, x.data() + (i - lo) * d, d);
        }
        roundtrip_block(rot, cb, x.data(), n, back.data(), first_coord.data() + lo);
        for (std::size_t i = lo; i < hi; ++i) {
            double e = 0.0;
            const double* xi = x.data() + (i - lo) * d;
            const double* bi = back.data() + (i - lo) * d;
            for (std::size_t j = 0; j < d; ++j) {
                double diff = xi[j] - bi[j];
                e += diff * diff;
            }
            sq_err[i] = e;
        }
    });

    double mean = 0.0;
    for (double e : sq_err) mean += e;
    mean /= static_cast<double>(trials);
    double var = 0.0;
    for (double e : sq_err) var += (e - mean) * (e - mean);
    var /= static_cast<double>(trials - 1);

    DistortionReport rep;
    rep.dim = static_cast<uint32_t>(dim);
    rep.bits = bits;
    rep.trials = trials;
    rep.mean_mse = mean;
    rep.std_err = std::sqrt(var / static_cast<double>(trials));
    rep.upper_bound = bound_mse(bits);
    rep.lower_bound = lower_bound_mse(bits);
    rep.oracle_distortion = cb.residual_distortion;
    BetaDistribution law(dim);
    rep.ks_statistic = ks_against_law(first_coord, law);
    rep.seed = seed;
    return rep;
}

ProdReport measure_dprod(int dim, int bits, std::size_t trials, uint64_t seed,
                         double y_scale) {
    if (trials < 100) throw RangeError("measure_dprod: trials must be >= 100");

    BetaCodebook cb = solve_lloyd_max(dim, bits);
    Rotation rot(dim, seed);
    const std::size_t d = static_cast<std::size_t>(dim);

    std::vector<double> y(d);
    {
        PhiloxRng rng(seed, kStreamFixedVector);
        fill_unit_vector(rng, y.data(), d);
        for (double& v : y) v *= y_scale;
    }

    std::vector<double> err(trials);
    parallel_chunks(trials, kTrialChunk, [&](std::size_t lo, std::size_t hi) {
        const std::size_t n = hi - lo;
        std::vector<double> x(n * d), back(n * d);
        for (std::size_t i = lo; i < hi; ++i) {
            PhiloxRng rng(seed, kStreamTrialBase + i);
            fill_unit_vector(rng, x.data() + (i - lo) * d, d);
        }
        roundtrip_block(rot, cb, x.data(), n, back.data(), nullptr);
        for (std::size_t i = lo; i < hi; ++i) {
            const double* xi = x.data() + (i - lo) * d;
            const double* bi = back.data() + (i - lo) * d;
            double e = 0.0;
            for (std::size_t j = 0; j < d; ++j) e += y[j] * (bi[j] - xi[j]);
            err[i] = e;
        }
    });

    ProdReport rep;
    for (double e : err) {
        rep.mean_sq_err += e * e;
        rep.mean_signed_err += e;
    }
    rep.mean_sq_err /= static_cast<double>(trials);
    rep.mean_signed_err /= static_cast<double>(trials);
    return rep;
}

KsReport ks_coordinate_test(int dim, std::size_t samples, uint64_t seed) {
    if (samples < 1000) throw RangeError("ks_coordinate_test: samples must be >= 1000");

    const std::size_t d = static_cast<std::size_t>(dim);
    const std::size_t per_rotation =
        dim <= 128 ? 1 : std::min<std::size_t>(32, d / 32);
    const std::size_t rotations = (samples + per_rotation - 1) / per_rotation;

    std::vector<double> x(d);
    {
        PhiloxRng rng(seed, kStreamFixedVector);
        fill_unit_vector(rng, x.data(), d);
    }
    // Fresh rotation seeds derived by counter from one dedicated stream.
    std::vector<uint64_t> rot_seeds(rotations);
    {
        PhiloxRng rng(seed, kStreamRotationSeeds);
        for (auto& s : rot_seeds) s = rng.next_u64();
    }

    std::vector<double> coords(rotations * per_rotation);
    parallel_chunks(rotations, 1, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t r = lo; r < hi; ++r) {
            Rotation rot(dim, rot_seeds[r]);
            std::vector<double> y = rot.apply(x);
            for (std::size_t j = 0; j < per_rotation; ++j) {
                coords[r * per_rotation + j] = y[j];
            }
        }
    });
    coords.resize(samples);

    KsReport rep;
    rep.samples = samples;
    double mean = 0.0;
    for (double v : coords) mean += v;
    mean /= static_cast<double>(samples);
    double var = 0.0;
    for (double v : coords) var += (v - mean) * (v - mean);
    rep.sample_variance = var / static_cast<double>(samples - 1);
    BetaDistribution law(dim);
    rep.statistic = ks_against_law(coords, law);
    return rep;
}

ReportFormat report_format_from_name(const std::string& name) {
    if (name == "json") return ReportFormat::kJson;
    if (name == "csv") return ReportFormat::kCsv;
    throw UsageError("unknown report format '" + name + "' (expected json or csv)");
}

std::string emit_report(std::span<const DistortionReport> reports, ReportFormat format) {
    if (format == ReportFormat::kJson) {
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        for (const auto& r : reports) {
            nlohmann::ordered_json obj;
            obj["dim"] = r.dim;
            obj["bits"] = r.bits;
            obj["trials"] = r.trials;
            obj["mean_mse"] = r.mean_mse;
            obj["std_err"] = r.std_err;
            obj["upper_bound"] = r.upper_bound;
            obj["lower_bound"] = r.lower_bound;
            obj["oracle_distortion"] = r.oracle_distortion;
            obj["ks_statistic"] = r.ks_statistic;
            obj["seed"] = r.seed;
            arr.push_back(std::move(obj));
        }
        return arr.dump(2) + "\n";
    }

    std::string out;
    for (std::size_t i = 0; i < std::size(kReportFields); ++i) {
        if (i) out += ',';
        out += kReportFields[i];
    }
    out += '\n';
    char buf[512];
    for (const auto& r : reports) {
        std::snprintf(buf, sizeof(buf),
                      "%u,%d,%llu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%llu\n", r.dim,
                      r.bits, static_cast<unsigned long long>(r.trials), r.mean_mse,
                      r.std_err, r.upper_bound, r.lower_bound, r.oracle_distortion,
                      r.ks_statistic, static_cast<unsigned long long>(r.seed));
        out += buf;
    }
    return out;
}

std::vector<DistortionReport> parse_reports(const std::string& text, ReportFormat format) {
    std::vector<DistortionReport> out;
    if (format == ReportFormat::kJson) {
        nlohmann::json arr = nlohmann::json::parse(text);
        if (!arr.is_array()) throw FormatError("report: expected a JSON array");
        for (const auto& obj : arr) {
            DistortionReport r;
            r.dim = obj.at("dim").get<uint32_t>();
            r.bits = obj.at("bits").get<int>();
            r.trials = obj.at("trials").get<uint64_t>();
            r.mean_mse = obj.at("mean_mse").get<double>();
            r.std_err = obj.at("std_err").get<double>();
            r.upper_bound = obj.at("upper_bound").get<double>();
            r.lower_bound = obj.at("lower_bound").get<double>();
            r.oracle_distortion = obj.at("oracle_distortion").get<double>();
            r.ks_statistic = obj.at("ks_statistic").get<double>();
            r.seed = obj.at("seed").get<uint64_t>();
            out.push_back(r);
        }
        return out;
    }

    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) return out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ls(line);
        DistortionReport r;
        unsigned long long trials = 0, seed = 0;
        if (!(ls >> r.dim >> r.bits >> trials >> r.mean_mse >> r.std_err >>
              r.upper_bound >> r.lower_bound >> r.oracle_distortion >> r.ks_statistic >>
              seed)) {
            throw FormatError("report: malformed csv row");
        }
        r.trials = trials;
        r.seed = seed;
        out.push_back(r);
    }
    return out;
}

} // namespace tq
