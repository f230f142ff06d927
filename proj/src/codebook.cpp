#include "tq/codebook.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace tq {

namespace {

void check_bits(int bits) {
    if (bits < 1 || bits > 8) {
        throw RangeError("bits must be in [1, 8], got " + std::to_string(bits));
    }
}

// Distortion of one quantizer cell [a, b] around centroid c.
double cell_distortion(const BetaDistribution& dist, double a, double b, double c) {
    return dist.moment2(a, b) - 2.0 * c * dist.moment1(a, b) + c * c * dist.mass(a, b);
}

double total_distortion(const BetaDistribution& dist, const std::vector<double>& c) {
    const std::size_t k = c.size();
    double sum = 0.0;
    double lo = -1.0;
    for (std::size_t i = 0; i < k; ++i) {
        double hi = (i + 1 < k) ? 0.5 * (c[i] + c[i + 1]) : 1.0;
        sum += cell_distortion(dist, lo, hi, c[i]);
        lo = hi;
    }
    return static_cast<double>(dist.dim()) * sum;
}

} // namespace

BetaCodebook solve_lloyd_max(int dim, int bits, const LloydOptions& opts) {
    check_bits(bits);
    BetaDistribution dist(dim); // validates dim >= 2

    const int k = 1 << bits;
    std::vector<double> c(k);
    for (int i = 0; i < k; ++i) {
        c[i] = dist.quantile((2.0 * i + 1.0) / (2.0 * k));
    }

    std::vector<double> next(k);
    double move = 0.0;
    bool converged = false;
    for (int iter = 0; iter < opts.max_iterations; ++iter) {
        double lo = -1.0;
        for (int i = 0; i < k; ++i) {
            double hi = (i + 1 < k) ? 0.5 * (c[i] + c[i + 1]) : 1.0;
            double m = dist.mass(lo, hi);
            next[i] = m > 0.0 ? dist.moment1(lo, hi) / m : c[i];
            lo = hi;
        }
        // Average with the negated reversal: the optimum is symmetric, and
        // this kills drift from grid asymmetry.
        for (int i = 0; i < k / 2; ++i) {
            double v = 0.5 * (next[i] - next[k - 1 - i]);
            next[i] = v;
            next[k - 1 - i] = -v;
        }
        move = 0.0;
        for (int i = 0; i < k; ++i) move = std::max(move, std::abs(next[i] - c[i]));
        c = next;
        if (opts.objective_trace) {
            opts.objective_trace->push_back(total_distortion(dist, c));
        }
        if (move <= opts.tolerance) {
            converged = true;
            break;
        }
    }
    if (!converged) {
        throw ConvergenceError("lloyd-max did not converge within " +
                                   std::to_string(opts.max_iterations) +
                                   " iterations (last move " + std::to_string(move) + ")",
                               c);
    }

    BetaCodebook cb;
    cb.dim = dim;
    cb.bits = bits;
    cb.centroids = std::move(c);
    cb.residual_distortion = total_distortion(dist, cb.centroids);
    return cb;
}

double expected_distortion(const BetaCodebook& cb) {
    if (cb.dim < 2 || cb.centroids.empty()) {
        throw DimensionError("expected_distortion: invalid codebook");
    }
    BetaDistribution dist(cb.dim);
    return total_distortion(dist, cb.centroids);
}

int quantize_scalar(const BetaCodebook& cb, double y) {
    const auto& c = cb.centroids;
    // First index whose upper midpoint is >= y; equality keeps the lower
    // index, which is the stated tie rule.
    int lo = 0, hi = static_cast<int>(c.size()) - 1;
    while (lo < hi) {
        int mid = (lo + hi) / 2;
        if (0.5 * (c[mid] + c[mid + 1]) >= y) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    return lo;
}

void write_codebook(ByteWriter& w, const BetaCodebook& cb) {
    w.put_magic("TQCB");
    w.put_u16(1);
    w.put_u32(static_cast<uint32_t>(cb.dim));
    w.put_u8(static_cast<uint8_t>(cb.bits));
    w.put_u8(0);
    w.put_u8(0);
    w.put_u8(0);
    for (double v : cb.centroids) w.put_f32(static_cast<float>(v));
}

std::vector<uint8_t> serialize_codebook(const BetaCodebook& cb) {
    ByteWriter w;
    write_codebook(w, cb);
    return w.take();
}

BetaCodebook read_codebook(ByteReader& r) {
    r.expect_magic("TQCB", "codebook");
    uint16_t version = r.get_u16();
    if (version != 1) {
        throw FormatError("codebook: unsupported version " + std::to_string(version));
    }
    BetaCodebook cb;
    cb.dim = static_cast<int>(r.get_u32());
    cb.bits = r.get_u8();
    r.get_u8();
    r.get_u8();
    r.get_u8();
    check_bits(cb.bits);
    if (cb.dim != 0 && cb.dim < 2) {
        throw FormatError("codebook: bad dimension " + std::to_string(cb.dim));
    }
    cb.centroids.resize(static_cast<std::size_t>(1) << cb.bits);
    for (auto& v : cb.centroids) v = r.get_f32();
    if (cb.dim != 0) {
        for (std::size_t i = 1; i < cb.centroids.size(); ++i) {
            if (!(cb.centroids[i] > cb.centroids[i - 1])) {
                throw FormatError("codebook: centroids not strictly increasing");
            }
        }
        cb.residual_distortion = expected_distortion(cb);
    }
    return cb;
}

BetaCodebook parse_codebook(std::span<const uint8_t> bytes) {
    ByteReader r(bytes);
    return read_codebook(r);
}

} // namespace tq
