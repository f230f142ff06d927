#include "tq/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tq/parallel.hpp"

namespace tq {

namespace {

// Row chunk for the batch paths. Fixed so that results never depend on the
// worker count.
constexpr std::size_t kRowChunk = 256;

void check_pair(const Rotation& rot, const BetaCodebook& cb, std::size_t len) {
    if (rot.dim() != cb.dim || static_cast<std::size_t>(rot.dim()) != len) {
        throw ShapeError("quantizer: rotation dim " + std::to_string(rot.dim()) +
                         ", codebook dim " + std::to_string(cb.dim) +
                         ", vector length " + std::to_string(len) + " must all agree");
    }
}

void append_bits(std::vector<uint8_t>& out, uint64_t& acc, int& nbits, uint32_t value,
                 int width) {
    acc |= static_cast<uint64_t>(value) << nbits;
    nbits += width;
    while (nbits >= 8) {
        out.push_back(static_cast<uint8_t>(acc));
        acc >>= 8;
        nbits -= 8;
    }
}

// Quantizes `count` already-rotated coordinates into `idx`.
void nearest_indices(const BetaCodebook& cb, const double* y, std::size_t count,
                     uint8_t* idx) {
    for (std::size_t j = 0; j < count; ++j) {
        idx[j] = static_cast<uint8_t>(quantize_scalar(cb, y[j]));
    }
}

} // namespace

std::vector<uint8_t> pack_indices(std::span<const uint8_t> indices, int bits) {
    if (bits < 1 || bits > 8) {
        throw RangeError("pack_indices: bits must be in [1, 8]");
    }
    const uint32_t limit = 1u << bits;
    std::vector<uint8_t> out;
    out.reserve(packed_size(indices.size(), bits));
    uint64_t acc = 0;
    int nbits = 0;
    for (std::size_t j = 0; j < indices.size(); ++j) {
        if (indices[j] >= limit) {
            throw RangeError("pack_indices: index " + std::to_string(indices[j]) +
                             " out of range at position " + std::to_string(j));
        }
        append_bits(out, acc, nbits, indices[j], bits);
    }
    if (nbits > 0) out.push_back(static_cast<uint8_t>(acc));
    return out;
}

std::vector<uint8_t> unpack_indices(std::span<const uint8_t> bytes, std::size_t count,
                                    int bits) {
    if (bits < 1 || bits > 8) {
        throw RangeError("unpack_indices: bits must be in [1, 8]");
    }
    if (bytes.size() != packed_size(count, bits)) {
        throw FormatError("unpack_indices: expected " +
                          std::to_string(packed_size(count, bits)) + " bytes, got " +
                          std::to_string(bytes.size()));
    }
    // Nonzero pad bits are tolerated; the mask below ignores them.
    std::vector<uint8_t> out(count);
    const uint32_t mask = (1u << bits) - 1;
    uint64_t acc = 0;
    int nbits = 0;
    std::size_t pos = 0;
    for (std::size_t j = 0; j < count; ++j) {
        while (nbits < bits) {
            acc |= static_cast<uint64_t>(bytes[pos++]) << nbits;
            nbits += 8;
        }
        out[j] = static_cast<uint8_t>(acc & mask);
        acc >>= bits;
        nbits -= bits;
    }
    return out;
}

QuantizedVector quantize_vector(const Rotation& rot, const BetaCodebook& cb,
                                std::span<const double> f) {
    check_pair(rot, cb, f.size());
    const std::size_t d = f.size();

    double sq = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
        if (!std::isfinite(f[j])) {
            throw DataError("quantize_vector: non-finite value at coordinate " +
                            std::to_string(j));
        }
        sq += f[j] * f[j];
    }
    QuantizedVector qv;
    qv.norm = static_cast<float>(std::sqrt(sq));
    if (qv.norm == 0.0f) {
        qv.packed.assign(packed_size(d, cb.bits), 0);
        return qv;
    }

    std::vector<double> unit(d);
    const double inv = 1.0 / std::sqrt(sq);
    for (std::size_t j = 0; j < d; ++j) unit[j] = f[j] * inv;
    std::vector<double> y = rot.apply(unit);

    std::vector<uint8_t> idx(d);
    nearest_indices(cb, y.data(), d, idx.data());
    qv.packed = pack_indices(idx, cb.bits);
    return qv;
}

QuantizedVector quantize_vector(const Rotation& rot, const BetaCodebook& cb,
                                std::span<const float> f) {
    std::vector<double> tmp(f.begin(), f.end());
    return quantize_vector(rot, cb, std::span<const double>(tmp));
}

std::vector<double> dequantize_vector(const Rotation& rot, const BetaCodebook& cb,
                                      const QuantizedVector& qv) {
    const std::size_t d = static_cast<std::size_t>(rot.dim());
    check_pair(rot, cb, d);
    if (qv.packed.size() != packed_size(d, cb.bits)) {
        throw FormatError("dequantize_vector: packed payload has " +
                          std::to_string(qv.packed.size()) + " bytes, expected " +
                          std::to_string(packed_size(d, cb.bits)));
    }
    if (qv.norm == 0.0f) return std::vector<double>(d, 0.0);

    std::vector<uint8_t> idx = unpack_indices(qv.packed, d, cb.bits);
    std::vector<double> y(d);
    for (std::size_t j = 0; j < d; ++j) y[j] = cb.centroids[idx[j]];
    std::vector<double> x = rot.apply_inverse(y);
    for (double& v : x) v *= static_cast<double>(qv.norm);
    return x;
}

void quantize_rows(const Rotation& rot, const BetaCodebook& cb, const float* rows,
                   std::size_t count, float* norms, uint8_t* packed) {
    const std::size_t d = static_cast<std::size_t>(rot.dim());
    check_pair(rot, cb, d);
    const std::size_t rec = packed_size(d, cb.bits);

    parallel_chunks(count, kRowChunk, [&](std::size_t lo, std::size_t hi) {
        const std::size_t n = hi - lo;
        std::vector<double> unit(n * d), rotated(n * d);
        std::vector<uint8_t> idx(d);
        std::size_t live = 0;
        for (std::size_t i = lo; i < hi; ++i) {
            const float* f = rows + i * d;
            double sq = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                if (!std::isfinite(f[j])) {
                    throw DataError("quantize_rows: non-finite value in record " +
                                    std::to_string(i) + " coordinate " + std::to_string(j));
                }
                sq += static_cast<double>(f[j]) * f[j];
            }
            norms[i] = static_cast<float>(std::sqrt(sq));
            if (norms[i] == 0.0f) {
                std::fill(packed + i * rec, packed + (i + 1) * rec, uint8_t{0});
                continue;
            }
            const double inv = 1.0 / std::sqrt(sq);
            double* u = unit.data() + live * d;
            for (std::size_t j = 0; j < d; ++j) u[j] = f[j] * inv;
            ++live;
        }
        // Rotate the whole chunk at once, then emit per-record indices. The
        // zero-norm rows were skipped above, so walk them in step.
        rot.apply_rows(unit.data(), rotated.data(), live);
        std::size_t k = 0;
        for (std::size_t i = lo; i < hi; ++i) {
            if (norms[i] == 0.0f) continue;
            nearest_indices(cb, rotated.data() + k * d, d, idx.data());
            auto bytes = pack_indices(idx, cb.bits);
            std::copy(bytes.begin(), bytes.end(), packed + i * rec);
            ++k;
        }
    });
}

void dequantize_rows(const Rotation& rot, const BetaCodebook& cb, const float* norms,
                     const uint8_t* packed, std::size_t count, float* rows) {
    const std::size_t d = static_cast<std::size_t>(rot.dim());
    check_pair(rot, cb, d);
    const std::size_t rec = packed_size(d, cb.bits);

    parallel_chunks(count, kRowChunk, [&](std::size_t lo, std::size_t hi) {
        const std::size_t n = hi - lo;
        std::vector<double> centroids(n * d), restored(n * d);
        for (std::size_t i = lo; i < hi; ++i) {
            auto idx = unpack_indices(std::span(packed + i * rec, rec), d, cb.bits);
            double* y = centroids.data() + (i - lo) * d;
            for (std::size_t j = 0; j < d; ++j) y[j] = cb.centroids[idx[j]];
        }
        rot.apply_inverse_rows(centroids.data(), restored.data(), n);
        for (std::size_t i = lo; i < hi; ++i) {
            const double s = norms[i];
            const double* x = restored.data() + (i - lo) * d;
            float* out = rows + i * d;
            if (s == 0.0) {
                std::fill(out, out + d, 0.0f);
                continue;
            }
            for (std::size_t j = 0; j < d; ++j) {
                out[j] = static_cast<float>(s * x[j]);
            }
        }
    });
}

std::pair<FloatMatrix, GroupedTable> group_entries(const FloatMatrix& table,
                                                   int target_dim) {
    if (table.cols < 1) throw ShapeError("group_entries: entry_dim must be >= 1");
    if (target_dim < 16) {
        throw RangeError("group_entries: target_dim must be >= 16, got " +
                         std::to_string(target_dim));
    }
    const int d_f = static_cast<int>(table.cols);
    const int g = (target_dim + d_f - 1) / d_f;

    GroupedTable meta;
    meta.entry_dim = d_f;
    meta.group = g;

    FloatMatrix grouped;
    grouped.cols = static_cast<std::size_t>(g) * d_f;
    if (table.rows == 0) {
        meta.pad_count = 0;
        return {std::move(grouped), meta};
    }
    const std::size_t m = (table.rows + g - 1) / g;
    meta.pad_count = m * g - table.rows;
    grouped.rows = m;
    grouped.data.assign(m * grouped.cols, 0.0f);
    std::copy(table.data.begin(), table.data.end(), grouped.data.begin());
    return {std::move(grouped), meta};
}

FloatMatrix ungroup_entries(const FloatMatrix& grouped, const GroupedTable& meta,
                            std::size_t original_count) {
    if (meta.entry_dim < 1 || meta.group < 1) {
        throw FormatError("ungroup_entries: bad grouping metadata");
    }
    if (grouped.cols != static_cast<std::size_t>(meta.group) * meta.entry_dim) {
        throw FormatError("ungroup_entries: grouped width inconsistent with metadata");
    }
    const std::size_t total = grouped.rows * static_cast<std::size_t>(meta.group);
    if (original_count + meta.pad_count != total) {
        throw FormatError("ungroup_entries: entry count inconsistent with metadata");
    }
    FloatMatrix out;
    out.rows = original_count;
    out.cols = static_cast<std::size_t>(meta.entry_dim);
    out.data.assign(grouped.data.begin(),
                    grouped.data.begin() + original_count * out.cols);
    return out;
}

} // namespace tq
