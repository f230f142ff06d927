#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tq/codebook.hpp"
#include "tq/error.hpp"
#include "tq/rotation.hpp"

namespace tq {

// Norm-separated quantization of one vector: the Euclidean norm is kept as
// a 32-bit float and only the unit direction is rotated and quantized, so
// reconstruction error scales with norm^2. A zero norm stores all-zero
// index bits and dequantizes back to the zero vector.
struct QuantizedVector {
    float norm = 0.0f;
    std::vector<uint8_t> packed; // ceil(dim*bits/8) bytes, pad bits zero
};

inline std::size_t packed_size(std::size_t count, int bits) {
    return (count * static_cast<std::size_t>(bits) + 7) / 8;
}

// Bit layout: index j occupies stream bits [j*b, (j+1)*b), where stream bit
// k is bit (k % 8) of byte k / 8. Trailing pad bits are zero.
std::vector<uint8_t> pack_indices(std::span<const uint8_t> indices, int bits);
std::vector<uint8_t> unpack_indices(std::span<const uint8_t> bytes, std::size_t count,
                                    int bits);

QuantizedVector quantize_vector(const Rotation& rot, const BetaCodebook& cb,
                                std::span<const double> f);
QuantizedVector quantize_vector(const Rotation& rot, const BetaCodebook& cb,
                                std::span<const float> f);

std::vector<double> dequantize_vector(const Rotation& rot, const BetaCodebook& cb,
                                      const QuantizedVector& qv);

// Batch forms over `count` row-major rows. Norms land in norms[i], packed
// bytes in packed[i*packed_size ..]. Parallelized over fixed-size row
// chunks; results do not depend on the worker count.
void quantize_rows(const Rotation& rot, const BetaCodebook& cb, const float* rows,
                   std::size_t count, float* norms, uint8_t* packed);
void dequantize_rows(const Rotation& rot, const BetaCodebook& cb, const float* norms,
                     const uint8_t* packed, std::size_t count, float* rows);

// Entry grouping for feature tables whose per-entry dimension is too small
// to rotate directly: g = ceil(target_dim / entry_dim) consecutive entries
// concatenate into one vector of g*entry_dim coordinates, zero-padding the
// table to a multiple of g.
struct GroupedTable {
    int entry_dim = 0;
    int group = 1;
    std::size_t pad_count = 0;
};

struct FloatMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<float> data; // row-major

    float* row(std::size_t i) { return data.data() + i * cols; }
    const float* row(std::size_t i) const { return data.data() + i * cols; }
};

std::pair<FloatMatrix, GroupedTable> group_entries(const FloatMatrix& table,
                                                   int target_dim);
FloatMatrix ungroup_entries(const FloatMatrix& grouped, const GroupedTable& meta,
                            std::size_t original_count);

} // namespace tq
