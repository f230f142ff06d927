#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "tq/codebook.hpp"
#include "tq/error.hpp"
#include "tq/quantizer.hpp"

namespace tq {

// "TQTN" tensor file: row-major f32 with a 2- or 3-dimensional shape.
struct TensorFile {
    std::vector<uint32_t> dims;
    std::vector<float> data;

    std::size_t value_count() const {
        std::size_t n = 1;
        for (uint32_t d : dims) n *= d;
        return dims.empty() ? 0 : n;
    }
    // 3-D tensors flatten their leading dimensions into rows.
    std::size_t rows() const;
    std::size_t row_dim() const { return dims.empty() ? 0 : dims.back(); }
};

TensorFile read_tensor(std::span<const uint8_t> bytes);
std::vector<uint8_t> write_tensor(const TensorFile& t);

// "TQKV" container: rows quantized independently against one shared
// rotation (from `seed`) and one precomputed codebook.
struct CompressedTensor {
    uint64_t rows = 0;
    uint32_t dim = 0;
    uint8_t bits = 0;
    uint64_t seed = 0;
    BetaCodebook codebook;
    std::vector<float> norms;    // rows
    std::vector<uint8_t> packed; // rows x ceil(dim*bits/8)
};

CompressedTensor compress_tensor(const TensorFile& t, int bits, uint64_t seed);
TensorFile decompress_tensor(const CompressedTensor& ct);

std::vector<uint8_t> serialize_tensor_container(const CompressedTensor& ct);
CompressedTensor parse_tensor_container(std::span<const uint8_t> bytes);

// 32d / (bd + 32): f32 row bytes over (norm + packed index) bytes. Matches
// the container byte accounting exactly whenever 8 divides d*b.
double kv_ratio(int dim, int bits);

// Row-wise softmax(scale * Q K^T) V.
Eigen::MatrixXd attention(const Eigen::MatrixXd& q, const Eigen::MatrixXd& k,
                          const Eigen::MatrixXd& v, double scale);

struct AttentionMetrics {
    double output_mse = 0.0;      // mean squared error per output element
    double k_row_rel_mse = 0.0;   // mean over rows of |k - k~|^2 / |k|^2
    double v_row_rel_mse = 0.0;
    double kv_ratio = 0.0;
};

// Exact attention vs attention over quantize/dequantize round-tripped K and
// V. Keys use `seed`, values `seed + 1`, so their errors are independent.
AttentionMetrics attention_error(const Eigen::MatrixXd& q, const Eigen::MatrixXd& k,
                                 const Eigen::MatrixXd& v, int bits, uint64_t seed,
                                 double scale);

} // namespace tq
