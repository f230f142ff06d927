#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tq/error.hpp"

namespace tq {

// Seeded Haar-random orthogonal matrix.
//
// Derivation (pinned; containers store only the seed, so this recipe is the
// contract for this implementation):
//   1. Philox4x32-10 stream 0 of `seed`, Box-Muller standard normals fill a
//      dim x dim matrix in row-major order (entry (i,j) consumes variate
//      i*dim + j).
//   2. Householder QR; Q's column j is multiplied by the sign of R(j,j),
//      with sign(0) taken as +1.
// The resulting matrix is bit-reproducible for a fixed (dim, seed) on any
// build of this implementation; cross-implementation interchange goes
// through the optional embedded-matrix container section instead.
class Rotation {
public:
    static constexpr int kMaxDim = 8192;

    Rotation(int dim, uint64_t seed);

    // Wraps an externally supplied matrix (e.g. one embedded in a
    // container). No orthogonality repair is attempted.
    static Rotation from_matrix(int dim, uint64_t seed, std::vector<double> row_major);

    int dim() const { return dim_; }
    uint64_t seed() const { return seed_; }
    const std::vector<double>& matrix() const { return m_; } // row-major

    std::vector<double> apply(std::span<const double> x) const;
    std::vector<double> apply_inverse(std::span<const double> y) const;

    // Batch forms: `rows` consecutive vectors of length dim(), row-major.
    // Output may not alias input.
    void apply_rows(const double* in, double* out, std::size_t rows) const;
    void apply_inverse_rows(const double* in, double* out, std::size_t rows) const;

private:
    Rotation() = default;

    int dim_ = 0;
    uint64_t seed_ = 0;
    std::vector<double> m_;
};

inline Rotation haar_rotation(int dim, uint64_t seed) { return Rotation(dim, seed); }

} // namespace tq
