#include "tq/rotation.hpp"

#include <Eigen/Dense>
#include <string>

#include "tq/rng.hpp"

namespace tq {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void check_dim(int dim) {
    if (dim < 2 || dim > Rotation::kMaxDim) {
        throw DimensionError("rotation dim must be in [2, " +
                             std::to_string(Rotation::kMaxDim) + "], got " +
                             std::to_string(dim));
    }
}

} // namespace

Rotation::Rotation(int dim, uint64_t seed) : dim_(dim), seed_(seed) {
    check_dim(dim);

    PhiloxRng rng(seed, 0);
    Eigen::MatrixXd g(dim, dim);
    for (int i = 0; i < dim; ++i) {
        for (int j = 0; j < dim; ++j) {
            g(i, j) = rng.next_gaussian();
        }
    }

    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ();
    // Sign-fix for Haar uniformity: flip columns whose R diagonal is
    // negative (sign(0) maps to +1, so zero diagonals are left alone).
    for (int j = 0; j < dim; ++j) {
        if (qr.matrixQR()(j, j) < 0.0) q.col(j) = -q.col(j);
    }

    m_.resize(static_cast<std::size_t>(dim) * dim);
    Eigen::Map<RowMatrix>(m_.data(), dim, dim) = q;
}

Rotation Rotation::from_matrix(int dim, uint64_t seed, std::vector<double> row_major) {
    check_dim(dim);
    if (row_major.size() != static_cast<std::size_t>(dim) * dim) {
        throw ShapeError("rotation matrix size mismatch");
    }
    Rotation r;
    r.dim_ = dim;
    r.seed_ = seed;
    r.m_ = std::move(row_major);
    return r;
}

std::vector<double> Rotation::apply(std::span<const double> x) const {
    if (x.size() != static_cast<std::size_t>(dim_)) {
        throw ShapeError("apply: vector length " + std::to_string(x.size()) +
                         " != dim " + std::to_string(dim_));
    }
    std::vector<double> out(dim_);
    apply_rows(x.data(), out.data(), 1);
    return out;
}

std::vector<double> Rotation::apply_inverse(std::span<const double> y) const {
    if (y.size() != static_cast<std::size_t>(dim_)) {
        throw ShapeError("apply_inverse: vector length " + std::to_string(y.size()) +
                         " != dim " + std::to_string(dim_));
    }
    std::vector<double> out(dim_);
    apply_inverse_rows(y.data(), out.data(), 1);
    return out;
}

void Rotation::apply_rows(const double* in, double* out, std::size_t rows) const {
    Eigen::Map<const RowMatrix> m(m_.data(), dim_, dim_);
    Eigen::Map<const RowMatrix> x(in, static_cast<Eigen::Index>(rows), dim_);
    Eigen::Map<RowMatrix> y(out, static_cast<Eigen::Index>(rows), dim_);
    // Row i of the output is M * x_i, i.e. Y = X * M^T.
    y.noalias() = x * m.transpose();
}

void Rotation::apply_inverse_rows(const double* in, double* out, std::size_t rows) const {
    Eigen::Map<const RowMatrix> m(m_.data(), dim_, dim_);
    Eigen::Map<const RowMatrix> x(in, static_cast<Eigen::Index>(rows), dim_);
    Eigen::Map<RowMatrix> y(out, static_cast<Eigen::Index>(rows), dim_);
    y.noalias() = x * m;
}

} // namespace tq
