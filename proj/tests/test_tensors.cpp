#include <doctest.h>

#include <cmath>
#include <vector>

#include "tq/rng.hpp"
#include "tq/tensors.hpp"

using tq::TensorFile;

namespace {

TensorFile random_tensor(std::vector<uint32_t> dims, uint64_t seed, double scale = 1.0) {
    TensorFile t;
    t.dims = std::move(dims);
    t.data.resize(t.value_count());
    tq::PhiloxRng rng(seed, 0);
    for (auto& v : t.data) v = static_cast<float>(rng.next_gaussian() * scale);
    return t;
}

Eigen::MatrixXd gaussian_matrix(int rows, int cols, uint64_t seed, double scale) {
    Eigen::MatrixXd m(rows, cols);
    tq::PhiloxRng rng(seed, 0);
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) m(i, j) = rng.next_gaussian() * scale;
    }
    return m;
}

} // namespace

TEST_CASE("tensor file round trip") {
    auto t = random_tensor({8, 16}, 3);
    auto bytes = tq::write_tensor(t);
    auto back = tq::read_tensor(bytes);
    CHECK(back.dims == t.dims);
    CHECK(back.data == t.data);

    auto t3 = random_tensor({2, 5, 16}, 4);
    auto back3 = tq::read_tensor(tq::write_tensor(t3));
    CHECK(back3.dims == t3.dims);
    CHECK(back3.rows() == 10);
    CHECK(back3.row_dim() == 16);
}

TEST_CASE("empty tensor is valid") {
    TensorFile t;
    t.dims = {0, 32};
    auto back = tq::read_tensor(tq::write_tensor(t));
    CHECK(back.rows() == 0);
    CHECK(back.data.empty());
}

TEST_CASE("tensor format errors") {
    auto bytes = tq::write_tensor(random_tensor({4, 8}, 1));
    auto bad = bytes;
    bad[2] = 'X';
    CHECK_THROWS_AS(tq::read_tensor(bad), tq::FormatError);

    auto short_payload = bytes;
    short_payload.resize(short_payload.size() - 4); // dims now disagree
    CHECK_THROWS_AS(tq::read_tensor(short_payload), tq::FormatError);

    TensorFile wrong;
    wrong.dims = {4, 8};
    wrong.data.resize(31);
    CHECK_THROWS_AS(tq::write_tensor(wrong), tq::FormatError);

    TensorFile one_dim;
    one_dim.dims = {4};
    one_dim.data.resize(4);
    CHECK_THROWS_AS(tq::write_tensor(one_dim), tq::FormatError);
}

TEST_CASE("kv ratio closed form reproduces byte accounting") {
    // At d=1024 the packed record is exactly d*b/8 bytes, so the formula is
    // exact (header excluded).
    for (int b : {1, 2, 3, 4, 5, 8}) {
        CAPTURE(b);
        double per_row_orig = 4.0 * 1024;
        double per_row_comp = 4.0 + tq::packed_size(1024, b);
        CHECK(tq::kv_ratio(1024, b) ==
              doctest::Approx(per_row_orig / per_row_comp).epsilon(1e-12));
    }
    CHECK(tq::kv_ratio(1024, 4) == doctest::Approx(7.9380).epsilon(1e-4));
    CHECK(tq::kv_ratio(1024, 3) == doctest::Approx(10.5567).epsilon(1e-4));
}

TEST_CASE("tensor compression round trip and container") {
    auto t = random_tensor({32, 64}, 9);
    auto ct = tq::compress_tensor(t, 4, 5);
    CHECK(ct.rows == 32);
    CHECK(ct.dim == 64);

    auto bytes = tq::serialize_tensor_container(ct);
    // fixed header 30 + codebook block + row records
    std::size_t expect = 30 + (14 + 4 * 16) + 32 * (4 + tq::packed_size(64, 4));
    CHECK(bytes.size() == expect);

    auto parsed = tq::parse_tensor_container(bytes);
    CHECK(parsed.norms == ct.norms);
    CHECK(parsed.packed == ct.packed);

    auto back = tq::decompress_tensor(parsed);
    REQUIRE(back.dims == std::vector<uint32_t>{32, 64});
    double err = 0.0, ref = 0.0;
    for (std::size_t i = 0; i < t.data.size(); ++i) {
        double d = t.data[i] - back.data[i];
        err += d * d;
        ref += static_cast<double>(t.data[i]) * t.data[i];
    }
    CHECK(err / ref < 2.7206990463513265 * std::pow(4.0, -4));
}

TEST_CASE("unit rows at d=1024 meet the per-row ceiling") {
    const int d = 1024, rows = 256, b = 4;
    TensorFile t;
    t.dims = {rows, d};
    t.data.resize(static_cast<std::size_t>(rows) * d);
    tq::PhiloxRng rng(2, 0);
    for (int i = 0; i < rows; ++i) {
        double sq = 0.0;
        float* row = t.data.data() + static_cast<std::size_t>(i) * d;
        for (int j = 0; j < d; ++j) {
            row[j] = static_cast<float>(rng.next_gaussian());
            sq += static_cast<double>(row[j]) * row[j];
        }
        float inv = static_cast<float>(1.0 / std::sqrt(sq));
        for (int j = 0; j < d; ++j) row[j] *= inv;
    }
    auto back = tq::decompress_tensor(tq::compress_tensor(t, b, 3));
    double err = 0.0;
    for (std::size_t i = 0; i < t.data.size(); ++i) {
        double dlt = t.data[i] - back.data[i];
        err += dlt * dlt;
    }
    double mean_row_mse = err / rows;
    CHECK(mean_row_mse < 2.7206990463513265 * std::pow(4.0, -b) *
                             (1 + 3.0 / std::sqrt(static_cast<double>(rows))));
    CHECK(mean_row_mse > 0.5 * std::pow(4.0, -b));
    // near the solved codebook's own distortion
    CHECK(mean_row_mse == doctest::Approx(0.00948).epsilon(0.05));
}

TEST_CASE("attention reduces correctly in degenerate cases") {
    auto k = gaussian_matrix(5, 32, 1, 1.0);
    auto v = gaussian_matrix(5, 32, 2, 1.0);

    // zero queries: uniform softmax, every output row is the column mean
    Eigen::MatrixXd q0 = Eigen::MatrixXd::Zero(3, 32);
    auto out = tq::attention(q0, k, v, 0.125);
    Eigen::RowVectorXd mean = v.colwise().mean();
    for (int i = 0; i < out.rows(); ++i) {
        CHECK((out.row(i) - mean).lpNorm<Eigen::Infinity>() < 1e-12);
    }

    // single key: output equals that value row
    auto q = gaussian_matrix(3, 32, 3, 1.0);
    auto out1 = tq::attention(q, k.topRows(1), v.topRows(1), 0.125);
    for (int i = 0; i < out1.rows(); ++i) {
        CHECK((out1.row(i) - v.row(0)).lpNorm<Eigen::Infinity>() < 1e-12);
    }

    CHECK_THROWS_AS(tq::attention(q, k, v.topRows(2), 0.125), tq::ShapeError);
}

TEST_CASE("softmax rows sum to one through the output of constant values") {
    // V = all ones: any softmax weighting returns exactly one
    auto q = gaussian_matrix(6, 16, 5, 1.0);
    auto k = gaussian_matrix(9, 16, 6, 1.0);
    Eigen::MatrixXd v = Eigen::MatrixXd::Ones(9, 4);
    auto out = tq::attention(q, k, v, 0.25);
    for (int i = 0; i < out.rows(); ++i) {
        for (int j = 0; j < out.cols(); ++j) {
            CHECK(out(i, j) == doctest::Approx(1.0).epsilon(1e-6));
        }
    }
}

TEST_CASE("quantized attention error is tiny at 8 bits") {
    const int d = 1024, n = 64;
    const double scale_entries = 1.0 / std::sqrt(static_cast<double>(d));
    auto q = gaussian_matrix(n, d, 11, scale_entries);
    auto k = gaussian_matrix(n, d, 12, scale_entries);
    auto v = gaussian_matrix(n, d, 13, scale_entries);
    auto m = tq::attention_error(q, k, v, 8, 1, 0.125);
    CHECK(m.output_mse < 1e-6);
    CHECK(m.kv_ratio == doctest::Approx(tq::kv_ratio(d, 8)).epsilon(1e-12));
    CHECK(m.k_row_rel_mse < 2.7206990463513265 * std::pow(4.0, -8) * 1.2);
}

TEST_CASE("zero queries reduce the harness to value-mean error") {
    const int d = 256, n = 16;
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, d);
    auto k = gaussian_matrix(n, d, 21, 0.0625);
    auto v = gaussian_matrix(n, d, 22, 0.0625);
    auto metrics = tq::attention_error(q, k, v, 3, 5, 0.125);

    // reproduce by hand: error of the column means of V~ vs V
    tq::BetaCodebook cb = tq::solve_lloyd_max(d, 3);
    tq::Rotation rot(d, 6); // value seed is harness seed + 1
    Eigen::MatrixXd v_hat(n, d);
    for (int i = 0; i < n; ++i) {
        std::vector<double> row(d);
        for (int j = 0; j < d; ++j) row[j] = v(i, j);
        auto qv = tq::quantize_vector(rot, cb, std::span<const double>(row));
        auto back = tq::dequantize_vector(rot, cb, qv);
        for (int j = 0; j < d; ++j) v_hat(i, j) = back[j];
    }
    Eigen::RowVectorXd diff = v_hat.colwise().mean() - v.colwise().mean();
    double expect = diff.squaredNorm() / d;
    CHECK(metrics.output_mse == doctest::Approx(expect).epsilon(1e-6));
}
