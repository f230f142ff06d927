#include "tq/tensors.hpp"

#include <cmath>
#include <string>

#include "tq/rotation.hpp"

namespace tq {

namespace {

void check_dims(const std::vector<uint32_t>& dims) {
    if (dims.size() != 2 && dims.size() != 3) {
        throw FormatError("tensor: ndim must be 2 or 3, got " +
                          std::to_string(dims.size()));
    }
    // A zero leading dimension (empty tensor) is fine; zero inner
    // dimensions would make rows meaningless.
    for (std::size_t i = 1; i < dims.size(); ++i) {
        if (dims[i] == 0) throw FormatError("tensor: zero inner dimension");
    }
}

} // namespace

std::size_t TensorFile::rows() const {
    if (dims.empty()) return 0;
    std::size_t r = 1;
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) r *= dims[i];
    return r;
}

TensorFile read_tensor(std::span<const uint8_t> bytes) {
    ByteReader r(bytes);
    r.expect_magic("TQTN", "tensor");
    uint16_t version = r.get_u16();
    if (version != 1) {
        throw FormatError("tensor: unsupported version " + std::to_string(version));
    }
    uint16_t ndim = r.get_u16();
    if (ndim != 2 && ndim != 3) {
        throw FormatError("tensor: ndim must be 2 or 3, got " + std::to_string(ndim));
    }
    TensorFile t;
    t.dims.resize(ndim);
    for (auto& d : t.dims) d = r.get_u32();
    check_dims(t.dims);
    const std::size_t count = t.value_count();
    if (r.remaining() != count * 4) {
        throw FormatError("tensor: payload has " + std::to_string(r.remaining()) +
                          " bytes, dims require " + std::to_string(count * 4));
    }
    t.data.resize(count);
    for (auto& v : t.data) v = r.get_f32();
    return t;
}

std::vector<uint8_t> write_tensor(const TensorFile& t) {
    check_dims(t.dims);
    if (t.data.size() != t.value_count()) {
        throw FormatError("tensor: data size does not match dims");
    }
    ByteWriter w;
    w.put_magic("TQTN");
    w.put_u16(1);
    w.put_u16(static_cast<uint16_t>(t.dims.size()));
    for (uint32_t d : t.dims) w.put_u32(d);
    for (float v : t.data) w.put_f32(v);
    return w.take();
}

CompressedTensor compress_tensor(const TensorFile& t, int bits, uint64_t seed) {
    check_dims(t.dims);
    if (t.data.size() != t.value_count()) {
        throw FormatError("compress_tensor: data size does not match dims");
    }
    const std::size_t d = t.row_dim();
    if (d < 2) throw DimensionError("compress_tensor: row dimension must be >= 2");
    if (bits < 1 || bits > 8) throw RangeError("compress_tensor: bits must be in [1, 8]");

    CompressedTensor ct;
    ct.rows = t.rows();
    ct.dim = static_cast<uint32_t>(d);
    ct.bits = static_cast<uint8_t>(bits);
    ct.seed = seed;
    ct.codebook = solve_lloyd_max(static_cast<int>(d), bits);

    Rotation rot(static_cast<int>(d), seed);
    ct.norms.resize(ct.rows);
    ct.packed.resize(ct.rows * packed_size(d, bits));
    quantize_rows(rot, ct.codebook, t.data.data(), ct.rows, ct.norms.data(),
                  ct.packed.data());
    return ct;
}

TensorFile decompress_tensor(const CompressedTensor& ct) {
    if (ct.codebook.dim != static_cast<int>(ct.dim) || ct.codebook.bits != ct.bits) {
        throw FormatError("decompress_tensor: codebook does not match header");
    }
    if (ct.norms.size() != ct.rows ||
        ct.packed.size() != ct.rows * packed_size(ct.dim, ct.bits)) {
        throw FormatError("decompress_tensor: payload size mismatch");
    }
    TensorFile t;
    t.dims = {static_cast<uint32_t>(ct.rows), ct.dim};
    t.data.resize(ct.rows * static_cast<std::size_t>(ct.dim));
    Rotation rot(static_cast<int>(ct.dim), ct.seed);
    dequantize_rows(rot, ct.codebook, ct.norms.data(), ct.packed.data(), ct.rows,
                    t.data.data());
    return t;
}

std::vector<uint8_t> serialize_tensor_container(const CompressedTensor& ct) {
    ByteWriter w;
    w.put_magic("TQKV");
    w.put_u16(1);
    w.put_u64(ct.rows);
    w.put_u32(ct.dim);
    w.put_u8(ct.bits);
    w.put_u8(0);
    w.put_u8(0);
    w.put_u8(0);
    w.put_u64(ct.seed);
    write_codebook(w, ct.codebook);
    const std::size_t rec = packed_size(ct.dim, ct.bits);
    for (std::size_t i = 0; i < ct.rows; ++i) {
        w.put_f32(ct.norms[i]);
        w.put_bytes(std::span(ct.packed.data() + i * rec, rec));
    }
    return w.take();
}

CompressedTensor parse_tensor_container(std::span<const uint8_t> bytes) {
    ByteReader r(bytes);
    r.expect_magic("TQKV", "tensor container");
    uint16_t version = r.get_u16();
    if (version != 1) {
        throw FormatError("tensor container: unsupported version " +
                          std::to_string(version));
    }
    CompressedTensor ct;
    ct.rows = r.get_u64();
    ct.dim = r.get_u32();
    ct.bits = r.get_u8();
    r.get_u8();
    r.get_u8();
    r.get_u8();
    ct.seed = r.get_u64();
    ct.codebook = read_codebook(r);
    if (ct.codebook.dim != static_cast<int>(ct.dim) || ct.codebook.bits != ct.bits) {
        throw FormatError("tensor container: embedded codebook does not match header");
    }
    const std::size_t rec = packed_size(ct.dim, ct.bits);
    ct.norms.resize(ct.rows);
    ct.packed.resize(ct.rows * rec);
    for (std::size_t i = 0; i < ct.rows; ++i) {
        ct.norms[i] = r.get_f32();
        auto src = r.get_bytes(rec);
        std::copy(src.begin(), src.end(), ct.packed.begin() + i * rec);
    }
    return ct;
}

double kv_ratio(int dim, int bits) {
    return 32.0 * dim / (static_cast<double>(bits) * dim + 32.0);
}

Eigen::MatrixXd attention(const Eigen::MatrixXd& q, const Eigen::MatrixXd& k,
                          const Eigen::MatrixXd& v, double scale) {
    if (q.cols() != k.cols() || k.rows() != v.rows()) {
        throw ShapeError("attention: inconsistent shapes");
    }
    Eigen::MatrixXd scores = scale * (q * k.transpose());
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        double mx = scores.row(i).maxCoeff();
        scores.row(i) = (scores.row(i).array() - mx).exp();
        scores.row(i) /= scores.row(i).sum();
    }
    return scores * v;
}

namespace {

// Quantize/dequantize every row of m through the shared (rotation,
// codebook) pair, in double precision end to end.
Eigen::MatrixXd roundtrip_rows(const Eigen::MatrixXd& m, const BetaCodebook& cb,
                               const Rotation& rot, double* rel_mse_out) {
    Eigen::MatrixXd out(m.rows(), m.cols());
    double rel_sum = 0.0;
    std::size_t live = 0;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        std::vector<double> row(m.cols());
        for (Eigen::Index j = 0; j < m.cols(); ++j) row[j] = m(i, j);
        QuantizedVector qv = quantize_vector(rot, cb, std::span<const double>(row));
        std::vector<double> back = dequantize_vector(rot, cb, qv);
        double err = 0.0, nrm = 0.0;
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            double d = row[j] - back[j];
            err += d * d;
            nrm += row[j] * row[j];
            out(i, j) = back[j];
        }
        if (nrm > 0.0) {
            rel_sum += err / nrm;
            ++live;
        }
    }
    if (rel_mse_out) *rel_mse_out = live > 0 ? rel_sum / static_cast<double>(live) : 0.0;
    return out;
}

} // namespace

AttentionMetrics attention_error(const Eigen::MatrixXd& q, const Eigen::MatrixXd& k,
                                 const Eigen::MatrixXd& v, int bits, uint64_t seed,
                                 double scale) {
    if (q.cols() != k.cols() || k.rows() != v.rows()) {
        throw ShapeError("attention_error: inconsistent shapes");
    }
    const int d_k = static_cast<int>(k.cols());
    const int d_v = static_cast<int>(v.cols());

    BetaCodebook cb_k = solve_lloyd_max(d_k, bits);
    BetaCodebook cb_v = d_v == d_k ? cb_k : solve_lloyd_max(d_v, bits);
    Rotation rot_k(d_k, seed);
    Rotation rot_v(d_v, seed + 1);

    AttentionMetrics metrics;
    Eigen::MatrixXd k_hat = roundtrip_rows(k, cb_k, rot_k, &metrics.k_row_rel_mse);
    Eigen::MatrixXd v_hat = roundtrip_rows(v, cb_v, rot_v, &metrics.v_row_rel_mse);

    Eigen::MatrixXd exact = attention(q, k, v, scale);
    Eigen::MatrixXd approx = attention(q, k_hat, v_hat, scale);
    metrics.output_mse =
        (exact - approx).squaredNorm() / static_cast<double>(exact.size());
    metrics.kv_ratio = kv_ratio(d_k, bits);
    return metrics;
}

} // namespace tq
