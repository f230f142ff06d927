#include "tq/gsplat.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <sstream>
#include <string>

#include "tq/quantizer.hpp"
#include "tq/rotation.hpp"

namespace tq {

namespace {

constexpr std::size_t kRawFloats = 14; // pos 3, quat 4, scale 3, opacity 1, dc 3

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::size_t ply_scalar_size(const std::string& type) {
    if (type == "char" || type == "int8" || type == "uchar" || type == "uint8") return 1;
    if (type == "short" || type == "int16" || type == "ushort" || type == "uint16") return 2;
    if (type == "int" || type == "int32" || type == "uint" || type == "uint32" ||
        type == "float" || type == "float32") {
        return 4;
    }
    if (type == "double" || type == "float64") return 8;
    throw FormatError("ply: unsupported property type '" + type + "'");
}

bool is_float_type(const std::string& type) { return type == "float" || type == "float32"; }

struct PlyProperty {
    std::string type;
    std::string name;
    std::size_t offset = 0; // byte offset within a vertex record
};

struct PlyHeader {
    std::size_t vertex_count = 0;
    std::size_t stride = 0;
    std::vector<PlyProperty> properties;
    std::size_t data_offset = 0;
};

PlyHeader parse_ply_header(std::span<const uint8_t> bytes) {
    // Find end_header; the header is ASCII, terminated by "end_header\n".
    static constexpr char kEnd[] = "end_header\n";
    std::string_view view(reinterpret_cast<const char*>(bytes.data()),
                          std::min<std::size_t>(bytes.size(), 1 << 20));
    std::size_t end = view.find(kEnd);
    if (end == std::string_view::npos) throw FormatError("ply: missing end_header");

    PlyHeader header;
    header.data_offset = end + sizeof(kEnd) - 1;

    std::istringstream in(std::string(view.substr(0, end)));
    std::string line;
    if (!std::getline(in, line) || (line != "ply" && line != "ply\r")) {
        throw FormatError("ply: missing magic line");
    }

    bool in_vertex = false;
    bool saw_vertex = false;
    bool format_ok = false;
    std::size_t offset = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ls(line);
        std::string word;
        ls >> word;
        if (word == "comment" || word == "obj_info" || word.empty()) continue;
        if (word == "format") {
            std::string fmt;
            ls >> fmt;
            if (fmt != "binary_little_endian") {
                throw FormatError("ply: unsupported encoding '" + fmt +
                                  "' (binary_little_endian required)");
            }
            format_ok = true;
        } else if (word == "element") {
            std::string name;
            std::size_t count = 0;
            ls >> name >> count;
            if (name == "vertex") {
                if (saw_vertex) throw FormatError("ply: duplicate vertex element");
                saw_vertex = true;
                in_vertex = true;
                header.vertex_count = count;
            } else {
                if (!saw_vertex) {
                    // Records of unknown size would precede the vertex data.
                    throw FormatError("ply: element '" + name +
                                      "' precedes vertex element");
                }
                in_vertex = false;
            }
        } else if (word == "property") {
            if (!in_vertex) continue; // trailing elements are ignored
            PlyProperty p;
            ls >> p.type;
            if (p.type == "list") throw FormatError("ply: list properties unsupported");
            ls >> p.name;
            p.offset = offset;
            offset += ply_scalar_size(p.type);
            header.properties.push_back(std::move(p));
        }
    }
    if (!format_ok) throw FormatError("ply: missing format line");
    if (!saw_vertex) throw FormatError("ply: missing vertex element");
    header.stride = offset;
    return header;
}

float read_f32_le(const uint8_t* p) {
    uint32_t bits = static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
                    (static_cast<uint32_t>(p[2]) << 16) |
                    (static_cast<uint32_t>(p[3]) << 24);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

void write_f32_le(std::vector<uint8_t>& out, float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    out.push_back(static_cast<uint8_t>(bits));
    out.push_back(static_cast<uint8_t>(bits >> 8));
    out.push_back(static_cast<uint8_t>(bits >> 16));
    out.push_back(static_cast<uint8_t>(bits >> 24));
}

} // namespace

int sh_dim_for_degree(int degree) {
    if (degree < 0 || degree > 3) {
        throw RangeError("sh degree must be in [0, 3], got " + std::to_string(degree));
    }
    return 3 * ((degree + 1) * (degree + 1) - 1);
}

int sh_degree_for_dim(int dim) {
    for (int l = 0; l <= 3; ++l) {
        if (sh_dim_for_degree(l) == dim) return l;
    }
    throw FormatError("unsupported SH coefficient count " + std::to_string(dim) +
                      " (expected 0, 9, 24 or 45)");
}

GaussianCloud parse_ply(std::span<const uint8_t> bytes) {
    PlyHeader header = parse_ply_header(bytes);

    std::map<std::string, const PlyProperty*> by_name;
    int rest_count = 0;
    for (const auto& p : header.properties) {
        by_name[p.name] = &p;
        if (p.name.rfind("f_rest_", 0) == 0) ++rest_count;
    }

    auto require = [&](const std::string& name) -> const PlyProperty* {
        auto it = by_name.find(name);
        if (it == by_name.end()) {
            throw FormatError("ply: missing required property '" + name + "'");
        }
        if (!is_float_type(it->second->type)) {
            throw FormatError("ply: property '" + name + "' must be float");
        }
        return it->second;
    };

    GaussianCloud cloud;
    cloud.count = header.vertex_count;
    cloud.sh_degree = sh_degree_for_dim(rest_count);

    const PlyProperty* px = require("x");
    const PlyProperty* py = require("y");
    const PlyProperty* pz = require("z");
    const PlyProperty* pdc[3] = {require("f_dc_0"), require("f_dc_1"), require("f_dc_2")};
    const PlyProperty* pop = require("opacity");
    const PlyProperty* psc[3] = {require("scale_0"), require("scale_1"), require("scale_2")};
    const PlyProperty* prot[4] = {require("rot_0"), require("rot_1"), require("rot_2"),
                                  require("rot_3")};
    std::vector<const PlyProperty*> prest(rest_count);
    for (int k = 0; k < rest_count; ++k) {
        prest[k] = require("f_rest_" + std::to_string(k));
    }

    const std::size_t need = header.data_offset + header.vertex_count * header.stride;
    if (bytes.size() < need) throw FormatError("ply: truncated vertex data");

    const std::size_t n = cloud.count;
    cloud.positions.resize(n * 3);
    cloud.quaternions.resize(n * 4);
    cloud.scales.resize(n * 3);
    cloud.opacities.resize(n);
    cloud.dc.resize(n * 3);
    cloud.sh_rest.resize(n * static_cast<std::size_t>(rest_count));

    const uint8_t* base = bytes.data() + header.data_offset;
    for (std::size_t i = 0; i < n; ++i) {
        const uint8_t* rec = base + i * header.stride;
        cloud.positions[i * 3 + 0] = read_f32_le(rec + px->offset);
        cloud.positions[i * 3 + 1] = read_f32_le(rec + py->offset);
        cloud.positions[i * 3 + 2] = read_f32_le(rec + pz->offset);
        for (int c = 0; c < 4; ++c) {
            cloud.quaternions[i * 4 + c] = read_f32_le(rec + prot[c]->offset);
        }
        for (int c = 0; c < 3; ++c) {
            cloud.scales[i * 3 + c] = read_f32_le(rec + psc[c]->offset);
            cloud.dc[i * 3 + c] = read_f32_le(rec + pdc[c]->offset);
        }
        cloud.opacities[i] = read_f32_le(rec + pop->offset);
        float* rest = cloud.sh_rest.data() + i * rest_count;
        for (int k = 0; k < rest_count; ++k) {
            rest[k] = read_f32_le(rec + prest[k]->offset);
        }
    }
    return cloud;
}

std::vector<uint8_t> write_ply(const GaussianCloud& cloud) {
    const int d_sh = cloud.sh_dim();
    std::ostringstream header;
    header << "ply\nformat binary_little_endian 1.0\nelement vertex " << cloud.count
           << "\n";
    for (const char* p : {"x", "y", "z", "nx", "ny", "nz"}) {
        header << "property float " << p << "\n";
    }
    for (int c = 0; c < 3; ++c) header << "property float f_dc_" << c << "\n";
    for (int k = 0; k < d_sh; ++k) header << "property float f_rest_" << k << "\n";
    header << "property float opacity\n";
    for (int c = 0; c < 3; ++c) header << "property float scale_" << c << "\n";
    for (int c = 0; c < 4; ++c) header << "property float rot_" << c << "\n";
    header << "end_header\n";

    std::string head = header.str();
    std::vector<uint8_t> out(head.begin(), head.end());
    out.reserve(out.size() + cloud.count * (17 + d_sh) * 4);
    for (std::size_t i = 0; i < cloud.count; ++i) {
        for (int c = 0; c < 3; ++c) write_f32_le(out, cloud.positions[i * 3 + c]);
        for (int c = 0; c < 3; ++c) write_f32_le(out, 0.0f); // normals by convention
        for (int c = 0; c < 3; ++c) write_f32_le(out, cloud.dc[i * 3 + c]);
        const float* rest = cloud.sh_rest.data() + i * static_cast<std::size_t>(d_sh);
        for (int k = 0; k < d_sh; ++k) write_f32_le(out, rest[k]);
        write_f32_le(out, cloud.opacities[i]);
        for (int c = 0; c < 3; ++c) write_f32_le(out, cloud.scales[i * 3 + c]);
        for (int c = 0; c < 4; ++c) write_f32_le(out, cloud.quaternions[i * 4 + c]);
    }
    return out;
}

GaussianCloud prune_opacity(const GaussianCloud& cloud, double tau) {
    if (!(tau >= 0.0 && tau <= 1.0)) {
        throw RangeError("prune_opacity: tau must be in [0, 1], got " +
                         std::to_string(tau));
    }
    const int d_sh = cloud.sh_dim();
    GaussianCloud out;
    out.sh_degree = cloud.sh_degree;
    for (std::size_t i = 0; i < cloud.count; ++i) {
        if (sigmoid(cloud.opacities[i]) < tau) continue;
        ++out.count;
        for (int c = 0; c < 3; ++c) out.positions.push_back(cloud.positions[i * 3 + c]);
        for (int c = 0; c < 4; ++c) out.quaternions.push_back(cloud.quaternions[i * 4 + c]);
        for (int c = 0; c < 3; ++c) out.scales.push_back(cloud.scales[i * 3 + c]);
        out.opacities.push_back(cloud.opacities[i]);
        for (int c = 0; c < 3; ++c) out.dc.push_back(cloud.dc[i * 3 + c]);
        const float* rest = cloud.sh_rest.data() + i * static_cast<std::size_t>(d_sh);
        out.sh_rest.insert(out.sh_rest.end(), rest, rest + d_sh);
    }
    return out;
}

GaussianCloud reduce_sh_degree(const GaussianCloud& cloud, int l_new) {
    if (l_new < 0 || l_new > cloud.sh_degree) {
        throw RangeError("reduce_sh_degree: target degree " + std::to_string(l_new) +
                         " out of range for degree " + std::to_string(cloud.sh_degree));
    }
    if (l_new == cloud.sh_degree) return cloud;

    const int per_channel_old = (cloud.sh_degree + 1) * (cloud.sh_degree + 1) - 1;
    const int per_channel_new = (l_new + 1) * (l_new + 1) - 1;

    GaussianCloud out = cloud;
    out.sh_degree = l_new;
    out.sh_rest.assign(cloud.count * static_cast<std::size_t>(3 * per_channel_new), 0.0f);
    for (std::size_t i = 0; i < cloud.count; ++i) {
        const float* src = cloud.sh_rest.data() + i * static_cast<std::size_t>(3 * per_channel_old);
        float* dst = out.sh_rest.data() + i * static_cast<std::size_t>(3 * per_channel_new);
        for (int c = 0; c < 3; ++c) {
            for (int k = 0; k < per_channel_new; ++k) {
                dst[c * per_channel_new + k] = src[c * per_channel_old + k];
            }
        }
    }
    return out;
}

CompressedScene compress_cloud(const GaussianCloud& cloud, int bits, uint64_t seed,
                               const CompressOptions& opts) {
    if (bits < 1 || bits > 8) {
        throw RangeError("compress_cloud: bits must be in [1, 8]");
    }
    const int d_sh = cloud.sh_dim();

    CompressedScene scene;
    scene.count = cloud.count;
    scene.sh_dim = static_cast<uint32_t>(d_sh);
    scene.bits = static_cast<uint8_t>(bits);
    scene.seed = seed;

    // Unquantized fields copy verbatim.
    scene.raw.resize(cloud.count * kRawFloats);
    for (std::size_t i = 0; i < cloud.count; ++i) {
        float* rec = scene.raw.data() + i * kRawFloats;
        for (int c = 0; c < 3; ++c) rec[c] = cloud.positions[i * 3 + c];
        for (int c = 0; c < 4; ++c) rec[3 + c] = cloud.quaternions[i * 4 + c];
        for (int c = 0; c < 3; ++c) rec[7 + c] = cloud.scales[i * 3 + c];
        rec[10] = cloud.opacities[i];
        for (int c = 0; c < 3; ++c) rec[11 + c] = cloud.dc[i * 3 + c];
        for (std::size_t j = 0; j < kRawFloats; ++j) {
            if (!std::isfinite(rec[j])) {
                throw DataError("compress_cloud: non-finite field in record " +
                                std::to_string(i));
            }
        }
    }

    if (d_sh == 0) {
        scene.flags |= kSceneFlagShPassthrough;
        scene.codebook.dim = 0;
        scene.codebook.bits = static_cast<uint8_t>(bits);
        scene.codebook.centroids.assign(static_cast<std::size_t>(1) << bits, 0.0);
        scene.norms.assign(cloud.count, 0.0f);
        return scene;
    }

    scene.codebook = solve_lloyd_max(d_sh, bits);
    Rotation rot(d_sh, seed);
    if (opts.embed_rotation) {
        scene.flags |= kSceneFlagRotationEmbedded;
        scene.rotation_matrix.assign(rot.matrix().begin(), rot.matrix().end());
    }

    scene.norms.resize(cloud.count);
    scene.packed.resize(cloud.count * packed_size(d_sh, bits));
    quantize_rows(rot, scene.codebook, cloud.sh_rest.data(), cloud.count,
                  scene.norms.data(), scene.packed.data());
    return scene;
}

GaussianCloud decompress_cloud(const CompressedScene& scene) {
    const int d_sh = static_cast<int>(scene.sh_dim);

    GaussianCloud cloud;
    cloud.count = scene.count;
    cloud.sh_degree = sh_degree_for_dim(d_sh);
    if (scene.raw.size() != scene.count * kRawFloats) {
        throw FormatError("decompress_cloud: raw block size mismatch");
    }

    cloud.positions.resize(cloud.count * 3);
    cloud.quaternions.resize(cloud.count * 4);
    cloud.scales.resize(cloud.count * 3);
    cloud.opacities.resize(cloud.count);
    cloud.dc.resize(cloud.count * 3);
    for (std::size_t i = 0; i < cloud.count; ++i) {
        const float* rec = scene.raw.data() + i * kRawFloats;
        for (int c = 0; c < 3; ++c) cloud.positions[i * 3 + c] = rec[c];
        for (int c = 0; c < 4; ++c) cloud.quaternions[i * 4 + c] = rec[3 + c];
        for (int c = 0; c < 3; ++c) cloud.scales[i * 3 + c] = rec[7 + c];
        cloud.opacities[i] = rec[10];
        for (int c = 0; c < 3; ++c) cloud.dc[i * 3 + c] = rec[11 + c];
    }

    if (scene.flags & kSceneFlagShPassthrough) {
        if (d_sh != 0) throw FormatError("decompress_cloud: passthrough with sh_dim != 0");
        return cloud;
    }
    if (scene.codebook.dim != d_sh || scene.codebook.bits != scene.bits) {
        throw FormatError("decompress_cloud: codebook does not match header");
    }
    if (scene.norms.size() != scene.count ||
        scene.packed.size() != scene.count * packed_size(d_sh, scene.bits)) {
        throw FormatError("decompress_cloud: quant block size mismatch");
    }

    // The embedded matrix is authoritative when present (that is the
    // interchange path); otherwise regenerate from the seed.
    Rotation rot = (scene.flags & kSceneFlagRotationEmbedded)
                       ? Rotation::from_matrix(
                             d_sh, scene.seed,
                             std::vector<double>(scene.rotation_matrix.begin(),
                                                 scene.rotation_matrix.end()))
                       : Rotation(d_sh, scene.seed);

    cloud.sh_rest.resize(cloud.count * static_cast<std::size_t>(d_sh));
    dequantize_rows(rot, scene.codebook, scene.norms.data(), scene.packed.data(),
                    scene.count, cloud.sh_rest.data());
    return cloud;
}

std::vector<uint8_t> serialize_scene(const CompressedScene& scene) {
    ByteWriter w;
    w.put_magic("TQ3D");
    w.put_u16(1);
    w.put_u16(scene.flags);
    w.put_u64(scene.count);
    w.put_u32(scene.sh_dim);
    w.put_u8(scene.bits);
    w.put_u8(0);
    w.put_u8(0);
    w.put_u8(0);
    w.put_u64(scene.seed);
    write_codebook(w, scene.codebook);
    if (scene.flags & kSceneFlagRotationEmbedded) {
        if (scene.rotation_matrix.size() !=
            static_cast<std::size_t>(scene.sh_dim) * scene.sh_dim) {
            throw FormatError("serialize_scene: rotation matrix size mismatch");
        }
        for (float v : scene.rotation_matrix) w.put_f32(v);
    }
    for (float v : scene.raw) w.put_f32(v);
    const std::size_t rec = packed_size(scene.sh_dim, scene.bits);
    for (std::size_t i = 0; i < scene.count; ++i) {
        w.put_f32(scene.norms[i]);
        w.put_bytes(std::span(scene.packed.data() + i * rec, rec));
    }
    return w.take();
}

CompressedScene parse_scene(std::span<const uint8_t> bytes) {
    ByteReader r(bytes);
    r.expect_magic("TQ3D", "scene container");
    uint16_t version = r.get_u16();
    if (version != 1) {
        throw FormatError("scene container: unsupported version " +
                          std::to_string(version));
    }
    CompressedScene scene;
    scene.flags = r.get_u16();
    scene.count = r.get_u64();
    scene.sh_dim = r.get_u32();
    scene.bits = r.get_u8();
    r.get_u8();
    r.get_u8();
    r.get_u8();
    scene.seed = r.get_u64();
    scene.codebook = read_codebook(r);

    const bool passthrough = scene.flags & kSceneFlagShPassthrough;
    if (passthrough != (scene.sh_dim == 0)) {
        throw FormatError("scene container: passthrough flag inconsistent with sh_dim");
    }
    if (scene.codebook.dim != static_cast<int>(passthrough ? 0 : scene.sh_dim) ||
        scene.codebook.bits != scene.bits) {
        throw FormatError("scene container: embedded codebook does not match header");
    }

    if (scene.flags & kSceneFlagRotationEmbedded) {
        const std::size_t n = static_cast<std::size_t>(scene.sh_dim) * scene.sh_dim;
        scene.rotation_matrix.resize(n);
        for (auto& v : scene.rotation_matrix) v = r.get_f32();
    }

    scene.raw.resize(scene.count * kRawFloats);
    for (auto& v : scene.raw) v = r.get_f32();

    const std::size_t rec = packed_size(scene.sh_dim, scene.bits);
    scene.norms.resize(scene.count);
    scene.packed.resize(scene.count * rec);
    for (std::size_t i = 0; i < scene.count; ++i) {
        scene.norms[i] = r.get_f32();
        auto src = r.get_bytes(rec);
        std::copy(src.begin(), src.end(), scene.packed.begin() + i * rec);
    }
    return scene;
}

std::size_t scene_payload_bytes(std::size_t count, int sh_dim, int bits) {
    return count * (60 + packed_size(static_cast<std::size_t>(sh_dim), bits));
}

std::size_t scene_size_bytes(std::size_t count, int sh_dim, int bits,
                             bool embed_rotation) {
    std::size_t header = 32;                                           // fixed fields
    header += 14 + 4 * (static_cast<std::size_t>(1) << bits);          // codebook block
    if (embed_rotation) header += 4 * static_cast<std::size_t>(sh_dim) * sh_dim;
    return header + scene_payload_bytes(count, sh_dim, bits);
}

double exact_ratio(const CompressedScene& scene, std::size_t original_ply_bytes) {
    if (original_ply_bytes == 0) throw RangeError("exact_ratio: original size is zero");
    std::size_t compressed =
        scene_size_bytes(scene.count, static_cast<int>(scene.sh_dim), scene.bits,
                         scene.flags & kSceneFlagRotationEmbedded);
    return static_cast<double>(original_ply_bytes) / static_cast<double>(compressed);
}

double approx_ratio(double rho, int bits, double r, int sh_dim) {
    if (!(rho > 0.0 && rho <= 1.0)) throw RangeError("approx_ratio: rho must be in (0, 1]");
    if (!(r > 0.0 && r <= 1.0)) throw RangeError("approx_ratio: r must be in (0, 1]");
    if (bits < 1 || bits > 8) throw RangeError("approx_ratio: bits must be in [1, 8]");
    if (sh_dim < 1) throw RangeError("approx_ratio: sh_dim must be positive");
    return (1.0 / rho) * 32.0 / (bits * r + 56.0 / sh_dim);
}

} // namespace tq
