#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tq/codebook.hpp"
#include "tq/error.hpp"

namespace tq {

// Structure-of-arrays view of a 3DGS point cloud. Field semantics follow
// the standard PLY layout: quaternions unnormalized as stored, scales in
// log space, opacities in logit space. sh_rest is row-major N x sh_dim with
// the channel-major coefficient layout (all coefficients of color channel 0,
// then 1, then 2).
struct GaussianCloud {
    std::size_t count = 0;
    int sh_degree = 0;
    std::vector<float> positions;   // N x 3
    std::vector<float> quaternions; // N x 4 (rot_0..rot_3 as stored)
    std::vector<float> scales;      // N x 3
    std::vector<float> opacities;   // N x 1
    std::vector<float> dc;          // N x 3
    std::vector<float> sh_rest;     // N x sh_dim

    int sh_dim() const { return 3 * ((sh_degree + 1) * (sh_degree + 1) - 1); }
};

int sh_dim_for_degree(int degree);
int sh_degree_for_dim(int dim); // throws FormatError when not one of 0/9/24/45

// Binary little-endian PLY with a single leading "vertex" element. Property
// order is taken from the header; normals are parsed and discarded.
GaussianCloud parse_ply(std::span<const uint8_t> bytes);

// Canonical property order x,y,z,nx,ny,nz,f_dc_*,f_rest_*,opacity,scale_*,
// rot_*, normals emitted as zeros.
std::vector<uint8_t> write_ply(const GaussianCloud& cloud);

// Keeps records with sigmoid(opacity) >= tau, preserving order.
GaussianCloud prune_opacity(const GaussianCloud& cloud, double tau);

// Truncates SH rest coefficients to degree l_new (channel-major selection).
GaussianCloud reduce_sh_degree(const GaussianCloud& cloud, int l_new);

struct CompressOptions {
    bool embed_rotation = false;
};

// "TQ3D" container flags.
inline constexpr uint16_t kSceneFlagRotationEmbedded = 1u << 0;
inline constexpr uint16_t kSceneFlagShPassthrough = 1u << 1; // sh_dim == 0

struct CompressedScene {
    uint16_t flags = 0;
    uint64_t count = 0;
    uint32_t sh_dim = 0;
    uint8_t bits = 0;
    uint64_t seed = 0;
    BetaCodebook codebook;               // dim 0 when passthrough
    std::vector<float> rotation_matrix;  // row-major sh_dim^2, empty unless embedded
    std::vector<float> raw;              // N x 14: pos, quat, scale, opacity, dc
    std::vector<float> norms;            // N
    std::vector<uint8_t> packed;         // N x ceil(sh_dim*bits/8)
};

CompressedScene compress_cloud(const GaussianCloud& cloud, int bits, uint64_t seed,
                               const CompressOptions& opts = {});
GaussianCloud decompress_cloud(const CompressedScene& scene);

std::vector<uint8_t> serialize_scene(const CompressedScene& scene);
CompressedScene parse_scene(std::span<const uint8_t> bytes);

// Exact container size in bytes for the given shape (header + payload).
std::size_t scene_size_bytes(std::size_t count, int sh_dim, int bits,
                             bool embed_rotation);
// Payload-only size: N * (60 + ceil(sh_dim*bits/8)).
std::size_t scene_payload_bytes(std::size_t count, int sh_dim, int bits);

// original bytes / container bytes.
double exact_ratio(const CompressedScene& scene, std::size_t original_ply_bytes);

// Closed-form estimate (1/rho) * 32 / (b*r + 56/sh_dim) where rho is the
// retained fraction after pruning and r the SH dimension reduction factor.
double approx_ratio(double rho, int bits, double r, int sh_dim);

} // namespace tq
