#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tq/beta.hpp"
#include "tq/error.hpp"
#include "tq/io.hpp"

namespace tq {

struct LloydOptions {
    double tolerance = 1e-9; // max centroid movement per sweep
    // Plain Lloyd sweeps relax the widest codebooks slowly (roughly
    // 1 - O(1/levels^2) per sweep); 8-bit books need on the order of 1e5
    // sweeps to reach the tolerance.
    int max_iterations = 500000;
    // When set, receives the objective value after every sweep (it is
    // nonincreasing; useful for diagnostics and tests).
    std::vector<double>* objective_trace = nullptr;
};

// Optimal (Lloyd-Max) scalar codebook for the hypersphere coordinate
// distribution at ambient dimension `dim`. Centroids are strictly
// increasing, symmetric about 0, and depend only on (dim, bits) -- nothing
// is learned from data.
struct BetaCodebook {
    int dim = 0;
    int bits = 0;
    std::vector<double> centroids;
    // Expected squared reconstruction error of a full unit vector, i.e.
    // dim times the per-coordinate objective. Directly comparable to a
    // measured unit-sphere MSE.
    double residual_distortion = 0.0;

    int levels() const { return 1 << bits; }
};

BetaCodebook solve_lloyd_max(int dim, int bits, const LloydOptions& opts = {});

// Recomputes the distortion integral from the centroids alone (same scaling
// as residual_distortion).
double expected_distortion(const BetaCodebook& cb);

// Index of the nearest centroid; midpoint ties break toward the lower
// index, out-of-range values clamp to the extreme centroids.
int quantize_scalar(const BetaCodebook& cb, double y);

// "TQCB" block: magic, version u16=1, dim u32, bits u8, 3 reserved bytes,
// then 2^bits little-endian f32 centroids ascending.
void write_codebook(ByteWriter& w, const BetaCodebook& cb);
std::vector<uint8_t> serialize_codebook(const BetaCodebook& cb);

// dim == 0 marks a placeholder block (scene containers with no SH payload);
// it is accepted here and validated by the container parser.
BetaCodebook read_codebook(ByteReader& r);
BetaCodebook parse_codebook(std::span<const uint8_t> bytes);

} // namespace tq
