#pragma once

// Test-side reference implementations, independent of the library's solver
// code: Lloyd iteration over a dense grid of midpoint density values with
// prefix-sum interval integrals. Shared math, separately written.

#include <cstddef>
#include <vector>

namespace oracle {

struct GridQuantizer {
    std::vector<double> centroids;
    double distortion = 0.0; // per-coordinate expected squared error
};

// Density sampled at the midpoints of `density.size()` uniform cells over
// [lo, hi]; cells are treated as piecewise-constant, boundaries land inside
// cells and are integrated exactly.
struct DensityGrid {
    double lo = 0.0;
    double hi = 0.0;
    std::vector<double> density;
};

GridQuantizer lloyd_grid(const DensityGrid& grid, int levels, double tol = 1e-12,
                         int max_iter = 2000000);

// Hypersphere coordinate law at ambient dimension d on 2^17 cells over
// [-1, 1]. Distortion is scaled by d (full-vector units).
GridQuantizer beta_lloyd(int dim, int bits);

// Unit-variance Gaussian on [-10, 10], same resolution.
GridQuantizer gaussian_lloyd(int bits);

} // namespace oracle
