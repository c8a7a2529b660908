#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "quasiroute/common.hpp"

namespace quasiroute {

/// Dense n x n quasimetric cost matrix: zero diagonal, strictly positive
/// off-diagonal entries, triangle inequality within kGeomTol. The symmetric
/// flag is recorded at construction and means exact entrywise symmetry.
struct DistanceMatrix {
    int n = 0;
    std::vector<double> d;  // row-major, n*n
    bool is_symmetric = false;

    DistanceMatrix() = default;
    DistanceMatrix(int n_, bool symmetric)
        : n(n_), d(static_cast<std::size_t>(n_) * n_, 0.0), is_symmetric(symmetric) {}

    double& at(int i, int j) { return d[static_cast<std::size_t>(i) * n + j]; }
    double at(int i, int j) const { return d[static_cast<std::size_t>(i) * n + j]; }
    double operator()(int i, int j) const { return at(i, j); }
};

/// 2D points in the unit square; present only for symmetric instances.
struct Coordinates {
    std::vector<std::pair<double, double>> points;
};

/// Violations found by validate(); empty means the matrix is a valid quasimetric.
std::vector<std::string> validate_quasimetric(const DistanceMatrix& d, double tol = kGeomTol);

/// Checks validate_quasimetric plus exact symmetry.
std::vector<std::string> validate_metric(const DistanceMatrix& d, double tol = kGeomTol);

/// Uniform coordinates on [0,1]^2 with Euclidean distances. Coincident points
/// are redrawn so off-diagonal entries stay strictly positive.
std::pair<Coordinates, DistanceMatrix> gen_euclidean(int n, std::uint64_t seed);

/// Distance matrix from explicit coordinates (no resampling).
DistanceMatrix euclidean_matrix(const Coordinates& coords);

/// Directed costs: off-diagonal entries drawn uniformly from {1, ..., 10^6 - 1}
/// (zero draws are rejected), min-plus closure to a fixpoint, then divided by
/// `scaler`. Result is a valid quasimetric and generally asymmetric.
DistanceMatrix gen_asymmetric(int n, std::uint64_t seed, double scaler = 1e6);

/// All-pairs shortest-path closure of a non-negative zero-diagonal matrix.
/// Idempotent and entrywise dominated by the input.
DistanceMatrix min_plus_closure(const DistanceMatrix& raw);

/// D_sym(i,j) = max(d(i,j), d(j,i)); the worst-case separation metric.
DistanceMatrix symmetrize_max(const DistanceMatrix& d);

/// d_fps(i,j) = (d(i,j) + d(j,i)) / 2; satisfies d_fps <= D_sym <= 2 d_fps.
DistanceMatrix symmetrize_mean(const DistanceMatrix& d);

/// Z-score over all n^2 entries (population std). Degenerate std (< 1e-12)
/// yields the all-zeros matrix.
Mat zscore_normalize(const DistanceMatrix& d);

/// Max entry of a metric/quasimetric matrix.
double diameter(const DistanceMatrix& d);

}  // namespace quasiroute
