#pragma once

#include <Eigen/Core>
#include <vector>

namespace ptrans {

// Gaussian kernel k(u, v) = exp(-(u - v)^2 / (2 bandwidth^2)).
struct Kernel {
  double bandwidth = 1.0;

  double operator()(double u, double v) const;
};

// Finite expansion chi(u) = sum_j alpha_j k(u, centers_j).
struct KernelExpansion {
  Kernel kernel;
  std::vector<double> centers;
  Eigen::VectorXd alpha;

  double operator()(double u) const;
  // alpha^T K alpha over the expansion's own centers.
  double squared_norm() const;
};

Eigen::MatrixXd gram(const Kernel& kernel, const std::vector<double>& points);

// Median of all pairwise absolute differences; the usual bandwidth
// heuristic.  Requires at least two distinct values.
double median_bandwidth(const std::vector<double>& values);

// Low-rank basis for the span of {k(., p) : p in points}, built by pivoted
// Cholesky on the Gram matrix.  Pivots are added until the trace residual
// falls below tol_rel * trace(K) (or max_rank is hit), so for smooth
// kernels the rank is far below the number of points while the captured
// span matches the full expansion to the tolerance.
//
// Functions are parametrised in whitened coordinates gamma:
//   chi(u) = features(u)^T gamma,   |chi|_H^2 = |gamma|^2,
// with features(u) = R^{-1} [k(c_j, u)]_j and R R^T the Cholesky factor of
// the pivot Gram block.
struct NystromBasis {
  Kernel kernel;
  std::vector<double> centers;  // pivot subset of the input points
  Eigen::MatrixXd chol;         // lower-triangular R, rank x rank

  int rank() const { return static_cast<int>(centers.size()); }
  Eigen::VectorXd features(double u) const;
  // One row per input point, rank columns.
  Eigen::MatrixXd feature_matrix(const std::vector<double>& points) const;
  // Equivalent explicit expansion: alpha = R^{-T} gamma.
  KernelExpansion expansion(const Eigen::VectorXd& gamma) const;
};

NystromBasis pivoted_basis(const Kernel& kernel, const std::vector<double>& points,
                           double tol_rel = 1e-14, int max_rank = 0);

}  // namespace ptrans
