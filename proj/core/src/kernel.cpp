#include "ptrans/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace ptrans {

double Kernel::operator()(double u, double v) const {
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) {
    throw std::invalid_argument("kernel bandwidth must be positive and finite");
  }
  const double d = (u - v) / bandwidth;
  return std::exp(-0.5 * d * d);
}

double KernelExpansion::operator()(double u) const {
  if (static_cast<std::size_t>(alpha.size()) != centers.size()) {
    throw std::invalid_argument("kernel expansion has mismatched centers and weights");
  }
  double s = 0.0;
  for (std::size_t j = 0; j < centers.size(); ++j) s += alpha[j] * kernel(u, centers[j]);
  return s;
}

double KernelExpansion::squared_norm() const {
  if (static_cast<std::size_t>(alpha.size()) != centers.size()) {
    throw std::invalid_argument("kernel expansion has mismatched centers and weights");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < centers.size(); ++i) {
    for (std::size_t j = 0; j < centers.size(); ++j) {
      s += alpha[i] * alpha[j] * kernel(centers[i], centers[j]);
    }
  }
  return s;
}

Eigen::MatrixXd gram(const Kernel& kernel, const std::vector<double>& points) {
  const int n = static_cast<int>(points.size());
  Eigen::MatrixXd k(n, n);
  for (int i = 0; i < n; ++i) {
    k(i, i) = kernel(points[i], points[i]);
    for (int j = 0; j < i; ++j) {
      k(i, j) = k(j, i) = kernel(points[i], points[j]);
    }
  }
  return k;
}

double median_bandwidth(const std::vector<double>& values) {
  if (values.size() < 2) {
    throw std::invalid_argument("need at least two values for the bandwidth");
  }
  // Deterministic thinning keeps the pair count bounded on large inputs.
  std::vector<double> sub;
  if (values.size() > 1000) {
    const std::size_t stride = (values.size() + 999) / 1000;
    for (std::size_t i = 0; i < values.size(); i += stride) sub.push_back(values[i]);
  } else {
    sub = values;
  }
  const std::size_t n = sub.size();
  std::vector<double> diffs;
  diffs.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      diffs.push_back(std::abs(sub[i] - sub[j]));
    }
  }
  auto median_of = [](std::vector<double>& v) {
    const std::size_t m = v.size();
    std::nth_element(v.begin(), v.begin() + m / 2, v.end());
    double hi = v[m / 2];
    if (m % 2 == 1) return hi;
    std::nth_element(v.begin(), v.begin() + m / 2 - 1, v.begin() + m / 2);
    return 0.5 * (v[m / 2 - 1] + hi);
  };
  double med = median_of(diffs);
  if (med <= 0.0) {
    // heavily duplicated input: fall back to the median of the positive gaps
    std::vector<double> pos;
    for (double d : diffs) {
      if (d > 0.0) pos.push_back(d);
    }
    if (pos.empty()) {
      throw std::invalid_argument("need at least two distinct values for the bandwidth");
    }
    med = median_of(pos);
  }
  return med;
}

Eigen::VectorXd NystromBasis::features(double u) const {
  const int r = rank();
  Eigen::VectorXd k(r);
  for (int j = 0; j < r; ++j) k[j] = kernel(centers[j], u);
  chol.triangularView<Eigen::Lower>().solveInPlace(k);
  return k;
}

Eigen::MatrixXd NystromBasis::feature_matrix(const std::vector<double>& points) const {
  const int r = rank();
  Eigen::MatrixXd phi(points.size(), r);
  for (std::size_t i = 0; i < points.size(); ++i) {
    phi.row(i) = features(points[i]).transpose();
  }
  return phi;
}

KernelExpansion NystromBasis::expansion(const Eigen::VectorXd& gamma) const {
  if (gamma.size() != rank()) {
    throw std::invalid_argument("coefficient vector does not match the basis rank");
  }
  KernelExpansion chi;
  chi.kernel = kernel;
  chi.centers = centers;
  chi.alpha = chol.transpose().triangularView<Eigen::Upper>().solve(gamma);
  return chi;
}

NystromBasis pivoted_basis(const Kernel& kernel, const std::vector<double>& points,
                           double tol_rel, int max_rank) {
  const int n = static_cast<int>(points.size());
  if (n == 0) throw std::invalid_argument("no points for the kernel basis");
  if (max_rank <= 0) max_rank = std::min(n, 500);
  max_rank = std::min(max_rank, n);

  Eigen::VectorXd resid(n);
  for (int i = 0; i < n; ++i) resid[i] = kernel(points[i], points[i]);
  const double trace = resid.sum();
  const double tol = tol_rel * trace;

  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, max_rank);
  std::vector<int> pivots;
  std::vector<char> used(n, 0);
  double remaining = trace;

  while (static_cast<int>(pivots.size()) < max_rank && remaining > tol) {
    int best = -1;
    double best_val = 0.0;
    for (int i = 0; i < n; ++i) {
      if (!used[i] && resid[i] > best_val) {
        best = i;
        best_val = resid[i];
      }
    }
    if (best < 0 || best_val <= 0.0) break;

    const int r = static_cast<int>(pivots.size());
    const double piv = std::sqrt(best_val);
    for (int i = 0; i < n; ++i) {
      if (used[i]) continue;
      double v = kernel(points[i], points[best]);
      if (r > 0) v -= l.row(i).head(r).dot(l.row(best).head(r));
      l(i, r) = v / piv;
    }
    l(best, r) = piv;
    used[best] = 1;
    pivots.push_back(best);

    remaining = 0.0;
    for (int i = 0; i < n; ++i) {
      if (used[i]) continue;
      resid[i] -= l(i, r) * l(i, r);
      if (resid[i] < 0.0) resid[i] = 0.0;
      remaining += resid[i];
    }
  }

  // Rows of l at the pivots form the Cholesky factor of the pivot Gram block.
  const int r = static_cast<int>(pivots.size());
  NystromBasis basis;
  basis.kernel = kernel;
  basis.centers.reserve(r);
  basis.chol = Eigen::MatrixXd::Zero(r, r);
  for (int s = 0; s < r; ++s) {
    basis.centers.push_back(points[pivots[s]]);
    basis.chol.row(s).head(s + 1) = l.row(pivots[s]).head(s + 1);
  }
  return basis;
}

}  // namespace ptrans
