#pragma once

#include <Eigen/Core>
#include <functional>
#include <vector>

#include "ptrans/rng.hpp"

namespace ptrans {

using ParamVector = Eigen::VectorXd;

// Closed interval [lower, upper] on which all densities live.
struct Domain {
  double lower = -1.0;
  double upper = 1.0;

  double width() const { return upper - lower; }
  bool contains(double y) const { return y >= lower && y <= upper; }
};

void validate_domain(const Domain& domain);

// Unnormalised conditional model:  p(y | y_prev) proportional to
// exp{energy(theta, y, y_prev)} on `domain`.  IID models simply ignore
// y_prev.  `suff_stats` is set when energy(theta, y, y_prev) =
// theta . suff_stats(y, y_prev); several fitters exploit that structure.
// `hess_theta` may be empty when the energy is linear in theta.
struct ConditionalEnergyModel {
  int dim = 0;
  Domain domain;
  std::function<double(const ParamVector&, double y, double y_prev)> energy;
  std::function<Eigen::VectorXd(const ParamVector&, double y, double y_prev)> grad_theta;
  std::function<Eigen::VectorXd(double y, double y_prev)> suff_stats;
  std::function<Eigen::MatrixXd(const ParamVector&, double y, double y_prev)> hess_theta;
};

// Observed trajectory y_0, y_1, ..., y_n: `initial` is y_0 and `points`
// holds y_1..y_n.  The ancestor of points[t] is points[t-1] (or `initial`
// for t = 0).  IID data uses the same container; `initial` then only
// anchors the conditioning slot of models that ignore it.
struct SampleSet {
  double initial = 0.0;
  std::vector<double> points;

  std::size_t size() const { return points.size(); }
  double ancestor(std::size_t t) const { return t == 0 ? initial : points[t - 1]; }
};

void validate_samples(const SampleSet& samples, const Domain& domain);

// Normalised reference density q(. | y_prev) with exact sampler.  Used by
// the Monte Carlo gradient and the classification estimators.
struct ReferenceDensity {
  Domain domain;
  std::function<double(double y, double y_prev)> log_density;
  std::function<double(double y_prev, Rng&)> sample;
};

ReferenceDensity uniform_reference(const Domain& domain);

// Toy first-order chain on [-1, 1]:
//   energy(theta, y, y_prev) = theta_1 * y - theta_2 * (y - y_prev)^2 / 2.
// theta_2 > 0 pulls y towards its ancestor, theta_1 tilts the marginal.
double toy_energy(const ParamVector& theta, double y, double y_prev);
Eigen::VectorXd toy_grad(double y, double y_prev);

ConditionalEnergyModel toy_model();

// IID variant of the toy model: the ancestor slot is pinned to `anchor`
// so the energy reduces to theta_1 * y - theta_2 * (y - anchor)^2 / 2.
ConditionalEnergyModel toy_iid_model(double anchor = 0.0);

// One-parameter IID exponential tilt on `domain`: energy = theta * y.
ConditionalEnergyModel linear_tilt_model(const Domain& domain = Domain{});

}  // namespace ptrans
