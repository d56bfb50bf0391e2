#pragma once

#include <Eigen/Core>

#include "ptrans/fit_result.hpp"
#include "ptrans/model.hpp"

namespace ptrans {

// Nodes and weights of a fixed rule on a bounded interval.  Weights are
// positive and sum to the interval width.
struct QuadratureRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;

  int size() const { return static_cast<int>(nodes.size()); }
};

// Gauss-Legendre rule with n nodes mapped onto `domain`.  Exact for
// polynomials up to degree 2n - 1; nodes stay in the open interval.
QuadratureRule gauss_legendre(int n, const Domain& domain);

inline constexpr int kDefaultQuadratureNodes = 401;

// log integral over the domain of exp{energy(theta, y, y_prev)} dy,
// evaluated with max-subtraction so large energies do not overflow.
double log_partition(const ConditionalEnergyModel& model, const ParamVector& theta,
                     double y_prev, const QuadratureRule& rule);

// Moments of the normalised conditional density at one ancestor.
// second_moment is E[g g^T] with g = grad_theta; mean_hess is E[hess_theta]
// and stays zero for models linear in theta.
struct ConditionalMoments {
  double log_z = 0.0;
  Eigen::VectorXd mean_grad;
  Eigen::MatrixXd second_moment;
  Eigen::MatrixXd mean_hess;
};

ConditionalMoments conditional_moments(const ConditionalEnergyModel& model,
                                       const ParamVector& theta, double y_prev,
                                       const QuadratureRule& rule,
                                       bool with_second_order = false);

// Exact (to quadrature accuracy) log likelihood of the trajectory:
// sum_t [energy(theta, y_t, y_{t-1}) - log_partition(theta, y_{t-1})].
double exact_loglik(const ConditionalEnergyModel& model, const ParamVector& theta,
                    const SampleSet& samples, const QuadratureRule& rule);

Eigen::VectorXd exact_loglik_grad(const ConditionalEnergyModel& model,
                                  const ParamVector& theta, const SampleSet& samples,
                                  const QuadratureRule& rule);

Eigen::MatrixXd exact_loglik_hessian(const ConditionalEnergyModel& model,
                                     const ParamVector& theta, const SampleSet& samples,
                                     const QuadratureRule& rule);

// Maximum likelihood by Newton ascent with Armijo backtracking, started at
// theta = 0.  Serves as the gold-standard fit the other estimators are
// compared against.  covariance is the inverse observed information when
// that matrix is invertible.
FitResult fit_ml(const ConditionalEnergyModel& model, const SampleSet& samples,
                 const QuadratureRule& rule, const NewtonOptions& options = {});

}  // namespace ptrans
