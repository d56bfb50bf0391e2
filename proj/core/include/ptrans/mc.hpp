#pragma once

#include <Eigen/Core>

#include "ptrans/fit_result.hpp"
#include "ptrans/model.hpp"
#include "ptrans/rng.hpp"

namespace ptrans {

struct McGradient {
  Eigen::VectorXd grad_theta;
  double grad_nu = 0.0;
  int m_used = 0;
};

// Unbiased Monte Carlo estimate of the (theta, nu) gradient of the
// IID Poisson objective.  The integral term is replaced by an importance
// average over m draws from the reference density q:
//   integral h(y) exp{f(y) + nu} dy  ~  (1/m) sum_j h(x_j) exp{f(x_j) + nu} / q(x_j).
// Unbiasedness holds for every m >= 1; the conditioning slot is pinned to
// samples.initial, as in m_objective.
McGradient mc_gradient(const ConditionalEnergyModel& model, const ParamVector& theta,
                       double nu, const SampleSet& samples, const ReferenceDensity& q,
                       int m, Rng& rng);

struct SgaSchedule {
  int steps = 10000;
  double step0 = 1e-3;      // step_t = step0 / (1 + t)^decay
  double decay = 0.7;
  int average_tail = 0;     // 0: average the second half of the trajectory
};

// Stochastic gradient ascent on (theta, nu) driven by mc_gradient, with
// Polyak-Ruppert trailing average as the reported estimate.  nu rides
// along as just another coordinate.  objective is left NaN (never
// evaluated); covariance is not produced.
FitResult sga_fit(const ConditionalEnergyModel& model, const SampleSet& samples,
                  const ReferenceDensity& q, const SgaSchedule& schedule, int m_per_step,
                  Rng& rng);

}  // namespace ptrans
