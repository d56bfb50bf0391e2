#include "ptrans/mc.hpp"

#include <cmath>
#include <stdexcept>

namespace ptrans {

McGradient mc_gradient(const ConditionalEnergyModel& model, const ParamVector& theta,
                       double nu, const SampleSet& samples, const ReferenceDensity& q,
                       int m, Rng& rng) {
  if (m < 1) throw std::invalid_argument("need at least one reference draw");
  if (theta.size() != model.dim) {
    throw std::invalid_argument("parameter vector has the wrong dimension");
  }
  validate_samples(samples, model.domain);

  const int d = model.dim;
  const double n = static_cast<double>(samples.size());
  const double anchor = samples.initial;

  Eigen::VectorXd data_grad = Eigen::VectorXd::Zero(d);
  for (double y : samples.points) data_grad += model.grad_theta(theta, y, anchor);

  Eigen::VectorXd imp_grad = Eigen::VectorXd::Zero(d);
  double imp_mass = 0.0;
  for (int j = 0; j < m; ++j) {
    const double x = q.sample(anchor, rng);
    const double w =
        std::exp(model.energy(theta, x, anchor) + nu - q.log_density(x, anchor));
    imp_grad += w * model.grad_theta(theta, x, anchor);
    imp_mass += w;
  }
  const double scale = n / static_cast<double>(m);

  McGradient g;
  g.grad_theta = data_grad - scale * imp_grad;
  g.grad_nu = n - scale * imp_mass;
  g.m_used = m;
  return g;
}

FitResult sga_fit(const ConditionalEnergyModel& model, const SampleSet& samples,
                  const ReferenceDensity& q, const SgaSchedule& schedule, int m_per_step,
                  Rng& rng) {
  if (schedule.steps < 0) throw std::invalid_argument("step count must be non-negative");
  if (!(schedule.step0 > 0.0)) throw std::invalid_argument("step size must be positive");
  validate_samples(samples, model.domain);

  const int d = model.dim;
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(d);
  double nu = 0.0;

  FitResult res;
  if (schedule.steps == 0) {
    res.theta_hat = theta;
    res.nu = nu;
    res.final_theta = theta;
    res.final_nu = nu;
    res.converged = true;
    return res;
  }

  const int tail = schedule.average_tail > 0
                       ? std::min(schedule.average_tail, schedule.steps)
                       : (schedule.steps + 1) / 2;
  Eigen::VectorXd theta_avg = Eigen::VectorXd::Zero(d);
  double nu_avg = 0.0;
  int averaged = 0;

  for (int t = 0; t < schedule.steps; ++t) {
    const McGradient g = mc_gradient(model, theta, nu, samples, q, m_per_step, rng);
    const double step = schedule.step0 / std::pow(1.0 + t, schedule.decay);
    theta += step * g.grad_theta;
    nu += step * g.grad_nu;
    const double norm = std::sqrt(theta.squaredNorm() + nu * nu);
    if (!std::isfinite(norm) || norm > 1e6) {
      res.diagnostic = "iterate diverged; reduce step0";
      res.theta_hat = theta;
      res.nu = nu;
      res.final_theta = theta;
      res.final_nu = nu;
      res.iterations = t + 1;
      return res;
    }
    if (t >= schedule.steps - tail) {
      theta_avg += theta;
      nu_avg += nu;
      ++averaged;
    }
    res.iterations = t + 1;
  }

  res.final_theta = theta;
  res.final_nu = nu;
  res.theta_hat = theta_avg / averaged;
  res.nu = nu_avg / averaged;
  res.converged = true;
  return res;
}

}  // namespace ptrans
