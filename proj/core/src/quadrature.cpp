#include "ptrans/quadrature.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "detail/newton.hpp"

namespace ptrans {

QuadratureRule gauss_legendre(int n, const Domain& domain) {
  if (n < 1) {
    throw std::invalid_argument("quadrature rule needs at least one node");
  }
  validate_domain(domain);

  Eigen::VectorXd x(n), w(n);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    // Newton iteration on P_n from the Chebyshev-like initial guess.
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double pp = 1.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2 * j + 1) * z * p1 - j * p2) / (j + 1);
      }
      pp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / pp;
      z -= dz;
      if (std::abs(dz) <= 1e-15) break;
    }
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * pp * pp);
  }
  if (n % 2 == 1) x[half - 1] = 0.0;

  QuadratureRule rule;
  const double mid = 0.5 * (domain.lower + domain.upper);
  const double hw = 0.5 * domain.width();
  rule.nodes = (mid + hw * x.array()).matrix();
  rule.weights = hw * w;
  return rule;
}

namespace {

void check_rule(const QuadratureRule& rule) {
  if (rule.size() == 0) throw std::invalid_argument("empty quadrature rule");
}

void check_theta(const ConditionalEnergyModel& model, const ParamVector& theta) {
  if (theta.size() != model.dim) {
    throw std::invalid_argument("parameter vector has the wrong dimension");
  }
}

}  // namespace

double log_partition(const ConditionalEnergyModel& model, const ParamVector& theta,
                     double y_prev, const QuadratureRule& rule) {
  check_rule(rule);
  check_theta(model, theta);
  const int nq = rule.size();
  double mx = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd e(nq);
  for (int i = 0; i < nq; ++i) {
    e[i] = model.energy(theta, rule.nodes[i], y_prev);
    if (e[i] > mx) mx = e[i];
  }
  if (!std::isfinite(mx)) {
    throw std::runtime_error("energy not finite on the quadrature grid");
  }
  double s = 0.0;
  for (int i = 0; i < nq; ++i) s += rule.weights[i] * std::exp(e[i] - mx);
  return mx + std::log(s);
}

ConditionalMoments conditional_moments(const ConditionalEnergyModel& model,
                                       const ParamVector& theta, double y_prev,
                                       const QuadratureRule& rule,
                                       bool with_second_order) {
  check_rule(rule);
  check_theta(model, theta);
  const int nq = rule.size();
  const int d = model.dim;

  Eigen::VectorXd e(nq);
  double mx = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < nq; ++i) {
    e[i] = model.energy(theta, rule.nodes[i], y_prev);
    if (e[i] > mx) mx = e[i];
  }
  if (!std::isfinite(mx)) {
    throw std::runtime_error("energy not finite on the quadrature grid");
  }

  double z = 0.0;
  Eigen::VectorXd mass(nq);
  for (int i = 0; i < nq; ++i) {
    mass[i] = rule.weights[i] * std::exp(e[i] - mx);
    z += mass[i];
  }

  ConditionalMoments mom;
  mom.log_z = mx + std::log(z);
  mom.mean_grad = Eigen::VectorXd::Zero(d);
  if (with_second_order) {
    mom.second_moment = Eigen::MatrixXd::Zero(d, d);
    mom.mean_hess = Eigen::MatrixXd::Zero(d, d);
  }
  const bool with_hess = with_second_order && static_cast<bool>(model.hess_theta);
  for (int i = 0; i < nq; ++i) {
    const double p = mass[i] / z;
    const Eigen::VectorXd g = model.grad_theta(theta, rule.nodes[i], y_prev);
    mom.mean_grad += p * g;
    if (with_second_order) {
      mom.second_moment.noalias() += p * (g * g.transpose());
      if (with_hess) mom.mean_hess += p * model.hess_theta(theta, rule.nodes[i], y_prev);
    }
  }
  return mom;
}

namespace {

// Requires either an explicit energy Hessian or a linear-in-theta energy
// (signalled by suff_stats) whenever second-order terms are requested.
void check_hessian_capability(const ConditionalEnergyModel& model) {
  if (!model.hess_theta && !model.suff_stats) {
    throw std::invalid_argument(
        "model provides neither suff_stats nor hess_theta; second-order "
        "quantities are unavailable");
  }
}

// Value, gradient and Hessian of the exact log likelihood in one pass over
// the ancestors.  grad/hess are skipped when null.
double loglik_bundle(const ConditionalEnergyModel& model, const ParamVector& theta,
                     const SampleSet& samples, const QuadratureRule& rule,
                     Eigen::VectorXd* grad, Eigen::MatrixXd* hess) {
  const int d = model.dim;
  const std::size_t n = samples.size();
  double value = 0.0;
  if (grad) grad->setZero(d);
  if (hess) hess->setZero(d, d);
  const bool model_hess = static_cast<bool>(model.hess_theta);
  for (std::size_t t = 0; t < n; ++t) {
    const double y = samples.points[t];
    const double a = samples.ancestor(t);
    value += model.energy(theta, y, a);
    if (!grad && !hess) {
      value -= log_partition(model, theta, a, rule);
      continue;
    }
    const ConditionalMoments mom =
        conditional_moments(model, theta, a, rule, hess != nullptr);
    value -= mom.log_z;
    if (grad) *grad += model.grad_theta(theta, y, a) - mom.mean_grad;
    if (hess) {
      hess->noalias() -=
          mom.second_moment - mom.mean_grad * mom.mean_grad.transpose() + mom.mean_hess;
      if (model_hess) *hess += model.hess_theta(theta, y, a);
    }
  }
  return value;
}

}  // namespace

double exact_loglik(const ConditionalEnergyModel& model, const ParamVector& theta,
                    const SampleSet& samples, const QuadratureRule& rule) {
  check_theta(model, theta);
  validate_samples(samples, model.domain);
  return loglik_bundle(model, theta, samples, rule, nullptr, nullptr);
}

Eigen::VectorXd exact_loglik_grad(const ConditionalEnergyModel& model,
                                  const ParamVector& theta, const SampleSet& samples,
                                  const QuadratureRule& rule) {
  check_theta(model, theta);
  validate_samples(samples, model.domain);
  Eigen::VectorXd grad;
  loglik_bundle(model, theta, samples, rule, &grad, nullptr);
  return grad;
}

Eigen::MatrixXd exact_loglik_hessian(const ConditionalEnergyModel& model,
                                     const ParamVector& theta, const SampleSet& samples,
                                     const QuadratureRule& rule) {
  check_theta(model, theta);
  check_hessian_capability(model);
  validate_samples(samples, model.domain);
  Eigen::MatrixXd hess;
  loglik_bundle(model, theta, samples, rule, nullptr, &hess);
  return hess;
}

FitResult fit_ml(const ConditionalEnergyModel& model, const SampleSet& samples,
                 const QuadratureRule& rule, const NewtonOptions& options) {
  validate_samples(samples, model.domain);
  check_hessian_capability(model);
  auto eval = [&](const Eigen::VectorXd& th, Eigen::VectorXd* g, Eigen::MatrixXd* h) {
    return loglik_bundle(model, th, samples, rule, g, h);
  };
  detail::NewtonState st =
      detail::newton_maximize(eval, Eigen::VectorXd::Zero(model.dim), options);

  FitResult res;
  res.theta_hat = st.x;
  res.objective = st.value;
  res.iterations = st.iterations;
  res.converged = st.converged;
  res.diagnostic = st.diagnostic;

  Eigen::MatrixXd info = -exact_loglik_hessian(model, st.x, samples, rule);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(info);
  if (lu.isInvertible()) {
    res.covariance = lu.inverse();
  } else {
    if (!res.diagnostic.empty()) res.diagnostic += "; ";
    res.diagnostic += "observed information singular; covariance omitted";
  }
  return res;
}

}  // namespace ptrans
