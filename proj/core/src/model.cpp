#include "ptrans/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace ptrans {

void validate_domain(const Domain& domain) {
  if (!std::isfinite(domain.lower) || !std::isfinite(domain.upper) ||
      !(domain.lower < domain.upper)) {
    throw std::invalid_argument("domain must be a finite interval with lower < upper");
  }
}

void validate_samples(const SampleSet& samples, const Domain& domain) {
  validate_domain(domain);
  if (samples.points.empty()) {
    throw std::invalid_argument("sample set is empty");
  }
  if (!domain.contains(samples.initial)) {
    throw std::domain_error("initial point outside the domain");
  }
  for (std::size_t t = 0; t < samples.points.size(); ++t) {
    if (!std::isfinite(samples.points[t]) || !domain.contains(samples.points[t])) {
      throw std::domain_error("sample point " + std::to_string(t + 1) +
                              " outside the domain");
    }
  }
}

namespace {

void require_toy_args(const ParamVector& theta, double y, double y_prev) {
  if (theta.size() != 2) {
    throw std::invalid_argument("toy model expects two parameters");
  }
  if (y < -1.0 || y > 1.0 || y_prev < -1.0 || y_prev > 1.0) {
    throw std::domain_error("toy model is defined on [-1, 1]");
  }
}

}  // namespace

double toy_energy(const ParamVector& theta, double y, double y_prev) {
  require_toy_args(theta, y, y_prev);
  const double d = y - y_prev;
  return theta[0] * y - 0.5 * theta[1] * d * d;
}

Eigen::VectorXd toy_grad(double y, double y_prev) {
  const double d = y - y_prev;
  Eigen::VectorXd g(2);
  g << y, -0.5 * d * d;
  return g;
}

ConditionalEnergyModel toy_model() {
  ConditionalEnergyModel model;
  model.dim = 2;
  model.domain = Domain{-1.0, 1.0};
  model.energy = [](const ParamVector& theta, double y, double y_prev) {
    return toy_energy(theta, y, y_prev);
  };
  model.grad_theta = [](const ParamVector&, double y, double y_prev) {
    return toy_grad(y, y_prev);
  };
  model.suff_stats = [](double y, double y_prev) { return toy_grad(y, y_prev); };
  return model;
}

ConditionalEnergyModel toy_iid_model(double anchor) {
  if (anchor < -1.0 || anchor > 1.0) {
    throw std::domain_error("anchor outside [-1, 1]");
  }
  ConditionalEnergyModel model;
  model.dim = 2;
  model.domain = Domain{-1.0, 1.0};
  model.energy = [anchor](const ParamVector& theta, double y, double) {
    return toy_energy(theta, y, anchor);
  };
  model.grad_theta = [anchor](const ParamVector&, double y, double) {
    return toy_grad(y, anchor);
  };
  model.suff_stats = [anchor](double y, double) { return toy_grad(y, anchor); };
  return model;
}

ConditionalEnergyModel linear_tilt_model(const Domain& domain) {
  validate_domain(domain);
  ConditionalEnergyModel model;
  model.dim = 1;
  model.domain = domain;
  model.energy = [domain](const ParamVector& theta, double y, double) {
    if (theta.size() != 1) {
      throw std::invalid_argument("linear tilt model expects one parameter");
    }
    if (!domain.contains(y)) {
      throw std::domain_error("point outside the domain");
    }
    return theta[0] * y;
  };
  model.grad_theta = [](const ParamVector&, double y, double) {
    Eigen::VectorXd g(1);
    g << y;
    return g;
  };
  model.suff_stats = [](double y, double) {
    Eigen::VectorXd s(1);
    s << y;
    return s;
  };
  return model;
}

ReferenceDensity uniform_reference(const Domain& domain) {
  validate_domain(domain);
  ReferenceDensity q;
  q.domain = domain;
  const double log_dens = -std::log(domain.width());
  q.log_density = [domain, log_dens](double y, double) {
    if (!domain.contains(y)) {
      throw std::domain_error("reference density evaluated outside the domain");
    }
    return log_dens;
  };
  q.sample = [domain](double, Rng& rng) {
    return uniform(rng, domain.lower, domain.upper);
  };
  return q;
}

}  // namespace ptrans
