#include "ptrans/poisson.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "detail/newton.hpp"

namespace ptrans {

double nu_star(const ConditionalEnergyModel& model, const ParamVector& theta,
               double y_prev, const QuadratureRule& rule) {
  return -log_partition(model, theta, y_prev, rule);
}

namespace {

std::vector<double> ancestor_list(const SampleSet& samples) {
  std::vector<double> a(samples.size());
  for (std::size_t t = 0; t < samples.size(); ++t) a[t] = samples.ancestor(t);
  return a;
}

// Value / gradient / Hessian of M(theta, nu) with a single log-mass.  The
// stacked parameter is [theta; nu].  All integral terms reduce to the
// normalised conditional moments times mass = n * exp(nu + log_z).
double m_bundle(const ConditionalEnergyModel& model, const ParamVector& theta, double nu,
                const SampleSet& samples, const QuadratureRule& rule,
                Eigen::VectorXd* grad, Eigen::MatrixXd* hess) {
  const int d = model.dim;
  const double n = static_cast<double>(samples.size());
  const double anchor = samples.initial;

  double data = n * nu;
  for (double y : samples.points) data += model.energy(theta, y, anchor);

  if (!grad && !hess) {
    const double lz = log_partition(model, theta, anchor, rule);
    return data - n * std::exp(nu + lz);
  }

  const ConditionalMoments mom =
      conditional_moments(model, theta, anchor, rule, hess != nullptr);
  const double mass = n * std::exp(nu + mom.log_z);

  if (grad) {
    grad->setZero(d + 1);
    Eigen::VectorXd data_grad = Eigen::VectorXd::Zero(d);
    for (double y : samples.points) data_grad += model.grad_theta(theta, y, anchor);
    grad->head(d) = data_grad - mass * mom.mean_grad;
    (*grad)[d] = n - mass;
  }
  if (hess) {
    hess->setZero(d + 1, d + 1);
    hess->topLeftCorner(d, d) = -mass * (mom.second_moment + mom.mean_hess);
    if (model.hess_theta) {
      for (double y : samples.points) {
        hess->topLeftCorner(d, d) += model.hess_theta(theta, y, anchor);
      }
    }
    hess->topRightCorner(d, 1) = -mass * mom.mean_grad;
    hess->bottomLeftCorner(1, d) = hess->topRightCorner(d, 1).transpose();
    (*hess)(d, d) = -mass;
  }
  return data - mass;
}

}  // namespace

double m_objective(const ConditionalEnergyModel& model, const ParamVector& theta,
                   double nu, const SampleSet& samples, const QuadratureRule& rule) {
  validate_samples(samples, model.domain);
  return m_bundle(model, theta, nu, samples, rule, nullptr, nullptr);
}

Eigen::VectorXd m_grad(const ConditionalEnergyModel& model, const ParamVector& theta,
                       double nu, const SampleSet& samples, const QuadratureRule& rule) {
  validate_samples(samples, model.domain);
  Eigen::VectorXd grad;
  m_bundle(model, theta, nu, samples, rule, &grad, nullptr);
  return grad;
}

Eigen::MatrixXd m_hessian(const ConditionalEnergyModel& model, const ParamVector& theta,
                          double nu, const SampleSet& samples,
                          const QuadratureRule& rule) {
  validate_samples(samples, model.domain);
  Eigen::MatrixXd hess;
  m_bundle(model, theta, nu, samples, rule, nullptr, &hess);
  return hess;
}

FitResult fit_poisson_joint(const ConditionalEnergyModel& model, const SampleSet& samples,
                            const QuadratureRule& rule, const NewtonOptions& options) {
  validate_samples(samples, model.domain);
  const int d = model.dim;
  auto eval = [&](const Eigen::VectorXd& x, Eigen::VectorXd* g, Eigen::MatrixXd* h) {
    return m_bundle(model, x.head(d), x[d], samples, rule, g, h);
  };
  detail::NewtonState st =
      detail::newton_maximize(eval, Eigen::VectorXd::Zero(d + 1), options);

  FitResult res;
  res.theta_hat = st.x.head(d);
  res.nu = st.x[d];
  res.objective = st.value;
  res.iterations = st.iterations;
  res.converged = st.converged;
  res.diagnostic = st.diagnostic;
  Eigen::MatrixXd joint;
  m_bundle(model, res.theta_hat, st.x[d], samples, rule, nullptr, &joint);
  try {
    res.covariance = confidence_from_m(joint);
  } catch (const std::exception&) {
    if (!res.diagnostic.empty()) res.diagnostic += "; ";
    res.diagnostic += "joint Hessian singular; covariance omitted";
  }
  return res;
}

double m_seq_objective(const ConditionalEnergyModel& model, const ParamVector& theta,
                       const Eigen::VectorXd& nu_vec, const SampleSet& samples,
                       const QuadratureRule& rule) {
  validate_samples(samples, model.domain);
  const std::size_t n = samples.size();
  if (static_cast<std::size_t>(nu_vec.size()) != n) {
    throw std::invalid_argument("nu vector must have one entry per observation");
  }
  double value = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const double a = samples.ancestor(t);
    const double lz = log_partition(model, theta, a, rule);
    value += model.energy(theta, samples.points[t], a) + nu_vec[t] -
             std::exp(nu_vec[t] + lz);
  }
  return value;
}

Eigen::VectorXd m_seq_grad(const ConditionalEnergyModel& model, const ParamVector& theta,
                           const Eigen::VectorXd& nu_vec, const SampleSet& samples,
                           const QuadratureRule& rule) {
  validate_samples(samples, model.domain);
  const std::size_t n = samples.size();
  if (static_cast<std::size_t>(nu_vec.size()) != n) {
    throw std::invalid_argument("nu vector must have one entry per observation");
  }
  const int d = model.dim;
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(d + static_cast<int>(n));
  for (std::size_t t = 0; t < n; ++t) {
    const double a = samples.ancestor(t);
    const ConditionalMoments mom = conditional_moments(model, theta, a, rule, false);
    const double mass = std::exp(nu_vec[t] + mom.log_z);
    grad.head(d) += model.grad_theta(theta, samples.points[t], a) - mass * mom.mean_grad;
    grad[d + static_cast<int>(t)] = 1.0 - mass;
  }
  return grad;
}

namespace {

void check_chi_centers(const KernelExpansion& chi, const std::vector<double>& ancestors) {
  if (chi.centers.size() != ancestors.size() ||
      !std::equal(chi.centers.begin(), chi.centers.end(), ancestors.begin())) {
    throw std::invalid_argument("chi centers must be the ancestors of the sample set");
  }
}

}  // namespace

double m_chi_objective(const ConditionalEnergyModel& model, const ParamVector& theta,
                       const KernelExpansion& chi, const PenaltyConfig& penalty,
                       const SampleSet& samples, const QuadratureRule& rule) {
  validate_samples(samples, model.domain);
  const std::vector<double> ancestors = ancestor_list(samples);
  check_chi_centers(chi, ancestors);
  if (penalty.lambda_pen < 0.0) throw std::invalid_argument("penalty must be >= 0");

  double value = 0.0;
  for (std::size_t t = 0; t < samples.size(); ++t) {
    const double a = ancestors[t];
    const double v = chi(a);
    const double lz = log_partition(model, theta, a, rule);
    value += model.energy(theta, samples.points[t], a) + v - std::exp(v + lz);
  }
  return value - penalty.lambda_pen * chi.squared_norm();
}

Eigen::VectorXd m_chi_grad(const ConditionalEnergyModel& model, const ParamVector& theta,
                           const KernelExpansion& chi, const PenaltyConfig& penalty,
                           const SampleSet& samples, const QuadratureRule& rule) {
  validate_samples(samples, model.domain);
  const std::vector<double> ancestors = ancestor_list(samples);
  check_chi_centers(chi, ancestors);
  if (penalty.lambda_pen < 0.0) throw std::invalid_argument("penalty must be >= 0");

  const int d = model.dim;
  const int n = static_cast<int>(samples.size());
  const Eigen::MatrixXd k = gram(chi.kernel, ancestors);
  const Eigen::VectorXd chi_values = k * chi.alpha;

  Eigen::VectorXd grad = Eigen::VectorXd::Zero(d + n);
  Eigen::VectorXd one_minus_mass(n);
  for (int t = 0; t < n; ++t) {
    const double a = ancestors[t];
    const ConditionalMoments mom = conditional_moments(model, theta, a, rule, false);
    const double mass = std::exp(chi_values[t] + mom.log_z);
    grad.head(d) += model.grad_theta(theta, samples.points[t], a) - mass * mom.mean_grad;
    one_minus_mass[t] = 1.0 - mass;
  }
  grad.tail(n) = k * one_minus_mass - 2.0 * penalty.lambda_pen * (k * chi.alpha);
  return grad;
}

namespace {

struct ChiProblem {
  const ConditionalEnergyModel* model;
  const SampleSet* samples;
  const QuadratureRule* rule;
  const NystromBasis* basis;
  Eigen::MatrixXd phi;  // n x rank feature rows at the ancestors
  std::vector<double> ancestors;
  double lambda = 0.0;

  int dim() const { return model->dim + basis->rank(); }

  // x = [theta; gamma]; returns the penalised objective.
  double eval(const Eigen::VectorXd& x, Eigen::VectorXd* grad,
              Eigen::MatrixXd* hess) const {
    const int d = model->dim;
    const int r = basis->rank();
    const int n = static_cast<int>(samples->size());
    const Eigen::VectorXd theta = x.head(d);
    const Eigen::VectorXd gamma = x.tail(r);
    const Eigen::VectorXd values = phi * gamma;

    double value = -lambda * gamma.squaredNorm();
    if (grad) grad->setZero(d + r);
    if (hess) hess->setZero(d + r, d + r);

    Eigen::VectorXd resid(n);          // 1 - mass_t
    Eigen::VectorXd mass_vec(n);
    for (int t = 0; t < n; ++t) {
      const double a = ancestors[static_cast<std::size_t>(t)];
      const double y = samples->points[static_cast<std::size_t>(t)];
      if (!grad && !hess) {
        const double lz = log_partition(*model, theta, a, *rule);
        value += model->energy(theta, y, a) + values[t] - std::exp(values[t] + lz);
        continue;
      }
      const ConditionalMoments mom =
          conditional_moments(*model, theta, a, *rule, hess != nullptr);
      const double mass = std::exp(values[t] + mom.log_z);
      mass_vec[t] = mass;
      resid[t] = 1.0 - mass;
      value += model->energy(theta, y, a) + values[t] - mass;
      if (grad) {
        grad->head(d) += model->grad_theta(theta, y, a) - mass * mom.mean_grad;
      }
      if (hess) {
        hess->topLeftCorner(d, d) -= mass * (mom.second_moment + mom.mean_hess);
        if (model->hess_theta) {
          hess->topLeftCorner(d, d) += model->hess_theta(theta, y, a);
        }
        hess->block(0, d, d, r).noalias() -=
            (mass * mom.mean_grad) * phi.row(t);
      }
    }
    if (grad) {
      grad->tail(r) = phi.transpose() * resid - 2.0 * lambda * gamma;
    }
    if (hess) {
      hess->block(d, d, r, r).noalias() =
          -phi.transpose() * mass_vec.asDiagonal() * phi;
      hess->block(d, d, r, r).diagonal().array() -= 2.0 * lambda;
      hess->block(d, 0, r, d) = hess->block(0, d, d, r).transpose();
    }
    return value;
  }
};

ChiProblem make_chi_problem(const ConditionalEnergyModel& model, const SampleSet& samples,
                            const QuadratureRule& rule, const Kernel& kernel,
                            const NystromBasis& basis, double lambda) {
  ChiProblem prob;
  prob.model = &model;
  prob.samples = &samples;
  prob.rule = &rule;
  prob.basis = &basis;
  prob.ancestors = ancestor_list(samples);
  prob.phi = basis.feature_matrix(prob.ancestors);
  prob.lambda = lambda;
  (void)kernel;
  return prob;
}

FitResult finish_chi_fit(const ChiProblem& prob, const detail::NewtonState& st) {
  const int d = prob.model->dim;
  FitResult res;
  res.theta_hat = st.x.head(d);
  res.nu = prob.basis->expansion(st.x.tail(prob.basis->rank()));
  res.objective = st.value;
  res.iterations = st.iterations;
  res.converged = st.converged;
  res.diagnostic = st.diagnostic;
  return res;
}

}  // namespace

FitResult fit_poisson_chi(const ConditionalEnergyModel& model, const SampleSet& samples,
                          const QuadratureRule& rule, const Kernel& kernel,
                          const PenaltyConfig& penalty, const NewtonOptions& options) {
  validate_samples(samples, model.domain);
  if (penalty.lambda_pen < 0.0) throw std::invalid_argument("penalty must be >= 0");
  const std::vector<double> ancestors = ancestor_list(samples);
  const NystromBasis basis = pivoted_basis(kernel, ancestors, penalty.basis_tol);
  ChiProblem prob = make_chi_problem(model, samples, rule, kernel, basis,
                                     penalty.lambda_pen);
  auto eval = [&](const Eigen::VectorXd& x, Eigen::VectorXd* g, Eigen::MatrixXd* h) {
    return prob.eval(x, g, h);
  };
  detail::NewtonState st =
      detail::newton_maximize(eval, Eigen::VectorXd::Zero(prob.dim()), options);
  return finish_chi_fit(prob, st);
}

std::vector<std::pair<double, double>> lambda_path(
    const ConditionalEnergyModel& model, const SampleSet& samples,
    const QuadratureRule& rule, const Kernel& kernel, const std::vector<double>& grid,
    const NewtonOptions& options, double basis_tol) {
  validate_samples(samples, model.domain);
  if (grid.empty()) throw std::invalid_argument("empty penalty grid");
  for (double lam : grid) {
    if (!(lam >= 0.0) || !std::isfinite(lam)) {
      throw std::invalid_argument("penalty grid entries must be finite and >= 0");
    }
  }

  const std::vector<double> ancestors = ancestor_list(samples);
  const NystromBasis basis = pivoted_basis(kernel, ancestors, basis_tol);

  // Warm-start from large to small lambda, then report in the input order.
  std::vector<std::size_t> order(grid.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&grid](std::size_t a, std::size_t b) { return grid[a] > grid[b]; });

  std::vector<std::pair<double, double>> out(grid.size());
  ChiProblem prob = make_chi_problem(model, samples, rule, kernel, basis, 0.0);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(prob.dim());
  for (std::size_t idx : order) {
    prob.lambda = grid[idx];
    auto eval = [&](const Eigen::VectorXd& v, Eigen::VectorXd* g, Eigen::MatrixXd* h) {
      return prob.eval(v, g, h);
    };
    detail::NewtonState st = detail::newton_maximize(eval, x, options);
    x = st.x;
    const double gamma_sq = st.x.tail(prob.basis->rank()).squaredNorm();
    out[idx] = {grid[idx], st.value + prob.lambda * gamma_sq};
  }
  return out;
}

Eigen::MatrixXd confidence_from_m(const Eigen::MatrixXd& joint_hessian) {
  const auto size = joint_hessian.rows();
  if (size < 2 || joint_hessian.cols() != size) {
    throw std::invalid_argument("joint Hessian must be square with a nu block");
  }
  const auto d = size - 1;
  const Eigen::MatrixXd h_tt = joint_hessian.topLeftCorner(d, d);
  const Eigen::VectorXd h_tn = joint_hessian.topRightCorner(d, 1);
  const double h_nn = joint_hessian(d, d);
  if (h_nn == 0.0 || !std::isfinite(h_nn)) {
    throw std::runtime_error("nu block of the joint Hessian is singular");
  }
  const Eigen::MatrixXd neg_info = h_tt - (h_tn * h_tn.transpose()) / h_nn;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(Eigen::MatrixXd(-neg_info));
  if (!lu.isInvertible()) {
    throw std::runtime_error("profiled information matrix is singular");
  }
  return lu.inverse();
}

ConcavityReport check_concavity(const ConditionalEnergyModel& model,
                                const std::vector<ParamVector>& theta_samples,
                                const std::vector<double>& nu_samples,
                                const SampleSet& samples, const QuadratureRule& rule) {
  if (!model.suff_stats) {
    throw std::invalid_argument(
        "concavity guarantee only covers models with sufficient statistics");
  }
  if (theta_samples.empty() || nu_samples.empty()) {
    throw std::invalid_argument("need at least one theta and one nu sample");
  }
  validate_samples(samples, model.domain);

  ConcavityReport report;
  report.max_eigenvalue = -std::numeric_limits<double>::infinity();
  for (const ParamVector& theta : theta_samples) {
    for (double nu : nu_samples) {
      Eigen::MatrixXd hess;
      m_bundle(model, theta, nu, samples, rule, nullptr, &hess);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(hess, Eigen::EigenvaluesOnly);
      const double top = eig.eigenvalues().maxCoeff();
      report.max_eigenvalue = std::max(report.max_eigenvalue, top);
      ++report.points_checked;
    }
  }
  report.all_concave = report.max_eigenvalue <= 1e-8;
  return report;
}

}  // namespace ptrans
