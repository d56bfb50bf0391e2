#include "ptrans/ncd.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "detail/newton.hpp"

namespace ptrans {

namespace {

// Probabilities are clamped to [1e-12, 1 - 1e-12] before logs, so line
// searches at extreme theta never see -inf.
constexpr double kLogProbFloor = -27.631021115928547;  // log(1e-12)

inline double log1pexp(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double point_loglik(double eta, bool positive) {
  const double ll = positive ? -log1pexp(-eta) : -log1pexp(eta);
  return ll < kLogProbFloor ? kLogProbFloor : ll;
}

void check_structure(const NcdDataset& data) {
  if (data.k < 1) throw std::invalid_argument("dataset has k < 1");
  if (data.ancestors.empty()) throw std::invalid_argument("dataset has no ancestors");
  if (data.points.size() != data.ancestors.size() * static_cast<std::size_t>(data.k + 1)) {
    throw std::invalid_argument("dataset size does not match n * (k + 1)");
  }
}

// Shared design for the logistic fits.  For models with sufficient
// statistics the gradient rows are constant and the energies are a single
// mat-vec; otherwise rows are refreshed per iterate (the theta Hessian is
// then the Gauss-Newton one, exact for energies linear in theta).
struct Design {
  const ConditionalEnergyModel* model = nullptr;
  const NcdDataset* data = nullptr;
  int d = 0;
  Eigen::Index rows = 0;
  bool linear = false;
  Eigen::MatrixXd g;
  Eigen::VectorXd offset;
  Eigen::VectorXd zlab;

  void refresh(const Eigen::VectorXd& theta, Eigen::VectorXd& f) {
    if (linear) {
      f.noalias() = g * theta;
      return;
    }
    for (Eigen::Index i = 0; i < rows; ++i) {
      const LabeledPoint& pt = data->points[static_cast<std::size_t>(i)];
      f[i] = model->energy(theta, pt.u, pt.u_prev);
      g.row(i) = model->grad_theta(theta, pt.u, pt.u_prev).transpose();
    }
  }
};

Design make_design(const ConditionalEnergyModel& model, const NcdDataset& data) {
  check_structure(data);
  Design ds;
  ds.model = &model;
  ds.data = &data;
  ds.d = model.dim;
  ds.rows = static_cast<Eigen::Index>(data.points.size());
  ds.linear = static_cast<bool>(model.suff_stats);
  ds.g.resize(ds.rows, ds.d);
  ds.offset.resize(ds.rows);
  ds.zlab.resize(ds.rows);
  const double log_ratio = -std::log(static_cast<double>(data.k));  // log(n/m)
  for (Eigen::Index i = 0; i < ds.rows; ++i) {
    const LabeledPoint& pt = data.points[static_cast<std::size_t>(i)];
    ds.offset[i] = log_ratio - pt.log_q;
    ds.zlab[i] = pt.z ? 1.0 : 0.0;
    if (ds.linear) ds.g.row(i) = model.suff_stats(pt.u, pt.u_prev).transpose();
  }
  return ds;
}

double total_loglik(const Design& ds, const Eigen::VectorXd& eta) {
  double value = 0.0;
  for (Eigen::Index i = 0; i < ds.rows; ++i) {
    value += point_loglik(eta[i], ds.zlab[i] > 0.5);
  }
  return value;
}

}  // namespace

NcdDataset build_dataset(const SampleSet& samples, const ReferenceDensity& q, int k,
                         Rng& rng) {
  if (k < 1) throw std::invalid_argument("need at least one reference draw per point");
  validate_samples(samples, q.domain);
  const std::size_t n = samples.size();

  NcdDataset data;
  data.k = k;
  data.ancestors.resize(n);
  data.points.reserve(n * static_cast<std::size_t>(k + 1));
  for (std::size_t t = 0; t < n; ++t) {
    const double a = samples.ancestor(t);
    const double y = samples.points[t];
    data.ancestors[t] = a;
    data.points.push_back(
        {y, a, 1, q.log_density(y, a), static_cast<std::uint32_t>(t)});
    for (int j = 0; j < k; ++j) {
      const double x = q.sample(a, rng);
      if (!q.domain.contains(x)) {
        throw std::runtime_error("reference sampler produced a point outside the domain");
      }
      data.points.push_back(
          {x, a, 0, q.log_density(x, a), static_cast<std::uint32_t>(t)});
    }
  }
  return data;
}

void validate_dataset(const NcdDataset& dataset) {
  check_structure(dataset);
  const std::size_t n = dataset.n();
  std::vector<int> positives(n, 0), negatives(n, 0);
  for (const LabeledPoint& pt : dataset.points) {
    if (pt.ancestor_index >= n) {
      throw std::invalid_argument("ancestor index out of range");
    }
    if (pt.u_prev != dataset.ancestors[pt.ancestor_index]) {
      throw std::invalid_argument("point ancestor disagrees with the group ancestor");
    }
    if (!std::isfinite(pt.u) || !std::isfinite(pt.log_q)) {
      throw std::invalid_argument("non-finite labeled point");
    }
    (pt.z ? positives : negatives)[pt.ancestor_index] += 1;
  }
  for (std::size_t t = 0; t < n; ++t) {
    if (positives[t] != 1 || negatives[t] != dataset.k) {
      throw std::invalid_argument("group " + std::to_string(t) +
                                  " does not have 1 positive and k negatives");
    }
  }
}

double ncd_objective(const ConditionalEnergyModel& model, const ParamVector& theta,
                     double nu, const NcdDataset& dataset) {
  if (theta.size() != model.dim) {
    throw std::invalid_argument("parameter vector has the wrong dimension");
  }
  check_structure(dataset);
  const double log_ratio = -std::log(static_cast<double>(dataset.k));
  double value = 0.0;
  for (const LabeledPoint& pt : dataset.points) {
    const double eta =
        model.energy(theta, pt.u, pt.u_prev) + nu + log_ratio - pt.log_q;
    value += point_loglik(eta, pt.z != 0);
  }
  return value;
}

Eigen::VectorXd ncd_grad(const ConditionalEnergyModel& model, const ParamVector& theta,
                         double nu, const NcdDataset& dataset) {
  if (theta.size() != model.dim) {
    throw std::invalid_argument("parameter vector has the wrong dimension");
  }
  check_structure(dataset);
  const double log_ratio = -std::log(static_cast<double>(dataset.k));
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(model.dim + 1);
  for (const LabeledPoint& pt : dataset.points) {
    const double eta =
        model.energy(theta, pt.u, pt.u_prev) + nu + log_ratio - pt.log_q;
    const double r = (pt.z ? 1.0 : 0.0) - sigmoid(eta);
    grad.head(model.dim) += r * model.grad_theta(theta, pt.u, pt.u_prev);
    grad[model.dim] += r;
  }
  return grad;
}

double logistic_deviance(const ConditionalEnergyModel& model, const LogisticFit& fit,
                         const NcdDataset& dataset) {
  check_structure(dataset);
  if (fit.theta_hat.size() != model.dim) {
    throw std::invalid_argument("fit does not match the model dimension");
  }
  if (fit.nu_vec && static_cast<std::size_t>(fit.nu_vec->size()) != dataset.n()) {
    throw std::invalid_argument("per-ancestor fit does not match the dataset");
  }
  const double log_ratio = -std::log(static_cast<double>(dataset.k));
  double value = 0.0;
  for (const LabeledPoint& pt : dataset.points) {
    double eta = model.energy(fit.theta_hat, pt.u, pt.u_prev) + log_ratio - pt.log_q;
    if (fit.chi) {
      eta += fit.intercept + (*fit.chi)(pt.u_prev);
    } else if (fit.nu_vec) {
      eta += (*fit.nu_vec)[pt.ancestor_index];
    } else {
      eta += fit.intercept;
    }
    value += point_loglik(eta, pt.z != 0);
  }
  return -2.0 * value;
}

namespace {

// Flags a fit whose optimum pins every probability to 0/1: the classes are
// separable and the coefficients diverge.
bool looks_separated(const Design& ds, const Eigen::VectorXd& eta) {
  double max_w = 0.0;
  for (Eigen::Index i = 0; i < ds.rows; ++i) {
    const double p = sigmoid(eta[i]);
    max_w = std::max(max_w, p * (1.0 - p));
  }
  return max_w < 1e-8;
}

LogisticFit fit_single_intercept(const ConditionalEnergyModel& model,
                                 const NcdDataset& dataset,
                                 const NewtonOptions& options) {
  Design ds = make_design(model, dataset);
  const int d = ds.d;
  Eigen::VectorXd f(ds.rows);

  auto eval = [&](const Eigen::VectorXd& x, Eigen::VectorXd* grad,
                  Eigen::MatrixXd* hess) {
    ds.refresh(x.head(d), f);
    const Eigen::VectorXd eta = f.array() + x[d] + ds.offset.array();
    const double value = total_loglik(ds, eta);
    if (grad || hess) {
      Eigen::VectorXd p = eta.unaryExpr([](double e) { return sigmoid(e); });
      if (grad) {
        const Eigen::VectorXd r = ds.zlab - p;
        grad->resize(d + 1);
        grad->head(d).noalias() = ds.g.transpose() * r;
        (*grad)[d] = r.sum();
      }
      if (hess) {
        const Eigen::VectorXd w = p.array() * (1.0 - p.array());
        hess->resize(d + 1, d + 1);
        hess->topLeftCorner(d, d).noalias() =
            -(ds.g.transpose() * w.asDiagonal() * ds.g);
        hess->topRightCorner(d, 1).noalias() = -(ds.g.transpose() * w);
        hess->bottomLeftCorner(1, d) = hess->topRightCorner(d, 1).transpose();
        (*hess)(d, d) = -w.sum();
      }
    }
    return value;
  };

  detail::NewtonState st =
      detail::newton_maximize(eval, Eigen::VectorXd::Zero(d + 1), options);

  LogisticFit fit;
  fit.theta_hat = st.x.head(d);
  fit.intercept = st.x[d];
  fit.deviance = -2.0 * st.value;
  fit.iterations = st.iterations;
  fit.converged = st.converged;
  fit.diagnostic = st.diagnostic;

  ds.refresh(fit.theta_hat, f);
  const Eigen::VectorXd eta = f.array() + fit.intercept + ds.offset.array();
  if (looks_separated(ds, eta)) {
    fit.converged = false;
    if (!fit.diagnostic.empty()) fit.diagnostic += "; ";
    fit.diagnostic += "separation detected: coefficients diverging";
  }
  return fit;
}

}  // namespace

LogisticFit fit_ncd_iid(const ConditionalEnergyModel& model, const NcdDataset& dataset,
                        const NewtonOptions& options) {
  if (!model.suff_stats) {
    throw std::invalid_argument(
        "fit_ncd_iid needs a model with sufficient statistics");
  }
  return fit_single_intercept(model, dataset, options);
}

LogisticFit fit_ncd_ignore(const ConditionalEnergyModel& model, const NcdDataset& dataset,
                           const NewtonOptions& options) {
  return fit_single_intercept(model, dataset, options);
}

LogisticFit fit_ncd_param(const ConditionalEnergyModel& model, const NcdDataset& dataset,
                          const NewtonOptions& options) {
  Design ds = make_design(model, dataset);
  const int d = ds.d;
  const std::size_t n = dataset.n();

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd nu = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  Eigen::VectorXd f(ds.rows);
  ds.refresh(theta, f);

  auto eta_of = [&](Eigen::Index i) {
    const std::uint32_t t = ds.data->points[static_cast<std::size_t>(i)].ancestor_index;
    return f[i] + nu[t] + ds.offset[i];
  };

  // Group layout is contiguous by construction of build_dataset; fall back
  // to index lookups if a caller assembled the rows differently.
  std::vector<std::vector<Eigen::Index>> groups(n);
  for (Eigen::Index i = 0; i < ds.rows; ++i) {
    groups[ds.data->points[static_cast<std::size_t>(i)].ancestor_index].push_back(i);
  }

  LogisticFit fit;
  double joint_grad = std::numeric_limits<double>::infinity();
  int pass = 0;

  for (; pass < options.max_iter; ++pass) {
    // Per-ancestor 1-D Newton updates with backtracking on the group
    // contribution (concave in nu_t).
    for (int sweep = 0; sweep < 2; ++sweep) {
      for (std::size_t t = 0; t < n; ++t) {
        double gsum = 0.0, hsum = 0.0, ll = 0.0;
        for (Eigen::Index i : groups[t]) {
          const double eta = eta_of(i);
          const double p = sigmoid(eta);
          gsum += ds.zlab[i] - p;
          hsum += p * (1.0 - p);
          ll += point_loglik(eta, ds.zlab[i] > 0.5);
        }
        if (hsum < 1e-12) continue;  // flat group: nothing to update
        const double noise =
            64.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(ll));
        double step = std::clamp(gsum / hsum, -8.0, 8.0);
        for (int probe = 0; probe < 30; ++probe) {
          double trial_ll = 0.0;
          for (Eigen::Index i : groups[t]) {
            trial_ll += point_loglik(eta_of(i) + step, ds.zlab[i] > 0.5);
          }
          if (trial_ll >= ll + 1e-4 * step * gsum - noise) break;
          step *= 0.5;
        }
        nu[static_cast<Eigen::Index>(t)] += step;
      }
    }

    // Damped Newton step on theta with nu fixed.
    Eigen::VectorXd eta(ds.rows), p(ds.rows), w(ds.rows);
    for (Eigen::Index i = 0; i < ds.rows; ++i) {
      eta[i] = eta_of(i);
      p[i] = sigmoid(eta[i]);
      w[i] = p[i] * (1.0 - p[i]);
    }
    const Eigen::VectorXd resid = ds.zlab - p;
    Eigen::VectorXd g_theta = ds.g.transpose() * resid;
    Eigen::MatrixXd s = ds.g.transpose() * w.asDiagonal() * ds.g;
    const double scale = std::max(1.0, s.diagonal().cwiseAbs().maxCoeff());
    Eigen::VectorXd dir;
    bool have_dir = false;
    double tau = 0.0;
    for (int attempt = 0; attempt < 8 && !have_dir; ++attempt) {
      Eigen::LDLT<Eigen::MatrixXd> ldlt(
          tau == 0.0 ? s : Eigen::MatrixXd(s + tau * Eigen::MatrixXd::Identity(d, d)));
      if (ldlt.info() == Eigen::Success) {
        dir = ldlt.solve(g_theta);
        have_dir = dir.allFinite() && dir.dot(g_theta) > 0.0;
      }
      if (!have_dir) tau = (tau == 0.0) ? 1e-8 * scale : 100.0 * tau;
    }
    if (!have_dir) dir = g_theta / scale;

    const double value = total_loglik(ds, eta);
    const double slope = g_theta.dot(dir);
    const double noise =
        64.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(value));
    double step = 1.0;
    Eigen::VectorXd f_trial(ds.rows);
    bool accepted = false;
    for (int probe = 0; probe < 60; ++probe) {
      const Eigen::VectorXd theta_trial = theta + step * dir;
      ds.refresh(theta_trial, f_trial);
      double trial = 0.0;
      for (Eigen::Index i = 0; i < ds.rows; ++i) {
        const std::uint32_t t =
            ds.data->points[static_cast<std::size_t>(i)].ancestor_index;
        trial += point_loglik(f_trial[i] + nu[t] + ds.offset[i], ds.zlab[i] > 0.5);
      }
      if (std::isfinite(trial) &&
          trial >= value + options.armijo_c * step * slope - noise) {
        theta = theta_trial;
        f = f_trial;
        accepted = true;
        break;
      }
      step *= options.backtrack;
    }
    if (!accepted && slope > options.grad_tol) {
      fit.diagnostic = "theta line search stalled";
      break;
    }

    // Joint gradient at the new iterate.
    double gmax = 0.0;
    Eigen::VectorXd group_resid = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    Eigen::VectorXd g_theta_now = Eigen::VectorXd::Zero(d);
    for (Eigen::Index i = 0; i < ds.rows; ++i) {
      const std::uint32_t t =
          ds.data->points[static_cast<std::size_t>(i)].ancestor_index;
      const double r = ds.zlab[i] - sigmoid(eta_of(i));
      group_resid[t] += r;
      g_theta_now += r * ds.g.row(i).transpose();
    }
    joint_grad = std::max(g_theta_now.lpNorm<Eigen::Infinity>(),
                          group_resid.lpNorm<Eigen::Infinity>());
    if (joint_grad <= options.grad_tol) {
      fit.converged = true;
      ++pass;
      break;
    }
  }

  fit.theta_hat = theta;
  fit.nu_vec = nu;
  fit.iterations = pass;
  Eigen::VectorXd eta(ds.rows);
  for (Eigen::Index i = 0; i < ds.rows; ++i) eta[i] = eta_of(i);
  fit.deviance = -2.0 * total_loglik(ds, eta);
  if (!fit.converged && fit.diagnostic.empty()) {
    fit.diagnostic = "pass limit reached";
  }
  // An ancestor whose group curvature vanished (all probabilities pinned)
  // or whose intercept ran away has no identified nu_t.
  for (std::size_t t = 0; t < n; ++t) {
    double hsum = 0.0;
    for (Eigen::Index i : groups[t]) {
      const double p = sigmoid(eta[i]);
      hsum += p * (1.0 - p);
    }
    if (hsum < 1e-12 || std::abs(nu[static_cast<Eigen::Index>(t)]) > 100.0) {
      fit.unidentifiable.push_back(static_cast<std::uint32_t>(t));
    }
  }
  if (looks_separated(ds, eta)) {
    fit.converged = false;
    if (!fit.diagnostic.empty()) fit.diagnostic += "; ";
    fit.diagnostic += "separation detected: coefficients diverging";
  }
  return fit;
}

LogisticFit fit_ncd_semi(const ConditionalEnergyModel& model, const NcdDataset& dataset,
                         const Kernel& kernel, double lambda_pen,
                         const NewtonOptions& options) {
  if (!(lambda_pen >= 0.0) || !std::isfinite(lambda_pen)) {
    throw std::invalid_argument("penalty must be finite and >= 0");
  }
  Design ds = make_design(model, dataset);
  const int d = ds.d;
  const std::size_t n = dataset.n();

  const NystromBasis basis = pivoted_basis(kernel, dataset.ancestors);
  const int r = basis.rank();
  const Eigen::MatrixXd phi = basis.feature_matrix(dataset.ancestors);  // n x r

  Eigen::VectorXd f(ds.rows);
  // x = [theta; intercept; gamma]
  auto eval = [&](const Eigen::VectorXd& x, Eigen::VectorXd* grad,
                  Eigen::MatrixXd* hess) {
    ds.refresh(x.head(d), f);
    const double c = x[d];
    const Eigen::VectorXd gamma = x.tail(r);
    const Eigen::VectorXd group_val = phi * gamma;

    double value = -lambda_pen * gamma.squaredNorm();
    Eigen::VectorXd eta(ds.rows);
    for (Eigen::Index i = 0; i < ds.rows; ++i) {
      const std::uint32_t t =
          ds.data->points[static_cast<std::size_t>(i)].ancestor_index;
      eta[i] = f[i] + c + group_val[t] + ds.offset[i];
      value += point_loglik(eta[i], ds.zlab[i] > 0.5);
    }
    if (!grad && !hess) return value;

    Eigen::VectorXd p = eta.unaryExpr([](double e) { return sigmoid(e); });
    const Eigen::VectorXd resid = ds.zlab - p;
    const Eigen::VectorXd w = p.array() * (1.0 - p.array());

    Eigen::VectorXd group_resid = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    Eigen::VectorXd group_w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    Eigen::MatrixXd group_wg = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), d);
    for (Eigen::Index i = 0; i < ds.rows; ++i) {
      const std::uint32_t t =
          ds.data->points[static_cast<std::size_t>(i)].ancestor_index;
      group_resid[t] += resid[i];
      group_w[t] += w[i];
      group_wg.row(t) += w[i] * ds.g.row(i);
    }

    if (grad) {
      grad->resize(d + 1 + r);
      grad->head(d).noalias() = ds.g.transpose() * resid;
      (*grad)[d] = resid.sum();
      grad->tail(r).noalias() = phi.transpose() * group_resid - 2.0 * lambda_pen * gamma;
    }
    if (hess) {
      hess->setZero(d + 1 + r, d + 1 + r);
      hess->topLeftCorner(d, d).noalias() = -(ds.g.transpose() * w.asDiagonal() * ds.g);
      hess->block(0, d, d, 1).noalias() = -(ds.g.transpose() * w);
      hess->block(0, d + 1, d, r).noalias() = -(group_wg.transpose() * phi);
      (*hess)(d, d) = -w.sum();
      hess->block(d, d + 1, 1, r).noalias() = -(group_w.transpose() * phi);
      hess->block(d + 1, d + 1, r, r).noalias() =
          -(phi.transpose() * group_w.asDiagonal() * phi);
      hess->block(d + 1, d + 1, r, r).diagonal().array() -= 2.0 * lambda_pen;
      hess->block(d, 0, 1, d) = hess->block(0, d, d, 1).transpose();
      hess->block(d + 1, 0, r, d) = hess->block(0, d + 1, d, r).transpose();
      hess->block(d + 1, d, r, 1) = hess->block(d, d + 1, 1, r).transpose();
    }
    return value;
  };

  detail::NewtonState st =
      detail::newton_maximize(eval, Eigen::VectorXd::Zero(d + 1 + r), options);

  LogisticFit fit;
  fit.theta_hat = st.x.head(d);
  fit.intercept = st.x[d];
  fit.chi = basis.expansion(st.x.tail(r));
  const double penalty = lambda_pen * st.x.tail(r).squaredNorm();
  fit.deviance = -2.0 * (st.value + penalty);
  fit.iterations = st.iterations;
  fit.converged = st.converged;
  fit.diagnostic = st.diagnostic;
  return fit;
}

namespace {

NcdDataset subset_groups(const NcdDataset& data, const std::vector<int>& fold_of,
                         int fold, bool keep_fold) {
  NcdDataset out;
  out.k = data.k;
  std::vector<std::uint32_t> new_index(data.n(), 0);
  for (std::size_t t = 0; t < data.n(); ++t) {
    if ((fold_of[t] == fold) == keep_fold) {
      new_index[t] = static_cast<std::uint32_t>(out.ancestors.size());
      out.ancestors.push_back(data.ancestors[t]);
    }
  }
  out.points.reserve(out.ancestors.size() * static_cast<std::size_t>(data.k + 1));
  for (const LabeledPoint& pt : data.points) {
    if ((fold_of[pt.ancestor_index] == fold) == keep_fold) {
      LabeledPoint copy = pt;
      copy.ancestor_index = new_index[pt.ancestor_index];
      out.points.push_back(copy);
    }
  }
  return out;
}

}  // namespace

double select_lambda(const ConditionalEnergyModel& model, const NcdDataset& dataset,
                     const Kernel& kernel, const std::vector<double>& grid, int folds,
                     Rng& rng) {
  if (grid.empty()) throw std::invalid_argument("empty penalty grid");
  check_structure(dataset);
  const int n = static_cast<int>(dataset.n());
  if (folds < 2) throw std::invalid_argument("need at least two folds");
  // Never leave a fold without a positive: shrink to one group per fold.
  folds = std::min(folds, n);
  if (folds < 2) {
    return *std::max_element(grid.begin(), grid.end());
  }

  // Random balanced assignment of whole ancestor groups to folds.
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(uniform01(rng) * (i + 1));
    std::swap(perm[i], perm[std::min(j, i)]);
  }
  std::vector<int> fold_of(n);
  for (int i = 0; i < n; ++i) fold_of[perm[i]] = i % folds;

  double best_lambda = grid.front();
  double best_score = std::numeric_limits<double>::infinity();
  for (double lambda : grid) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
      throw std::invalid_argument("penalty grid entries must be finite and >= 0");
    }
    double score = 0.0;
    for (int fold = 0; fold < folds; ++fold) {
      const NcdDataset train = subset_groups(dataset, fold_of, fold, false);
      const NcdDataset test = subset_groups(dataset, fold_of, fold, true);
      const LogisticFit fit = fit_ncd_semi(model, train, kernel, lambda);
      score += logistic_deviance(model, fit, test);
    }
    if (score < best_score - 1e-12 ||
        (score <= best_score + 1e-12 && lambda > best_lambda)) {
      best_score = std::min(best_score, score);
      best_lambda = lambda;
    }
  }
  return best_lambda;
}

std::vector<double> default_lambda_grid() {
  std::vector<double> grid(8);
  for (int i = 0; i < 8; ++i) grid[i] = std::pow(10.0, -6.0 + 8.0 * i / 7.0);
  return grid;
}

}  // namespace ptrans
