#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ptrans/fit_result.hpp"
#include "ptrans/kernel.hpp"
#include "ptrans/model.hpp"
#include "ptrans/rng.hpp"

namespace ptrans {

// One row of the classification problem: the candidate point u, its
// ancestor u_prev, the class label (1 = observed, 0 = reference draw), the
// reference log-density at u, and the index of the ancestor group.
struct LabeledPoint {
  double u = 0.0;
  double u_prev = 0.0;
  std::uint8_t z = 0;
  double log_q = 0.0;
  std::uint32_t ancestor_index = 0;
};

struct NcdDataset {
  std::vector<LabeledPoint> points;
  std::vector<double> ancestors;  // ancestor value per group
  int k = 0;                      // reference draws per observation

  std::size_t n() const { return ancestors.size(); }
  std::size_t m() const { return n() * static_cast<std::size_t>(k); }
};

// Builds the logistic dataset: each observation y_t becomes a z=1 point
// followed by k reference draws from q(. | y_{t-1}), all in group t.
NcdDataset build_dataset(const SampleSet& samples, const ReferenceDensity& q, int k,
                         Rng& rng);

void validate_dataset(const NcdDataset& dataset);

// Logistic log-likelihood with a single log-mass nu: every point enters
// with log-odds energy(theta, u, u_prev) + nu + log(n/m) - log q(u).
// Up to the shift n log(m/n) + sum_i log q(y_i) this converges to the
// IID Poisson objective as k grows.
double ncd_objective(const ConditionalEnergyModel& model, const ParamVector& theta,
                     double nu, const NcdDataset& dataset);

// Gradient in [theta; nu].
Eigen::VectorXd ncd_grad(const ConditionalEnergyModel& model, const ParamVector& theta,
                         double nu, const NcdDataset& dataset);

struct LogisticFit {
  ParamVector theta_hat;
  double intercept = 0.0;                     // nu (iid/ignore) or unpenalised level (semi)
  std::optional<Eigen::VectorXd> nu_vec;      // per-ancestor variant
  std::optional<KernelExpansion> chi;         // semiparametric variant
  std::vector<std::uint32_t> unidentifiable;  // ancestors with degenerate nu_t
  double deviance = 0.0;                      // -2 * logistic log-likelihood
  int iterations = 0;
  bool converged = false;
  std::string diagnostic;
};

// -2 * logistic log-likelihood of an existing fit on any dataset (used for
// held-out folds).  Probabilities are clamped to [1e-12, 1 - 1e-12].
double logistic_deviance(const ConditionalEnergyModel& model, const LogisticFit& fit,
                         const NcdDataset& dataset);

// IID variant: log-odds = f_theta(u) + nu + offset; Newton to gradient
// inf-norm <= 1e-8.  Separation (coefficients diverging) is flagged in
// the diagnostic and clears `converged`.
LogisticFit fit_ncd_iid(const ConditionalEnergyModel& model, const NcdDataset& dataset,
                        const NewtonOptions& options = {});

// Per-ancestor variant: log-odds = f_theta(u | u_prev) + nu_t + offset,
// solved by alternating a damped Newton step on theta with per-ancestor
// 1-D Newton updates of each nu_t, until the joint gradient inf-norm
// drops below options.grad_tol (default 1e-6).
LogisticFit fit_ncd_param(const ConditionalEnergyModel& model, const NcdDataset& dataset,
                          const NewtonOptions& options = {200, 1e-6, 1e-4, 0.5});

// Semiparametric variant: log-odds = f_theta(u | u_prev) + intercept
// + chi(u_prev) + offset with chi in the kernel's RKHS and penalty
// lambda_pen * |chi|_H^2.  chi is parametrised on the pivoted low-rank
// basis of the unique-ancestor Gram matrix; the intercept is unpenalised,
// so lambda_pen -> infinity recovers fit_ncd_ignore.
LogisticFit fit_ncd_semi(const ConditionalEnergyModel& model, const NcdDataset& dataset,
                         const Kernel& kernel, double lambda_pen,
                         const NewtonOptions& options = {});

// Misspecified baseline: a single intercept even for sequential data.
LogisticFit fit_ncd_ignore(const ConditionalEnergyModel& model, const NcdDataset& dataset,
                           const NewtonOptions& options = {});

// K-fold cross-validation for the semiparametric penalty.  Folds are
// drawn over whole ancestor groups so a positive and its k negatives
// never split; the score is held-out deviance; ties break toward the
// larger lambda.
double select_lambda(const ConditionalEnergyModel& model, const NcdDataset& dataset,
                     const Kernel& kernel, const std::vector<double>& grid, int folds,
                     Rng& rng);

// Eight points log-spaced over [1e-6, 1e2].
std::vector<double> default_lambda_grid();

}  // namespace ptrans
