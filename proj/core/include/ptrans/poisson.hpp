#pragma once

#include <Eigen/Core>
#include <utility>
#include <vector>

#include "ptrans/fit_result.hpp"
#include "ptrans/kernel.hpp"
#include "ptrans/model.hpp"
#include "ptrans/quadrature.hpp"

namespace ptrans {

// Optimal log-mass for a fixed theta: nu*(theta) = -log_partition(theta).
// Plugging it into the Poisson objective gives exact_loglik - n.
double nu_star(const ConditionalEnergyModel& model, const ParamVector& theta,
               double y_prev, const QuadratureRule& rule);

// Poisson-transformed likelihood with a single log-mass nu (IID usage; the
// conditioning slot is pinned to samples.initial):
//   M(theta, nu) = sum_i [f(y_i) + nu] - n * integral exp{f(y) + nu} dy.
// Joint maximisation over (theta, nu) recovers the ML estimate without
// ever normalising inside the optimisation loop.
double m_objective(const ConditionalEnergyModel& model, const ParamVector& theta,
                   double nu, const SampleSet& samples, const QuadratureRule& rule);

// Gradient and Hessian in the stacked parameter [theta; nu].
Eigen::VectorXd m_grad(const ConditionalEnergyModel& model, const ParamVector& theta,
                       double nu, const SampleSet& samples, const QuadratureRule& rule);

Eigen::MatrixXd m_hessian(const ConditionalEnergyModel& model, const ParamVector& theta,
                          double nu, const SampleSet& samples, const QuadratureRule& rule);

FitResult fit_poisson_joint(const ConditionalEnergyModel& model, const SampleSet& samples,
                            const QuadratureRule& rule, const NewtonOptions& options = {});

// Sequential variant: one log-mass per ancestor,
//   M(theta, nu) = sum_t [f(y_t|y_{t-1}) + nu_t] - sum_t integral exp{f(y|y_{t-1}) + nu_t} dy.
double m_seq_objective(const ConditionalEnergyModel& model, const ParamVector& theta,
                       const Eigen::VectorXd& nu_vec, const SampleSet& samples,
                       const QuadratureRule& rule);

// Gradient in [theta; nu_0; ...; nu_{n-1}].
Eigen::VectorXd m_seq_grad(const ConditionalEnergyModel& model, const ParamVector& theta,
                           const Eigen::VectorXd& nu_vec, const SampleSet& samples,
                           const QuadratureRule& rule);

struct PenaltyConfig {
  double lambda_pen = 0.0;
  // Relative trace tolerance of the pivoted ancestor basis used by
  // fit_poisson_chi.  Directions below it carry next to no data curvature;
  // keeping them only makes the small-lambda limit drift.
  double basis_tol = 1e-10;
};

// Semiparametric variant: the per-ancestor log-mass is a function
// chi(y_{t-1}) from the RKHS of `chi.kernel`, penalised by
// lambda_pen * |chi|_H^2 = lambda_pen * alpha^T K alpha.
// Precondition: chi.centers are exactly the ancestors y_0..y_{n-1}.
double m_chi_objective(const ConditionalEnergyModel& model, const ParamVector& theta,
                       const KernelExpansion& chi, const PenaltyConfig& penalty,
                       const SampleSet& samples, const QuadratureRule& rule);

// Gradient in [theta; alpha].
Eigen::VectorXd m_chi_grad(const ConditionalEnergyModel& model, const ParamVector& theta,
                           const KernelExpansion& chi, const PenaltyConfig& penalty,
                           const SampleSet& samples, const QuadratureRule& rule);

// Joint Newton fit of (theta, chi).  chi is parametrised on the low-rank
// pivoted basis of the ancestor Gram matrix, which preserves the penalised
// optimum to the basis tolerance while keeping the Newton system at
// dim + rank unknowns.  Result nu holds the fitted KernelExpansion;
// objective is the penalised optimum.
FitResult fit_poisson_chi(const ConditionalEnergyModel& model, const SampleSet& samples,
                          const QuadratureRule& rule, const Kernel& kernel,
                          const PenaltyConfig& penalty, const NewtonOptions& options = {});

// Refits chi along a penalty grid and reports (lambda, unpenalised
// objective value at that fit).  With a well-chosen bandwidth the values
// plateau as lambda decreases towards zero.
std::vector<std::pair<double, double>> lambda_path(
    const ConditionalEnergyModel& model, const SampleSet& samples,
    const QuadratureRule& rule, const Kernel& kernel, const std::vector<double>& grid,
    const NewtonOptions& options = {}, double basis_tol = PenaltyConfig{}.basis_tol);

// Confidence matrix for theta from the joint [theta; nu] Hessian of M via
// Schur complement over the nu block:  C = [-(H_tt - H_tn H_nn^{-1} H_nt)]^{-1}.
// At the optimum this equals the inverse observed information of the
// original likelihood.
Eigen::MatrixXd confidence_from_m(const Eigen::MatrixXd& joint_hessian);

struct ConcavityReport {
  bool all_concave = true;
  double max_eigenvalue = 0.0;  // largest Hessian eigenvalue seen
  int points_checked = 0;
};

// Verifies joint concavity of M in (theta, nu) for exponential-family
// models by eigenvalue checks of the joint Hessian over a parameter grid.
// Requires suff_stats; other models are not covered by the guarantee.
ConcavityReport check_concavity(const ConditionalEnergyModel& model,
                                const std::vector<ParamVector>& theta_samples,
                                const std::vector<double>& nu_samples,
                                const SampleSet& samples, const QuadratureRule& rule);

}  // namespace ptrans
