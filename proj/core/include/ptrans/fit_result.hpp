#pragma once

#include <Eigen/Core>
#include <limits>
#include <optional>
#include <string>
#include <variant>

#include "ptrans/kernel.hpp"
#include "ptrans/model.hpp"

namespace ptrans {

struct NewtonOptions {
  int max_iter = 200;
  double grad_tol = 1e-8;
  double armijo_c = 1e-4;
  double backtrack = 0.5;
};

// Normalisation estimate attached to a fit: absent (plain ML), a scalar
// log-mass, one value per ancestor, or a kernel expansion over ancestors.
using NuEstimate =
    std::variant<std::monostate, double, Eigen::VectorXd, KernelExpansion>;

struct FitResult {
  ParamVector theta_hat;
  NuEstimate nu;
  std::optional<Eigen::MatrixXd> covariance;  // over theta only
  double objective = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  bool converged = false;
  std::string diagnostic;  // non-fatal notes: singular Hessian, iteration cap, ...

  // sga_fit only: raw final iterate behind the trailing average reported in
  // theta_hat / nu.
  std::optional<ParamVector> final_theta;
  std::optional<double> final_nu;
};

}  // namespace ptrans
