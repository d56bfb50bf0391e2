#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <string>

#include "ptrans/fit_result.hpp"

namespace ptrans::detail {

struct NewtonState {
  Eigen::VectorXd x;
  double value = 0.0;
  Eigen::VectorXd grad;
  int iterations = 0;
  bool converged = false;
  std::string diagnostic;
};

// Newton ascent with Armijo backtracking for concave (or locally concave)
// objectives.  eval(x, grad, hess) returns the objective value and fills
// grad/hess when the pointers are non-null; line-search probes pass nulls.
// Non-finite trial values are treated as rejected steps.  When the shifted
// Hessian fails to give an ascent direction the step falls back to the
// gradient.
template <class Eval>
NewtonState newton_maximize(Eval&& eval, Eigen::VectorXd x0, const NewtonOptions& opt) {
  NewtonState st;
  st.x = std::move(x0);
  const auto dim = st.x.size();
  Eigen::VectorXd grad(dim);
  Eigen::MatrixXd hess(dim, dim);
  st.value = eval(st.x, &grad, &hess);
  if (!std::isfinite(st.value)) {
    st.diagnostic = "objective not finite at the starting point";
    st.grad = grad;
    return st;
  }

  for (int iter = 0; iter < opt.max_iter; ++iter) {
    if (grad.lpNorm<Eigen::Infinity>() <= opt.grad_tol) {
      st.converged = true;
      break;
    }
    st.iterations = iter + 1;

    Eigen::MatrixXd a = -0.5 * (hess + hess.transpose());
    const double scale = std::max(1.0, a.diagonal().cwiseAbs().maxCoeff());
    double tau = 0.0;
    Eigen::VectorXd dir;
    bool have_dir = false;
    for (int attempt = 0; attempt < 12 && !have_dir; ++attempt) {
      Eigen::LDLT<Eigen::MatrixXd> ldlt(
          tau == 0.0 ? a : Eigen::MatrixXd(a + tau * Eigen::MatrixXd::Identity(dim, dim)));
      if (ldlt.info() == Eigen::Success) {
        dir = ldlt.solve(grad);
        have_dir = dir.allFinite() && dir.dot(grad) > 0.0;
      }
      if (!have_dir) tau = (tau == 0.0) ? 1e-8 * scale : 100.0 * tau;
    }
    if (!have_dir) dir = grad / scale;

    const double slope = grad.dot(dir);
    // Near the optimum the predicted gain sinks below the rounding noise of
    // the objective; without this allowance the full Newton step would be
    // rejected on noise alone.
    const double noise =
        64.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(st.value));
    double step = 1.0;
    bool accepted = false;
    for (int probe = 0; probe < 80; ++probe) {
      Eigen::VectorXd trial = st.x + step * dir;
      const double v = eval(trial, nullptr, nullptr);
      if (std::isfinite(v) && v >= st.value + opt.armijo_c * step * slope - noise) {
        st.x = std::move(trial);
        st.value = eval(st.x, &grad, &hess);
        accepted = true;
        break;
      }
      step *= opt.backtrack;
    }
    if (!accepted) {
      st.diagnostic = "line search stalled";
      break;
    }
  }

  if (!st.converged && grad.lpNorm<Eigen::Infinity>() <= opt.grad_tol) {
    st.converged = true;  // tolerance reached on the final iteration
  }
  if (!st.converged && st.diagnostic.empty()) {
    st.diagnostic = "iteration limit reached";
  }
  st.grad = grad;
  return st;
}

}  // namespace ptrans::detail
