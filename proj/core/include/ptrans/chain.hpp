#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ptrans/model.hpp"
#include "ptrans/quadrature.hpp"
#include "ptrans/rng.hpp"

namespace ptrans {

// Draws y_1..y_n of the chain by exact inverse-CDF sampling of each
// conditional.  The CDF is accumulated from the quadrature grid (piecewise
// polynomial through the node values) and inverted by bisection, giving
// CDF accuracy around 1e-9 for the toy model's smoothness range.
SampleSet sample_chain(const ConditionalEnergyModel& model, const ParamVector& theta,
                       int n, double y0, const QuadratureRule& rule, Rng& rng);

enum class Method { ml, ncd_param, ncd_semi, ncd_ignore };

std::string method_name(Method method);
std::optional<Method> parse_method(const std::string& name);

struct BenchmarkConfig {
  std::vector<int> n_values{500, 2000};
  std::vector<int> k_values{10, 30};
  int repetitions = 100;
  std::vector<Method> methods{Method::ml, Method::ncd_param, Method::ncd_semi,
                              Method::ncd_ignore};
  // theta_1 ~ U(range), theta_2 ~ U(range) per repetition unless fixed_theta.
  std::pair<double, double> theta1_range{-1.0, 1.0};
  std::pair<double, double> theta2_range{0.1, 10.0};
  std::optional<Eigen::Vector2d> fixed_theta;
  double y0 = 0.0;
  std::uint64_t seed = 0;
  int quad_nodes = kDefaultQuadratureNodes;
  // Penalty for ncd_semi; when absent it is chosen once per (n, k) cell by
  // cross-validation on a pilot repetition.
  std::optional<double> semi_lambda;
  int jobs = 0;  // 0: hardware concurrency
};

struct BenchmarkRow {
  std::string method;
  int n = 0;
  int k = 0;
  int rep = 0;
  double theta1_true = 0.0;
  double theta2_true = 0.0;
  std::optional<double> theta1_hat;
  std::optional<double> theta2_hat;
  double wall_ms = 0.0;
  std::string failure;  // empty on success

  bool ok() const { return failure.empty(); }
};

// Simulates repetitions of the toy benchmark.  Per repetition one chain is
// drawn and shared by every method in the cell; streams are derived from
// (seed, rep, n, k) so rows do not depend on scheduling order.  Rows come
// back sorted by (method, n, k, rep).
std::vector<BenchmarkRow> run_benchmark(const BenchmarkConfig& config);

struct SummaryRow {
  std::string method;
  int n = 0;
  int k = 0;
  int count = 0;     // successful repetitions
  int failures = 0;
  double bias1 = 0.0;
  double bias2 = 0.0;
  double rmse1 = 0.0;
  double rmse2 = 0.0;
};

std::vector<SummaryRow> summarize(const std::vector<BenchmarkRow>& rows);

}  // namespace ptrans
