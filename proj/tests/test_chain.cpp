#include <doctest.h>

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <functional>
#include <ptrans/chain.hpp>
#include <ptrans/rng.hpp>
#include <stdexcept>
#include <tuple>
#include <vector>

using namespace ptrans;

namespace {

// two-sided Kolmogorov-Smirnov statistic against a cdf
double ks_statistic(std::vector<double> draws, const std::function<double(double)>& cdf) {
  std::sort(draws.begin(), draws.end());
  const double n = static_cast<double>(draws.size());
  double d = 0.0;
  for (std::size_t i = 0; i < draws.size(); ++i) {
    const double f = cdf(draws[i]);
    d = std::max(d, std::abs(f - static_cast<double>(i) / n));
    d = std::max(d, std::abs(f - static_cast<double>(i + 1) / n));
  }
  return d;
}

double lag1_autocorr(const std::vector<double>& y) {
  const std::size_t n = y.size();
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(n);
  double num = 0.0, den = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    den += (y[t] - mean) * (y[t] - mean);
    if (t + 1 < n) num += (y[t] - mean) * (y[t + 1] - mean);
  }
  return num / den;
}

}  // namespace

TEST_CASE("chain sampling is deterministic in the seed") {
  const ConditionalEnergyModel model = toy_model();
  const QuadratureRule rule = gauss_legendre(kDefaultQuadratureNodes, model.domain);
  Eigen::VectorXd theta(2);
  theta << 0.5, 3.0;
  Rng a = make_rng(201), b = make_rng(201), c = make_rng(202);
  const SampleSet sa = sample_chain(model, theta, 50, 0.0, rule, a);
  const SampleSet sb = sample_chain(model, theta, 50, 0.0, rule, b);
  const SampleSet sc = sample_chain(model, theta, 50, 0.0, rule, c);
  CHECK(sa.points == sb.points);
  CHECK(sa.points != sc.points);
  CHECK(sa.initial == 0.0);
  REQUIRE(sa.size() == 50);
  for (double y : sa.points) {
    CHECK(y >= -1.0);
    CHECK(y <= 1.0);
  }
}

TEST_CASE("sampler matches the analytic law in the iid case") {
  const ConditionalEnergyModel model = toy_model();
  const QuadratureRule rule = gauss_legendre(kDefaultQuadratureNodes, model.domain);
  Eigen::VectorXd theta(2);
  theta << 1.0, 0.0;
  Rng rng = make_rng(203);
  const SampleSet s = sample_chain(model, theta, 20000, 0.0, rule, rng);

  // density proportional to e^y on [-1,1]
  const double z = 2.3504023872876028;
  const double d = ks_statistic(s.points, [&](double y) {
    return (std::exp(y) - std::exp(-1.0)) / z;
  });
  CHECK(d <= 1.6276 / std::sqrt(20000.0));  // 0.01 level

  double mean = 0.0;
  for (double y : s.points) mean += y;
  mean /= 20000.0;
  CHECK(mean == doctest::Approx(0.31303528549933135).epsilon(0.06));
}

TEST_CASE("uniform chain has flat marginals and no memory") {
  const ConditionalEnergyModel model = toy_model();
  const QuadratureRule rule = gauss_legendre(kDefaultQuadratureNodes, model.domain);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(2);
  Rng rng = make_rng(205);
  const int n = 100000;
  const SampleSet s = sample_chain(model, zero, n, 0.0, rule, rng);

  double mean = 0.0;
  for (double y : s.points) mean += y;
  mean /= n;
  CHECK(std::abs(mean) <= 3.0 / std::sqrt(3.0 * n));
  CHECK(std::abs(lag1_autocorr(s.points)) <= 3.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("negative drift strengthens with the quadratic pull") {
  const ConditionalEnergyModel model = toy_model();
  const QuadratureRule rule = gauss_legendre(kDefaultQuadratureNodes, model.domain);
  const int n = 10000;

  Eigen::VectorXd drift(2), mild(2);
  drift << -2.0, 10.0;
  mild << 0.0, 2.0;
  Rng r1 = make_rng(207), r2 = make_rng(208);
  const SampleSet sd = sample_chain(model, drift, n, 0.0, rule, r1);
  const SampleSet sm = sample_chain(model, mild, n, 0.0, rule, r2);

  double mean = 0.0;
  for (double y : sd.points) mean += y;
  mean /= n;
  CHECK(mean < -3.0 / std::sqrt(static_cast<double>(n)));
  CHECK(lag1_autocorr(sd.points) >
        lag1_autocorr(sm.points) + 3.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("sampler argument validation") {
  const ConditionalEnergyModel model = toy_model();
  const QuadratureRule rule = gauss_legendre(101, model.domain);
  const QuadratureRule tiny = gauss_legendre(4, model.domain);
  Eigen::VectorXd theta(2);
  theta << 0.0, 1.0;
  Rng rng = make_rng(209);
  CHECK_THROWS_AS(sample_chain(model, theta, 0, 0.0, rule, rng), std::invalid_argument);
  CHECK_THROWS_AS(sample_chain(model, theta, 5, 2.0, rule, rng), std::domain_error);
  CHECK_THROWS_AS(sample_chain(model, theta, 5, 0.0, tiny, rng), std::invalid_argument);
}

TEST_CASE("method names round-trip") {
  for (Method m : {Method::ml, Method::ncd_param, Method::ncd_semi, Method::ncd_ignore}) {
    const auto parsed = parse_method(method_name(m));
    REQUIRE(parsed.has_value());
    CHECK(*parsed == m);
  }
  CHECK(method_name(Method::ml) == "ml");
  CHECK(method_name(Method::ncd_param) == "ncd-param");
  CHECK(method_name(Method::ncd_semi) == "ncd-semi");
  CHECK(method_name(Method::ncd_ignore) == "ncd-ignore");
  CHECK(!parse_method("poisson").has_value());
}

TEST_CASE("benchmark harness produces sorted deterministic rows") {
  BenchmarkConfig config;
  config.n_values = {30};
  config.k_values = {3};
  config.repetitions = 2;
  config.seed = 11;
  config.semi_lambda = 1e-3;
  config.jobs = 1;

  const std::vector<BenchmarkRow> rows = run_benchmark(config);
  REQUIRE(rows.size() == 8);  // 4 methods x 2 reps

  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto key = [](const BenchmarkRow& r) {
      return std::make_tuple(r.method, r.n, r.k, r.rep);
    };
    CHECK(key(rows[i - 1]) < key(rows[i]));
  }
  for (const BenchmarkRow& row : rows) {
    CHECK(row.n == 30);
    CHECK(row.k == 3);
    CHECK(row.theta1_true >= -1.0);
    CHECK(row.theta1_true <= 1.0);
    CHECK(row.theta2_true >= 0.1);
    CHECK(row.theta2_true <= 10.0);
    if (row.ok()) {
      CHECK(std::isfinite(*row.theta1_hat));
      CHECK(std::isfinite(*row.theta2_hat));
    }
    CHECK(row.wall_ms >= 0.0);
  }

  // same config again: byte-identical rows
  const std::vector<BenchmarkRow> again = run_benchmark(config);
  REQUIRE(again.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].method == again[i].method);
    CHECK(rows[i].theta1_true == again[i].theta1_true);
    if (rows[i].ok() && again[i].ok()) {
      CHECK(*rows[i].theta1_hat == *again[i].theta1_hat);
      CHECK(*rows[i].theta2_hat == *again[i].theta2_hat);
    }
  }

  // parallel scheduling cannot change any value
  BenchmarkConfig par = config;
  par.jobs = 3;
  const std::vector<BenchmarkRow> parallel = run_benchmark(par);
  REQUIRE(parallel.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].theta1_true == parallel[i].theta1_true);
    if (rows[i].ok() && parallel[i].ok()) {
      CHECK(*rows[i].theta1_hat == *parallel[i].theta1_hat);
    }
  }
}

TEST_CASE("benchmark honours a fixed truth") {
  BenchmarkConfig config;
  config.n_values = {25};
  config.k_values = {2};
  config.repetitions = 2;
  config.methods = {Method::ml};
  Eigen::Vector2d fixed;
  fixed << -0.5, 2.0;
  config.fixed_theta = fixed;
  config.seed = 13;
  config.jobs = 1;

  const auto rows = run_benchmark(config);
  REQUIRE(rows.size() == 2);
  for (const auto& row : rows) {
    CHECK(row.theta1_true == -0.5);
    CHECK(row.theta2_true == 2.0);
  }
}

TEST_CASE("summaries aggregate the rows") {
  BenchmarkRow a;
  a.method = "ml";
  a.n = 10;
  a.k = 2;
  a.rep = 0;
  a.theta1_true = 1.0;
  a.theta2_true = 2.0;
  a.theta1_hat = 1.1;
  a.theta2_hat = 1.8;
  BenchmarkRow b = a;
  b.rep = 1;
  b.theta1_hat = 0.9;
  b.theta2_hat = 2.2;
  BenchmarkRow fail = a;
  fail.rep = 2;
  fail.theta1_hat.reset();
  fail.theta2_hat.reset();
  fail.failure = "did not converge";

  const auto summary = summarize({a, b, fail});
  REQUIRE(summary.size() == 1);
  CHECK(summary[0].count == 2);
  CHECK(summary[0].failures == 1);
  CHECK(summary[0].bias1 == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(summary[0].bias2 == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(summary[0].rmse1 == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(summary[0].rmse2 == doctest::Approx(0.2).epsilon(1e-12));
  CHECK_THROWS_AS(summarize({}), std::invalid_argument);
}
