#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <ptrans/chain.hpp>
#include <ptrans/poisson.hpp>
#include <ptrans/rng.hpp>
#include <stdexcept>

#include "fd.hpp"

using namespace ptrans;

namespace {

SampleSet iid_data(int n, std::uint64_t seed) {
  const ConditionalEnergyModel model = toy_iid_model();
  const QuadratureRule rule = gauss_legendre(kDefaultQuadratureNodes, model.domain);
  Eigen::VectorXd truth(2);
  truth << 1.0, 2.0;
  Rng rng = make_rng(seed);
  return sample_chain(model, truth, n, 0.0, rule, rng);
}

SampleSet chain_data(int n, std::uint64_t seed) {
  const ConditionalEnergyModel model = toy_model();
  const QuadratureRule rule = gauss_legendre(kDefaultQuadratureNodes, model.domain);
  Eigen::VectorXd truth(2);
  truth << 0.8, 4.0;
  Rng rng = make_rng(seed);
  return sample_chain(model, truth, n, 0.0, rule, rng);
}

}  // namespace

TEST_CASE("profiled objective reproduces the log likelihood minus n") {
  const ConditionalEnergyModel model = toy_iid_model();
  const QuadratureRule rule = gauss_legendre(kDefaultQuadratureNodes, model.domain);
  SampleSet s;
  s.initial = 0.0;
  s.points = {0.1, -0.2, 0.3, 0.9, -0.8};

  // theta = 0: L = -5 log 2, so M = -5 log 2 - 5
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(2);
  const double nu0 = nu_star(model, zero, s.initial, rule);
  CHECK(m_objective(model, zero, nu0, s, rule) ==
        doctest::Approx(-8.465735902799727).epsilon(1e-13));

  Rng rng = make_rng(41);
  for (int rep = 0; rep < 5; ++rep) {
    Eigen::VectorXd theta(2);
    theta << uniform(rng, -3.0, 3.0), uniform(rng, 0.0, 60.0);
    const double nu = nu_star(model, theta, s.initial, rule);
    const double m = m_objective(model, theta, nu, s, rule);
    const double l = exact_loglik(model, theta, s, rule);
    CHECK(std::abs(m - (l - static_cast<double>(s.size()))) <= 1e-9);
  }
}

TEST_CASE("joint objective derivatives match finite differences") {
  const ConditionalEnergyModel model = toy_iid_model();
  const QuadratureRule rule = gauss_legendre(201, model.domain);
  const SampleSet s = iid_data(40, 43);

  Rng rng = make_rng(44);
  for (int rep = 0; rep < 5; ++rep) {
    Eigen::VectorXd x(3);
    x << uniform(rng, -2.0, 2.0), uniform(rng, 0.0, 10.0), uniform(rng, -2.0, 1.0);
    const auto obj = [&](const Eigen::VectorXd& v) {
      return m_objective(model, v.head(2), v[2], s, rule);
    };
    CHECK(rel_error(m_grad(model, x.head(2), x[2], s, rule), central_gradient(obj, x)) <=
          1e-6);
    const Eigen::MatrixXd fd_hess = central_jacobian(
        [&](const Eigen::VectorXd& v) {
          return m_grad(model, v.head(2), v[2], s, rule).eval();
        },
        x);
    CHECK(rel_error(m_hessian(model, x.head(2), x[2], s, rule), fd_hess) <= 1e-6);
  }
}

TEST_CASE("mass balance at the optimal log-mass") {
  const ConditionalEnergyModel model = toy_iid_model();
  const QuadratureRule rule = gauss_legendre(kDefaultQuadratureNodes, model.domain);
  const SampleSet s = iid_data(30, 47);
  Eigen::VectorXd theta(2);
  theta << -0.5, 3.0;
  const double nu = nu_star(model, theta, s.initial, rule);
  const Eigen::VectorXd g = m_grad(model, theta, nu, s, rule);
  CHECK(std::abs(g[2]) <= 1e-9);  // n - mass vanishes at nu*
}

TEST_CASE("joint fit agrees with maximum likelihood") {
  const ConditionalEnergyModel model = toy_iid_model();
  const QuadratureRule rule = gauss_legendre(kDefaultQuadratureNodes, model.domain);
  const SampleSet s = iid_data(500, 51);

  const FitResult ml = fit_ml(model, s, rule);
  const FitResult pois = fit_poisson_joint(model, s, rule);
  REQUIRE(ml.converged);
  REQUIRE(pois.converged);
  CHECK((pois.theta_hat - ml.theta_hat).lpNorm<Eigen::Infinity>() <= 1e-6);

  const double nu_hat = std::get<double>(pois.nu);
  CHECK(nu_hat == doctest::Approx(nu_star(model, pois.theta_hat, s.initial, rule))
                      .epsilon(1e-8));
  CHECK(pois.objective ==
        doctest::Approx(exact_loglik(model, pois.theta_hat, s, rule) - 500.0)
            .epsilon(1e-9));

  // confidence matrix from the joint hessian equals the inverse information
  REQUIRE(ml.covariance.has_value());
  REQUIRE(pois.covariance.has_value());
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      const double a = (*pois.covariance)(i, j);
      const double b = (*ml.covariance)(i, j);
      CHECK(std::abs(a - b) <= 1e-6 * std::max(std::abs(b), 1e-12));
    }
  }
}

TEST_CASE("confidence extraction rejects a singular mass block") {
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(3, 3);
  h(0, 0) = -1.0;
  h(1, 1) = -1.0;
  h(2, 2) = 0.0;  // no curvature in nu
  CHECK_THROWS_AS(confidence_from_m(h), std::runtime_error);
}

TEST_CASE("sequential objective reduces to the likelihood at per-ancestor optima") {
  const ConditionalEnergyModel model = toy_model();
  const QuadratureRule rule = gauss_legendre(kDefaultQuadratureNodes, model.domain);
  const SampleSet s = chain_data(25, 53);

  Eigen::VectorXd theta(2);
  theta << 0.4, 2.5;
  Eigen::VectorXd nu(s.size());
  for (std::size_t t = 0; t < s.size(); ++t) {
    nu[static_cast<Eigen::Index>(t)] = nu_star(model, theta, s.ancestor(t), rule);
  }
  const double m = m_seq_objective(model, theta, nu, s, rule);
  const double l = exact_loglik(model, theta, s, rule);
  CHECK(std::abs(m - (l - static_cast<double>(s.size()))) <= 1e-10);
}

TEST_CASE("sequential gradient matches finite differences") {
  const ConditionalEnergyModel model = toy_model();
  const QuadratureRule rule = gauss_legendre(201, model.domain);
  const SampleSet s = chain_data(8, 59);

  Rng rng = make_rng(60);
  Eigen::VectorXd x(2 + 8);
  x << uniform(rng, -2.0, 2.0), uniform(rng, 0.0, 8.0), 0.3, -0.2, 0.7, -0.5, 0.1, 0.9,
      -0.4, 0.2;
  const auto obj = [&](const Eigen::VectorXd& v) {
    return m_seq_objective(model, v.head(2), v.tail(8), s, rule);
  };
  CHECK(rel_error(m_seq_grad(model, x.head(2), x.tail(8), s, rule),
                  central_gradient(obj, x)) <= 1e-6);
}

TEST_CASE("smoothed objective at zero coefficients equals the sequential one") {
  const ConditionalEnergyModel model = toy_model();
  const QuadratureRule rule = gauss_legendre(201, model.domain);
  const SampleSet s = chain_data(12, 61);

  KernelExpansion chi;
  chi.kernel = Kernel{0.7};
  for (std::size_t t = 0; t < s.size(); ++t) chi.centers.push_back(s.ancestor(t));
  chi.alpha = Eigen::VectorXd::Zero(12);

  Eigen::VectorXd theta(2);
  theta << 0.6, 1.5;
  const PenaltyConfig none{0.0};
  CHECK(m_chi_objective(model, theta, chi, none, s, rule) ==
        doctest::Approx(m_seq_objective(model, theta, Eigen::VectorXd::Zero(12), s, rule))
            .epsilon(1e-13));

  // penalty enters as -lambda alpha' K alpha
  Rng rng = make_rng(62);
  for (int i = 0; i < 12; ++i) chi.alpha[i] = uniform(rng, -0.3, 0.3);
  const PenaltyConfig pen{0.8};
  const double with = m_chi_objective(model, theta, chi, pen, s, rule);
  const double without = m_chi_objective(model, theta, chi, none, s, rule);
  const Eigen::MatrixXd k = gram(chi.kernel, chi.centers);
  CHECK(with == doctest::Approx(without - 0.8 * chi.alpha.dot(k * chi.alpha))
                    .epsilon(1e-12));
}

TEST_CASE("smoothed gradient matches finite differences") {
  const ConditionalEnergyModel model = toy_model();
  const QuadratureRule rule = gauss_legendre(201, model.domain);
  const SampleSet s = chain_data(6, 67);

  KernelExpansion chi;
  chi.kernel = Kernel{0.7};
  for (std::size_t t = 0; t < s.size(); ++t) chi.centers.push_back(s.ancestor(t));
  chi.alpha = Eigen::VectorXd::Zero(6);
  const PenaltyConfig pen{0.3};

  Rng rng = make_rng(68);
  Eigen::VectorXd x(2 + 6);
  x[0] = uniform(rng, -2.0, 2.0);
  x[1] = uniform(rng, 0.0, 8.0);
  for (int i = 2; i < 8; ++i) x[i] = uniform(rng, -0.5, 0.5);

  const auto obj = [&](const Eigen::VectorXd& v) {
    KernelExpansion c = chi;
    c.alpha = v.tail(6);
    return m_chi_objective(model, v.head(2), c, pen, s, rule);
  };
  KernelExpansion at = chi;
  at.alpha = x.tail(6);
  CHECK(rel_error(m_chi_grad(model, x.head(2), at, pen, s, rule),
                  central_gradient(obj, x)) <= 1e-6);
}

TEST_CASE("smoothed objective rejects foreign centers") {
  const ConditionalEnergyModel model = toy_model();
  const QuadratureRule rule = gauss_legendre(101, model.domain);
  const SampleSet s = chain_data(4, 69);
  KernelExpansion chi;
  chi.kernel = Kernel{0.7};
  chi.centers = {0.0, 0.1, 0.2, 0.3};  // not the ancestors
  chi.alpha = Eigen::VectorXd::Zero(4);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(2);
  CHECK_THROWS_AS(m_chi_objective(model, theta, chi, PenaltyConfig{}, s, rule),
                  std::invalid_argument);
}

TEST_CASE("smoothed fit approaches the profiled optimum for small penalties") {
  const ConditionalEnergyModel model = toy_model();
  const QuadratureRule rule = gauss_legendre(kDefaultQuadratureNodes, model.domain);
  const SampleSet s = chain_data(80, 71);

  const FitResult ml = fit_ml(model, s, rule);
  REQUIRE(ml.converged);
  const double target = ml.objective - static_cast<double>(s.size());

  const Kernel kernel{median_bandwidth(std::vector<double>(
      s.points.begin(), s.points.end()))};
  const FitResult fit = fit_poisson_chi(model, s, rule, kernel, PenaltyConfig{1e-6});
  REQUIRE(fit.converged);
  // the free per-ancestor optimum bounds every smoothed fit from above
  CHECK(fit.objective <= target + 1e-6);
  CHECK(fit.objective >= target - 0.05);
  CHECK(std::holds_alternative<KernelExpansion>(fit.nu));
}

TEST_CASE("penalty path is monotone and ordered like its grid") {
  const ConditionalEnergyModel model = toy_model();
  const QuadratureRule rule = gauss_legendre(kDefaultQuadratureNodes, model.domain);
  const SampleSet s = chain_data(60, 73);
  const Kernel kernel{0.6};

  const std::vector<double> grid{10.0, 0.1, 1e-3, 1e-6};
  const auto path = lambda_path(model, s, rule, kernel, grid);
  REQUIRE(path.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(path[i].first == grid[i]);
  for (std::size_t i = 1; i < 4; ++i) CHECK(path[i].second >= path[i - 1].second - 1e-8);
}

TEST_CASE("joint concavity for the exponential-family toy") {
  const ConditionalEnergyModel model = toy_iid_model();
  const QuadratureRule rule = gauss_legendre(kDefaultQuadratureNodes, model.domain);
  const SampleSet s = iid_data(50, 79);

  std::vector<ParamVector> thetas;
  Rng rng = make_rng(80);
  for (int i = 0; i < 10; ++i) {
    Eigen::VectorXd t(2);
    t << uniform(rng, -3.0, 3.0), uniform(rng, 0.0, 60.0);
    thetas.push_back(t);
  }
  const ConcavityReport report =
      check_concavity(model, thetas, {-2.0, 0.0, 1.0}, s, rule);
  CHECK(report.all_concave);
  CHECK(report.max_eigenvalue <= 1e-8);
  CHECK(report.points_checked == 30);

  ConditionalEnergyModel bare = toy_model();
  bare.suff_stats = nullptr;
  CHECK_THROWS_AS(check_concavity(bare, thetas, {0.0}, s, rule), std::invalid_argument);
}
