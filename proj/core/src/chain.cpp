#include "ptrans/chain.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

#include "ptrans/kernel.hpp"
#include "ptrans/ncd.hpp"

namespace ptrans {

namespace {

// Piecewise-cubic reconstruction of the conditional CDF from the density
// values at the quadrature nodes.  Knots are [lower, x_0, ..., x_{N-1},
// upper]; each gap integral is the exact integral of the Lagrange cubic
// through four neighbouring nodes, with coefficients precomputed from the
// node geometry (they do not depend on theta or the ancestor).
struct SamplerGrid {
  const QuadratureRule* rule = nullptr;
  Domain domain;
  std::vector<double> knots;              // N + 2 knots
  std::vector<std::array<double, 4>> coef;  // per gap: weights on g[s..s+3]
  std::vector<int> stencil;               // per gap: first node s of its cubic

  int gaps() const { return static_cast<int>(coef.size()); }
};

// Integral over [a, b] of the Lagrange basis polynomials on nodes
// xs[s..s+3], via 2-point Gauss (exact for cubics).
std::array<double, 4> cubic_weights(const Eigen::VectorXd& xs, int s, double a,
                                    double b) {
  const double h = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  const double q = h / std::sqrt(3.0);
  const double pts[2] = {mid - q, mid + q};
  std::array<double, 4> w{0.0, 0.0, 0.0, 0.0};
  for (double x : pts) {
    for (int l = 0; l < 4; ++l) {
      double v = 1.0;
      for (int j = 0; j < 4; ++j) {
        if (j != l) v *= (x - xs[s + j]) / (xs[s + l] - xs[s + j]);
      }
      w[l] += h * v;
    }
  }
  return w;
}

SamplerGrid make_grid(const QuadratureRule& rule, const Domain& domain) {
  const int nq = rule.size();
  if (nq < 8) {
    throw std::invalid_argument("chain sampler needs at least 8 quadrature nodes");
  }
  SamplerGrid grid;
  grid.rule = &rule;
  grid.domain = domain;
  grid.knots.resize(nq + 2);
  grid.knots.front() = domain.lower;
  for (int i = 0; i < nq; ++i) grid.knots[i + 1] = rule.nodes[i];
  grid.knots.back() = domain.upper;

  grid.coef.resize(nq + 1);
  grid.stencil.resize(nq + 1);
  for (int gap = 0; gap <= nq; ++gap) {
    // Gap runs from knots[gap] to knots[gap+1]; the cubic uses nodes
    // s..s+3 with s chosen to bracket the gap where possible.
    const int s = std::clamp(gap - 2, 0, nq - 4);
    grid.stencil[gap] = s;
    grid.coef[gap] = cubic_weights(rule.nodes, s, grid.knots[gap], grid.knots[gap + 1]);
  }
  return grid;
}

// Value of the interpolated unnormalised density at y inside `gap`.
double interp_density(const SamplerGrid& grid, const Eigen::VectorXd& g, int gap,
                      double y) {
  const int s = grid.stencil[gap];
  const Eigen::VectorXd& xs = grid.rule->nodes;
  double v = 0.0;
  for (int l = 0; l < 4; ++l) {
    double basis = 1.0;
    for (int j = 0; j < 4; ++j) {
      if (j != l) basis *= (y - xs[s + j]) / (xs[s + l] - xs[s + j]);
    }
    v += basis * g[s + l];
  }
  return std::max(v, 0.0);
}

// Integral of the interpolated density over [knots[gap], y] by 8-point
// composite Gauss on the cubic (cheap closed-form alternative would do;
// this keeps the same code path for clamped densities).
double partial_gap_integral(const SamplerGrid& grid, const Eigen::VectorXd& g, int gap,
                            double y) {
  const double a = grid.knots[gap];
  if (y <= a) return 0.0;
  const double h = 0.5 * (y - a);
  const double mid = 0.5 * (a + y);
  const double q = h / std::sqrt(3.0);
  return h * (interp_density(grid, g, gap, mid - q) +
              interp_density(grid, g, gap, mid + q));
}

double draw_conditional(const ConditionalEnergyModel& model, const ParamVector& theta,
                        double y_prev, const SamplerGrid& grid, Rng& rng) {
  const QuadratureRule& rule = *grid.rule;
  const int nq = rule.size();

  Eigen::VectorXd e(nq);
  double mx = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < nq; ++i) {
    e[i] = model.energy(theta, rule.nodes[i], y_prev);
    mx = std::max(mx, e[i]);
  }
  if (!std::isfinite(mx)) {
    throw std::runtime_error("energy not finite on the sampling grid");
  }
  Eigen::VectorXd g(nq);
  for (int i = 0; i < nq; ++i) g[i] = std::exp(e[i] - mx);

  const int gaps = grid.gaps();
  std::vector<double> cum(gaps + 1, 0.0);
  for (int gap = 0; gap < gaps; ++gap) {
    const auto& c = grid.coef[gap];
    const int s = grid.stencil[gap];
    const double inc = c[0] * g[s] + c[1] * g[s + 1] + c[2] * g[s + 2] + c[3] * g[s + 3];
    cum[gap + 1] = cum[gap] + std::max(inc, 0.0);
  }
  const double total = cum.back();
  if (!(total > 0.0)) {
    throw std::runtime_error("conditional density vanished on the grid");
  }

  const double target = uniform01(rng) * total;
  int gap = static_cast<int>(std::upper_bound(cum.begin(), cum.end(), target) -
                             cum.begin()) -
            1;
  gap = std::clamp(gap, 0, gaps - 1);

  // Bisection on the continuous CDF within the gap.
  double lo = grid.knots[gap];
  double hi = grid.knots[gap + 1];
  const double want = target - cum[gap];
  for (int it = 0; it < 80 && hi - lo > 1e-14; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (partial_gap_integral(grid, g, gap, mid) < want) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

SampleSet sample_chain(const ConditionalEnergyModel& model, const ParamVector& theta,
                       int n, double y0, const QuadratureRule& rule, Rng& rng) {
  if (n < 1) throw std::invalid_argument("need at least one draw");
  if (theta.size() != model.dim) {
    throw std::invalid_argument("parameter vector has the wrong dimension");
  }
  if (!model.domain.contains(y0)) {
    throw std::domain_error("initial point outside the domain");
  }
  const SamplerGrid grid = make_grid(rule, model.domain);

  SampleSet out;
  out.initial = y0;
  out.points.resize(static_cast<std::size_t>(n));
  double prev = y0;
  for (int t = 0; t < n; ++t) {
    prev = draw_conditional(model, theta, prev, grid, rng);
    out.points[static_cast<std::size_t>(t)] = prev;
  }
  return out;
}

std::string method_name(Method method) {
  switch (method) {
    case Method::ml: return "ml";
    case Method::ncd_param: return "ncd-param";
    case Method::ncd_semi: return "ncd-semi";
    case Method::ncd_ignore: return "ncd-ignore";
  }
  return "unknown";
}

std::optional<Method> parse_method(const std::string& name) {
  if (name == "ml") return Method::ml;
  if (name == "ncd-param") return Method::ncd_param;
  if (name == "ncd-semi") return Method::ncd_semi;
  if (name == "ncd-ignore") return Method::ncd_ignore;
  return std::nullopt;
}

namespace {

struct Cell {
  int n = 0;
  int k = 0;
  double semi_lambda = 1e-4;
};

// One repetition within one (n, k) cell: simulate, build the shared
// dataset, run every configured method.
void run_cell_rep(const BenchmarkConfig& config, const ConditionalEnergyModel& model,
                  const QuadratureRule& rule, const Cell& cell, int rep,
                  std::vector<BenchmarkRow>& out) {
  Eigen::Vector2d theta_true;
  {
    // theta depends on (seed, rep) only, so every cell sees the same draw.
    Rng rng = make_rng(derive_seed(config.seed, 0xA11CEu, rep));
    theta_true[0] = uniform(rng, config.theta1_range.first, config.theta1_range.second);
    theta_true[1] = uniform(rng, config.theta2_range.first, config.theta2_range.second);
    if (config.fixed_theta) theta_true = *config.fixed_theta;
  }

  Rng chain_rng = make_rng(derive_seed(config.seed, 0xC0A1u, rep, cell.n));
  const SampleSet chain =
      sample_chain(model, theta_true, cell.n, config.y0, rule, chain_rng);

  const ReferenceDensity q = uniform_reference(model.domain);
  Rng noise_rng = make_rng(derive_seed(config.seed, 0x901EEu, rep, cell.n, cell.k));
  const NcdDataset dataset = build_dataset(chain, q, cell.k, noise_rng);

  for (Method method : config.methods) {
    BenchmarkRow row;
    row.method = method_name(method);
    row.n = cell.n;
    row.k = cell.k;
    row.rep = rep;
    row.theta1_true = theta_true[0];
    row.theta2_true = theta_true[1];

    const auto started = std::chrono::steady_clock::now();
    try {
      Eigen::VectorXd theta_hat;
      bool converged = false;
      std::string diagnostic;
      if (method == Method::ml) {
        const FitResult fit = fit_ml(model, chain, rule);
        theta_hat = fit.theta_hat;
        converged = fit.converged;
        diagnostic = fit.diagnostic;
      } else {
        LogisticFit fit;
        if (method == Method::ncd_param) {
          fit = fit_ncd_param(model, dataset);
        } else if (method == Method::ncd_ignore) {
          fit = fit_ncd_ignore(model, dataset);
        } else {
          const Kernel kernel{median_bandwidth(dataset.ancestors)};
          fit = fit_ncd_semi(model, dataset, kernel, cell.semi_lambda);
        }
        theta_hat = fit.theta_hat;
        converged = fit.converged;
        diagnostic = fit.diagnostic;
      }
      if (!converged) {
        row.failure = diagnostic.empty() ? "did not converge" : diagnostic;
      } else if (!theta_hat.allFinite()) {
        row.failure = "non-finite estimate";
      } else {
        row.theta1_hat = theta_hat[0];
        row.theta2_hat = theta_hat[1];
      }
    } catch (const std::exception& err) {
      row.failure = err.what();
    }
    row.wall_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - started)
                      .count();
    out.push_back(std::move(row));
  }
}

}  // namespace

std::vector<BenchmarkRow> run_benchmark(const BenchmarkConfig& config) {
  if (config.repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");
  if (config.n_values.empty() || config.k_values.empty() || config.methods.empty()) {
    throw std::invalid_argument("benchmark needs n values, k values and methods");
  }
  for (int n : config.n_values) {
    if (n < 2) throw std::invalid_argument("benchmark n must be >= 2");
  }
  for (int k : config.k_values) {
    if (k < 1) throw std::invalid_argument("benchmark k must be >= 1");
  }
  if (!(config.theta2_range.first > 0.0) && !config.fixed_theta) {
    throw std::invalid_argument("theta2 range must be positive");
  }

  const ConditionalEnergyModel model = toy_model();
  const QuadratureRule rule = gauss_legendre(config.quad_nodes, model.domain);

  // Resolve the semi penalty per cell before going parallel: one pilot
  // repetition (index = repetitions, outside the reported range) feeds
  // cross-validation.
  const bool want_semi =
      std::find(config.methods.begin(), config.methods.end(), Method::ncd_semi) !=
      config.methods.end();
  std::vector<Cell> cells;
  for (int n : config.n_values) {
    for (int k : config.k_values) {
      Cell cell{n, k, config.semi_lambda.value_or(1e-4)};
      if (want_semi && !config.semi_lambda) {
        Eigen::Vector2d theta_pilot;
        const int pilot_rep = config.repetitions;
        {
          Rng rng = make_rng(derive_seed(config.seed, 0xA11CEu, pilot_rep));
          theta_pilot[0] =
              uniform(rng, config.theta1_range.first, config.theta1_range.second);
          theta_pilot[1] =
              uniform(rng, config.theta2_range.first, config.theta2_range.second);
          if (config.fixed_theta) theta_pilot = *config.fixed_theta;
        }
        Rng chain_rng = make_rng(derive_seed(config.seed, 0xC0A1u, pilot_rep, n));
        const SampleSet chain =
            sample_chain(model, theta_pilot, n, config.y0, rule, chain_rng);
        const ReferenceDensity q = uniform_reference(model.domain);
        Rng noise_rng = make_rng(derive_seed(config.seed, 0x901EEu, pilot_rep, n, k));
        const NcdDataset dataset = build_dataset(chain, q, k, noise_rng);
        const Kernel kernel{median_bandwidth(dataset.ancestors)};
        Rng cv_rng = make_rng(derive_seed(config.seed, 0xCFu, n, k));
        cell.semi_lambda = select_lambda(model, dataset, kernel, default_lambda_grid(),
                                         5, cv_rng);
      }
      cells.push_back(cell);
    }
  }

  // Work items are (cell, repetition); streams are derived, so scheduling
  // cannot influence results.
  struct Item {
    int cell = 0;
    int rep = 0;
  };
  std::vector<Item> items;
  items.reserve(cells.size() * static_cast<std::size_t>(config.repetitions));
  for (std::size_t c = 0; c < cells.size(); ++c) {
    for (int rep = 0; rep < config.repetitions; ++rep) {
      items.push_back({static_cast<int>(c), rep});
    }
  }

  int jobs = config.jobs > 0 ? config.jobs
                             : static_cast<int>(std::thread::hardware_concurrency());
  jobs = std::max(1, std::min<int>(jobs, static_cast<int>(items.size())));

  std::vector<std::vector<BenchmarkRow>> partial(items.size());
  if (jobs == 1) {
    for (std::size_t i = 0; i < items.size(); ++i) {
      run_cell_rep(config, model, rule, cells[static_cast<std::size_t>(items[i].cell)],
                   items[i].rep, partial[i]);
    }
  } else {
    std::vector<std::thread> workers;
    workers.reserve(static_cast<std::size_t>(jobs));
    for (int w = 0; w < jobs; ++w) {
      workers.emplace_back([&, w]() {
        for (std::size_t i = static_cast<std::size_t>(w); i < items.size();
             i += static_cast<std::size_t>(jobs)) {
          run_cell_rep(config, model, rule,
                       cells[static_cast<std::size_t>(items[i].cell)], items[i].rep,
                       partial[i]);
        }
      });
    }
    for (std::thread& worker : workers) worker.join();
  }

  std::vector<BenchmarkRow> rows;
  rows.reserve(items.size() * config.methods.size());
  for (std::vector<BenchmarkRow>& chunk : partial) {
    for (BenchmarkRow& row : chunk) rows.push_back(std::move(row));
  }
  std::sort(rows.begin(), rows.end(), [](const BenchmarkRow& a, const BenchmarkRow& b) {
    if (a.method != b.method) return a.method < b.method;
    if (a.n != b.n) return a.n < b.n;
    if (a.k != b.k) return a.k < b.k;
    return a.rep < b.rep;
  });
  return rows;
}

std::vector<SummaryRow> summarize(const std::vector<BenchmarkRow>& rows) {
  if (rows.empty()) throw std::invalid_argument("no benchmark rows to summarize");
  std::vector<SummaryRow> out;
  auto find = [&out](const BenchmarkRow& row) -> SummaryRow& {
    for (SummaryRow& s : out) {
      if (s.method == row.method && s.n == row.n && s.k == row.k) return s;
    }
    out.push_back(SummaryRow{row.method, row.n, row.k, 0, 0, 0, 0, 0, 0});
    return out.back();
  };
  for (const BenchmarkRow& row : rows) {
    SummaryRow& s = find(row);
    if (!row.ok()) {
      s.failures += 1;
      continue;
    }
    const double e1 = *row.theta1_hat - row.theta1_true;
    const double e2 = *row.theta2_hat - row.theta2_true;
    s.count += 1;
    s.bias1 += e1;
    s.bias2 += e2;
    s.rmse1 += e1 * e1;
    s.rmse2 += e2 * e2;
  }
  for (SummaryRow& s : out) {
    if (s.count > 0) {
      s.bias1 /= s.count;
      s.bias2 /= s.count;
      s.rmse1 = std::sqrt(s.rmse1 / s.count);
      s.rmse2 = std::sqrt(s.rmse2 / s.count);
    }
  }
  std::sort(out.begin(), out.end(), [](const SummaryRow& a, const SummaryRow& b) {
    if (a.method != b.method) return a.method < b.method;
    if (a.n != b.n) return a.n < b.n;
    return a.k < b.k;
  });
  return out;
}

}  // namespace ptrans
