#include "minmarg/solver.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace minmarg {

namespace {

double sign_of(double s) { return (s > 0.0) - (s < 0.0); }

struct Layout {
  int n, m;
  int cols;  // n*m unknowns
  int rows;  // n*m marginal rows + (n-1) gauge rows
};

Layout layout_of(const Mesh& mesh) {
  Layout l;
  l.n = mesh.dim();
  l.m = mesh.cells();
  l.cols = l.n * l.m;
  l.rows = l.cols + (l.n - 1);
  return l;
}

void check_shapes(const PotentialSet& potentials,
                  const std::vector<MarginalTable>* marginals,
                  const Mesh& mesh, const MeasureWeights* weights) {
  const auto n = static_cast<std::size_t>(mesh.dim());
  const auto m = static_cast<std::size_t>(mesh.cells());
  if (potentials.phis.size() != n)
    throw std::invalid_argument("potential set needs one table per axis");
  for (const auto& phi : potentials.phis)
    if (phi.size() != m)
      throw std::invalid_argument("potential table length does not match the mesh");
  if (!(potentials.p > 1.0))
    throw std::invalid_argument("norm exponent must satisfy p > 1");
  if (marginals) require_common_mass(*marginals, mesh);
  if (weights) {
    if (!weights->cell.empty() && weights->cell.size() != mesh.cell_count())
      throw std::invalid_argument("cell weight table size does not match the mesh");
    if (!weights->gauge.empty()) {
      if (weights->gauge.size() != n)
        throw std::invalid_argument("need one gauge weight table per axis");
      for (const auto& w : weights->gauge)
        if (w.size() != m)
          throw std::invalid_argument("gauge weight length does not match the mesh");
    }
  }
}

std::vector<double> flatten(const PotentialSet& potentials) {
  std::vector<double> x;
  for (const auto& phi : potentials.phis)
    x.insert(x.end(), phi.begin(), phi.end());
  return x;
}

PotentialSet unflatten(const std::vector<double>& x, double p, const Layout& l) {
  PotentialSet out;
  out.p = p;
  out.phis.assign(l.n, std::vector<double>(l.m));
  for (int i = 0; i < l.n; ++i)
    std::copy(x.begin() + i * l.m, x.begin() + (i + 1) * l.m,
              out.phis[i].begin());
  return out;
}

}  // namespace

double dual_map(double s, double p, double eps) {
  const double alpha = 1.0 / (p - 1.0);
  if (eps == 0.0) return sign_of(s) * std::pow(std::abs(s), alpha);
  return sign_of(s) * std::pow(s * s + eps * eps, 0.5 * alpha);
}

double dual_map_deriv(double s, double p, double eps) {
  const double alpha = 0.5 / (p - 1.0);  // exponent of (s^2 + eps^2)
  if (eps == 0.0) {
    if (s == 0.0) {
      if (p > 2.0)
        throw std::domain_error(
            "dual_map derivative is unbounded at 0 for p > 2; use a positive "
            "smoothing");
      if (p == 2.0) return 1.0;
      return 0.0;
    }
    return 2.0 * alpha * std::pow(std::abs(s), 2.0 * alpha - 1.0);
  }
  return 2.0 * alpha * std::abs(s) * std::pow(s * s + eps * eps, alpha - 1.0);
}

GridTable mean_potential(const PotentialSet& potentials, const Mesh& mesh) {
  check_shapes(potentials, nullptr, mesh, nullptr);
  const int n = mesh.dim();
  const int m = mesh.cells();
  GridTable bar(mesh.cell_count());
  std::vector<int> idx(n, 0);
  for (std::size_t flat = 0; flat < bar.size(); ++flat) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += potentials.phis[i][idx[i]];
    bar[flat] = s / n;
    for (int a = n - 1; a >= 0; --a) {
      if (++idx[a] < m) break;
      idx[a] = 0;
    }
  }
  return bar;
}

double dual_bound(const PotentialSet& potentials, const Mesh& mesh) {
  const double q = potentials.p / (potentials.p - 1.0);
  const GridTable bar = mean_potential(potentials, mesh);
  double sum = 0.0;
  for (double s : bar) sum += std::pow(std::abs(s), q);
  return sum / cell_divisor(mesh.cells(), mesh.dim());
}

std::vector<double> residual_vector(const PotentialSet& potentials,
                                    const std::vector<MarginalTable>& marginals,
                                    const Mesh& mesh, double eps,
                                    const MeasureWeights* weights) {
  check_shapes(potentials, &marginals, mesh, weights);
  const Layout l = layout_of(mesh);
  const double p = potentials.p;
  const double* cell_w =
      (weights && !weights->cell.empty()) ? weights->cell.data() : nullptr;

  std::vector<double> acc(static_cast<std::size_t>(l.n) * l.m, 0.0);
  std::vector<int> idx(l.n, 0);
  const std::size_t cells = mesh.cell_count();
  for (std::size_t flat = 0; flat < cells; ++flat) {
    double s = 0.0;
    for (int i = 0; i < l.n; ++i) s += potentials.phis[i][idx[i]];
    double v = dual_map(s / l.n, p, eps);
    if (cell_w) v *= cell_w[flat];
    for (int i = 0; i < l.n; ++i) acc[i * l.m + idx[i]] += v;
    for (int a = l.n - 1; a >= 0; --a) {
      if (++idx[a] < l.m) break;
      idx[a] = 0;
    }
  }

  std::vector<double> r(static_cast<std::size_t>(l.rows));
  const double divisor = cell_divisor(l.m, l.n - 1);
  for (int i = 0; i < l.n; ++i)
    for (int t = 0; t < l.m; ++t)
      r[i * l.m + t] = acc[i * l.m + t] / divisor - marginals[i].values[t];
  for (int i = 1; i < l.n; ++i) {
    const std::vector<double>* gw =
        (weights && !weights->gauge.empty()) ? &weights->gauge[i] : nullptr;
    double sum = 0.0;
    for (int k = 0; k < l.m; ++k)
      sum += gw ? potentials.phis[i][k] * (*gw)[k] : potentials.phis[i][k];
    r[l.cols + (i - 1)] = sum / l.m;
  }
  return r;
}

std::vector<double> residual_jacobian(const PotentialSet& potentials,
                                      const Mesh& mesh, double eps,
                                      const MeasureWeights* weights) {
  check_shapes(potentials, nullptr, mesh, weights);
  const Layout l = layout_of(mesh);
  const double p = potentials.p;
  const double* cell_w =
      (weights && !weights->cell.empty()) ? weights->cell.data() : nullptr;

  std::vector<double> jac(static_cast<std::size_t>(l.rows) * l.cols, 0.0);
  std::vector<int> idx(l.n, 0);
  const std::size_t cells = mesh.cell_count();
  for (std::size_t flat = 0; flat < cells; ++flat) {
    double s = 0.0;
    for (int i = 0; i < l.n; ++i) s += potentials.phis[i][idx[i]];
    double d = dual_map_deriv(s / l.n, p, eps) / l.n;
    if (cell_w) d *= cell_w[flat];
    for (int i = 0; i < l.n; ++i) {
      double* row = jac.data() +
                    static_cast<std::size_t>(i * l.m + idx[i]) * l.cols;
      for (int j = 0; j < l.n; ++j) row[j * l.m + idx[j]] += d;
    }
    for (int a = l.n - 1; a >= 0; --a) {
      if (++idx[a] < l.m) break;
      idx[a] = 0;
    }
  }

  const double divisor = cell_divisor(l.m, l.n - 1);
  for (std::size_t k = 0; k < static_cast<std::size_t>(l.cols) * l.cols; ++k)
    jac[k] /= divisor;
  for (int i = 1; i < l.n; ++i) {
    const std::vector<double>* gw =
        (weights && !weights->gauge.empty()) ? &weights->gauge[i] : nullptr;
    double* row =
        jac.data() + static_cast<std::size_t>(l.cols + (i - 1)) * l.cols;
    for (int k = 0; k < l.m; ++k)
      row[i * l.m + k] = (gw ? (*gw)[k] : 1.0) / l.m;
  }
  return jac;
}

PotentialSet l2_seed(const L2Solution& solution) {
  PotentialSet seed;
  seed.p = 2.0;
  seed.phis = solution.potentials;
  return seed;
}

namespace {

struct StageResult {
  int iterations = 0;
  bool reached_tol = false;
};

double sup_norm(const std::vector<double>& v, std::size_t begin,
                std::size_t end) {
  double s = 0.0;
  for (std::size_t k = begin; k < end; ++k) s = std::max(s, std::abs(v[k]));
  return s;
}

/// One Levenberg-Marquardt pass at fixed smoothing. Mutates x in place and
/// keeps the best iterate found; gives up when the damping saturates.
StageResult lm_stage(std::vector<double>& x, double p, double eps,
                     const std::vector<MarginalTable>& marginals,
                     const Mesh& mesh, const MeasureWeights* weights,
                     const SolverConfig& config) {
  const Layout l = layout_of(mesh);
  using Matrix =
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  auto eval_residual = [&](const std::vector<double>& xv) {
    return residual_vector(unflatten(xv, p, l), marginals, mesh, eps, weights);
  };

  StageResult out;
  std::vector<double> r = eval_residual(x);
  double r2 = std::inner_product(r.begin(), r.end(), r.begin(), 0.0);
  double lambda = config.lm_lambda_init;

  for (int it = 0; it < config.max_iter; ++it) {
    if (sup_norm(r, 0, r.size()) <= config.tol_residual) {
      out.reached_tol = true;
      return out;
    }
    const std::vector<double> jac =
        residual_jacobian(unflatten(x, p, l), mesh, eps, weights);
    Eigen::Map<const Matrix> J(jac.data(), l.rows, l.cols);
    Eigen::Map<const Eigen::VectorXd> rv(r.data(), l.rows);
    const Eigen::MatrixXd A = J.transpose() * J;
    const Eigen::VectorXd g = J.transpose() * rv;
    Eigen::VectorXd diag = A.diagonal();
    const double diag_floor = std::max(1e-14 * diag.maxCoeff(), 1e-300);
    for (int k = 0; k < diag.size(); ++k)
      diag[k] = std::max(diag[k], diag_floor);

    bool accepted = false;
    while (lambda <= 1e14) {
      Eigen::MatrixXd M = A;
      M.diagonal() += lambda * diag;
      const Eigen::VectorXd step = M.ldlt().solve(-g);
      std::vector<double> x_try(x);
      for (int k = 0; k < l.cols; ++k) x_try[k] += step[k];
      std::vector<double> r_try = eval_residual(x_try);
      const double r2_try =
          std::inner_product(r_try.begin(), r_try.end(), r_try.begin(), 0.0);
      if (r2_try < r2) {
        x = std::move(x_try);
        r = std::move(r_try);
        r2 = r2_try;
        lambda = std::max(lambda * config.lm_lambda_shrink, 1e-14);
        accepted = true;
        break;
      }
      lambda *= config.lm_lambda_grow;
    }
    ++out.iterations;
    if (!accepted) return out;  // stalled at this smoothing level
  }
  out.reached_tol = sup_norm(r, 0, r.size()) <= config.tol_residual;
  return out;
}

}  // namespace

SolveReport solve_at_p_weighted(const std::vector<MarginalTable>& marginals,
                                const Mesh& mesh, double p,
                                const PotentialSet& seed,
                                const SolverConfig& config,
                                const MeasureWeights* weights) {
  if (!(p > 1.0))
    throw std::invalid_argument("norm exponent must satisfy p > 1");
  PotentialSet start = seed;
  start.p = p;
  check_shapes(start, &marginals, mesh, weights);
  const Layout l = layout_of(mesh);

  std::vector<double> stages{config.epsilon};
  for (double e : config.polish_epsilons)
    if (e < stages.back()) stages.push_back(e);

  std::vector<double> x = flatten(start);
  SolveReport report;
  for (double eps : stages) {
    const StageResult stage =
        lm_stage(x, p, eps, marginals, mesh, weights, config);
    report.iterations += stage.iterations;
  }

  report.potentials = unflatten(x, p, l);
  const std::vector<double> r0 =
      residual_vector(report.potentials, marginals, mesh, 0.0, weights);
  report.residual_inf = sup_norm(r0, 0, static_cast<std::size_t>(l.cols));
  report.gauge_inf = sup_norm(r0, static_cast<std::size_t>(l.cols), r0.size());
  report.converged = report.residual_inf <= config.tol_residual &&
                     report.gauge_inf <= config.tol_residual;
  report.bound = dual_bound(report.potentials, mesh);
  return report;
}

SolveReport solve_at_p(const std::vector<MarginalTable>& marginals,
                       const Mesh& mesh, double p, const PotentialSet& seed,
                       const SolverConfig& config) {
  return solve_at_p_weighted(marginals, mesh, p, seed, config, nullptr);
}

std::vector<SolveReport> continuation_sweep_weighted(
    const std::vector<MarginalTable>& marginals, const Mesh& mesh,
    const std::vector<double>& p_targets, const SolverConfig& config,
    const MeasureWeights* weights) {
  for (double p : p_targets)
    if (!(p > 1.0)) {
      std::ostringstream os;
      os << "continuation target p=" << p << " is not > 1";
      throw std::invalid_argument(os.str());
    }
  if (!(config.delta_p > 0.0))
    throw std::invalid_argument("continuation step delta_p must be > 0");

  const PotentialSet seed = l2_seed(l2_potentials(marginals, mesh));
  SolveReport base =
      solve_at_p_weighted(marginals, mesh, 2.0, seed, config, weights);
  base.continuation_path = {{2.0, base.residual_inf}};

  std::vector<SolveReport> reports(p_targets.size());

  // Anchor order: below 2 descending, above 2 ascending; each chain reseeds
  // from the previous converged anchor and records the path from p = 2.
  auto run_chain = [&](std::vector<std::size_t> order) {
    SolveReport current = base;
    double current_p = 2.0;
    std::vector<ContinuationStep> path = base.continuation_path;
    for (std::size_t target_index : order) {
      const double target = p_targets[target_index];
      const double gap = std::abs(target - current_p);
      const int steps =
          std::max(0, static_cast<int>(
                          std::ceil(gap / config.delta_p - 1e-12)));
      for (int j = 1; j <= steps; ++j) {
        const double pj = current_p + (target - current_p) * j / steps;
        current = solve_at_p_weighted(marginals, mesh, pj, current.potentials,
                                      config, weights);
        path.push_back({pj, current.residual_inf});
      }
      current_p = target;
      SolveReport rep = current;
      rep.continuation_path = path;
      reports[target_index] = std::move(rep);
    }
  };

  std::vector<std::size_t> below, above;
  for (std::size_t i = 0; i < p_targets.size(); ++i) {
    if (p_targets[i] < 2.0)
      below.push_back(i);
    else if (p_targets[i] > 2.0)
      above.push_back(i);
    else
      reports[i] = base;
  }
  std::stable_sort(below.begin(), below.end(), [&](std::size_t a, std::size_t b) {
    return p_targets[a] > p_targets[b];
  });
  std::stable_sort(above.begin(), above.end(), [&](std::size_t a, std::size_t b) {
    return p_targets[a] < p_targets[b];
  });
  run_chain(below);
  run_chain(above);
  return reports;
}

std::vector<SolveReport> continuation_sweep(
    const std::vector<MarginalTable>& marginals, const Mesh& mesh,
    const std::vector<double>& p_targets, const SolverConfig& config) {
  return continuation_sweep_weighted(marginals, mesh, p_targets, config,
                                     nullptr);
}

}  // namespace minmarg
