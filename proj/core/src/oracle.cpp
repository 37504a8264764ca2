#include "minmarg/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <stdexcept>

#include "minmarg/analysis.hpp"
#include "minmarg/closed_form.hpp"
#include "minmarg/solver.hpp"

namespace minmarg {

namespace {

void validate(const PrimalProblem& problem) {
  if (problem.mesh.dim() > PrimalProblem::kMaxDim ||
      problem.mesh.cells() > PrimalProblem::kMaxCells) {
    std::ostringstream os;
    os << "primal oracle is limited to n <= " << PrimalProblem::kMaxDim
       << ", m <= " << PrimalProblem::kMaxCells << "; got n="
       << problem.mesh.dim() << ", m=" << problem.mesh.cells();
    throw std::invalid_argument(os.str());
  }
  if (!(problem.p > 1.0))
    throw std::invalid_argument("norm exponent must satisfy p > 1");
  require_common_mass(problem.marginals, problem.mesh);
}

/// Additive correction restoring the prescribed marginals exactly; the
/// orthogonal projection onto the constraint set.
GridTable project_feasible(const GridTable& h,
                           const std::vector<MarginalTable>& marginals,
                           double mass, const Mesh& mesh) {
  const int n = mesh.dim();
  const int m = mesh.cells();
  std::vector<MarginalTable> current;
  current.reserve(n);
  for (int axis = 0; axis < n; ++axis)
    current.push_back(marginalize(h, axis, mesh));
  const double mean = grid_integral(h, mesh);

  GridTable out(h.size());
  std::vector<int> idx(n, 0);
  for (std::size_t flat = 0; flat < h.size(); ++flat) {
    double v = h[flat];
    for (int i = 0; i < n; ++i)
      v -= current[i].values[idx[i]] - marginals[i].values[idx[i]];
    out[flat] = v + (n - 1) * (mean - mass);
    for (int a = n - 1; a >= 0; --a) {
      if (++idx[a] < m) break;
      idx[a] = 0;
    }
  }
  return out;
}

double feasibility_error(const GridTable& h,
                         const std::vector<MarginalTable>& marginals,
                         const Mesh& mesh) {
  double sup = 0.0;
  for (int axis = 0; axis < mesh.dim(); ++axis) {
    const MarginalTable cur = marginalize(h, axis, mesh);
    for (int t = 0; t < mesh.cells(); ++t)
      sup = std::max(sup, std::abs(cur.values[t] - marginals[axis].values[t]));
  }
  return sup;
}

double objective(const GridTable& h, double p, double eps, double divisor) {
  double sum = 0.0;
  if (eps == 0.0) {
    for (double v : h) sum += std::pow(std::abs(v), p);
  } else {
    for (double v : h) sum += std::pow(v * v + eps * eps, 0.5 * p);
  }
  return sum / divisor;
}

/// Functional gradient p * sign(h) |h|^{p-1} of the mean objective with
/// respect to the discrete L2 inner product (mesh-size independent).
void gradient(const GridTable& h, double p, double eps, GridTable& out) {
  if (eps == 0.0) {
    for (std::size_t c = 0; c < h.size(); ++c) {
      const double a = std::abs(h[c]);
      out[c] = (h[c] >= 0.0 ? 1.0 : -1.0) * p * std::pow(a, p - 1.0);
      if (a == 0.0) out[c] = 0.0;
    }
  } else {
    for (std::size_t c = 0; c < h.size(); ++c)
      out[c] = p * h[c] * std::pow(h[c] * h[c] + eps * eps, 0.5 * p - 1.0);
  }
}

}  // namespace

PrimalResult solve_primal(const PrimalProblem& problem, double tol,
                          int max_iter) {
  validate(problem);
  const Mesh& mesh = problem.mesh;
  const double p = problem.p;
  const double mass = problem.marginals.front().mass;
  const double divisor = cell_divisor(mesh.cells(), mesh.dim());
  const double inner_divisor = divisor;  // uniform cell weights

  // Feasible start: the additive table sum_i g_i - (n-1)c.
  GridTable h(mesh.cell_count());
  {
    std::vector<int> idx(mesh.dim(), 0);
    for (std::size_t flat = 0; flat < h.size(); ++flat) {
      double v = -(mesh.dim() - 1) * mass;
      for (int i = 0; i < mesh.dim(); ++i)
        v += problem.marginals[i].values[idx[i]];
      h[flat] = v;
      for (int a = mesh.dim() - 1; a >= 0; --a) {
        if (++idx[a] < mesh.cells()) break;
        idx[a] = 0;
      }
    }
  }

  std::vector<double> stages =
      (p < 2.0) ? std::vector<double>{1e-4, 1e-6, 1e-9, 1e-12}
                : std::vector<double>{0.0};
  const int stage_iters = std::max(1, max_iter / static_cast<int>(stages.size()));

  PrimalResult result;
  GridTable grad(h.size()), direction(h.size()), trial(h.size());
  double step = 0.25;

  for (double eps : stages) {
    const double stage_tol = std::max(tol, eps);
    double f = objective(h, p, eps, divisor);
    int stalled = 0;
    for (int it = 0; it < stage_iters; ++it) {
      gradient(h, p, eps, grad);
      direction = project_vanishing_marginals(grad, mesh);
      double dir_sup = 0.0;
      double dir_norm2 = 0.0;
      for (double v : direction) {
        dir_sup = std::max(dir_sup, std::abs(v));
        dir_norm2 += v * v;
      }
      dir_norm2 /= inner_divisor;
      result.projected_grad_inf = dir_sup;
      if (dir_sup <= stage_tol) break;

      // Backtracking on the convex objective; the direction lies in the
      // vanishing-marginals space, so feasibility is preserved exactly.
      step = std::min(step * 2.0, 1e3);
      bool accepted = false;
      for (int bt = 0; bt < 80; ++bt) {
        for (std::size_t c = 0; c < h.size(); ++c)
          trial[c] = h[c] - step * direction[c];
        const double f_trial = objective(trial, p, eps, divisor);
        if (f_trial <= f - 1e-4 * step * dir_norm2) {
          h.swap(trial);
          f = f_trial;
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      ++result.iterations;
      if (!accepted) break;  // step underflow: cannot improve at this eps

      h = project_feasible(h, problem.marginals, mass, mesh);
      const double f_projected = objective(h, p, eps, divisor);
      // Descent below roundoff means the iterate cannot improve further.
      if (f - f_projected <= 1e-15 * (1.0 + std::abs(f))) {
        if (++stalled >= 50) break;
      } else {
        stalled = 0;
      }
      f = f_projected;
      result.max_marginal_error =
          std::max(result.max_marginal_error,
                   feasibility_error(h, problem.marginals, mesh));
    }
  }

  // Final projected-gradient norm on the unsmoothed objective when safe,
  // otherwise at the smallest smoothing used.
  const double final_eps = (p < 2.0) ? stages.back() : 0.0;
  gradient(h, p, final_eps, grad);
  direction = project_vanishing_marginals(grad, mesh);
  double dir_sup = 0.0;
  for (double v : direction) dir_sup = std::max(dir_sup, std::abs(v));
  result.projected_grad_inf = dir_sup;
  result.converged = dir_sup <= tol;
  result.density = std::move(h);
  result.objective = objective(result.density, p, 0.0, divisor);
  return result;
}

CrossValidation cross_validate(const std::vector<MarginalTable>& marginals,
                               double p, const Mesh& mesh, double tol) {
  const SolveReport dual =
      continuation_sweep(marginals, mesh, {p}).front();
  const GridTable h_dual = minimal_density(dual.potentials, mesh);

  PrimalProblem problem{mesh, marginals, p};
  const PrimalResult primal = solve_primal(problem, tol);

  CrossValidation cv;
  cv.dual_converged = dual.converged;
  cv.primal_converged = primal.converged;
  cv.dual_bound_value = dual.bound;
  cv.primal_objective = primal.objective;
  const double divisor = cell_divisor(mesh.cells(), mesh.dim());
  double dual_obj = 0.0;
  double sup = 0.0;
  for (std::size_t c = 0; c < h_dual.size(); ++c) {
    dual_obj += std::pow(std::abs(h_dual[c]), p);
    sup = std::max(sup, std::abs(h_dual[c] - primal.density[c]));
  }
  cv.dual_objective = dual_obj / divisor;
  cv.density_sup_diff = sup;
  cv.objective_rel_diff = std::abs(cv.primal_objective - cv.dual_objective) /
                          std::max(std::abs(cv.dual_objective), 1e-300);
  return cv;
}

}  // namespace minmarg
