#pragma once

#include <vector>

#include "minmarg/mesh.hpp"

namespace minmarg {

/// Dense instance of the primal problem: minimize the discrete p-norm over
/// full-grid tables with the prescribed marginals. Deliberately restricted
/// to desk-scale grids; this solver exists to certify the dual one.
struct PrimalProblem {
  Mesh mesh;
  std::vector<MarginalTable> marginals;
  double p = 2.0;

  static constexpr int kMaxCells = 10;
  static constexpr int kMaxDim = 3;
};

struct PrimalResult {
  GridTable density;
  double objective = 0.0;  // (1/m^n) sum |h|^p at eps = 0
  int iterations = 0;
  bool converged = false;
  double projected_grad_inf = 0.0;
  double max_marginal_error = 0.0;  // worst feasibility drift seen
};

struct CrossValidation {
  double density_sup_diff = 0.0;
  double objective_rel_diff = 0.0;
  double primal_objective = 0.0;
  double dual_objective = 0.0;  // (1/m^n) sum |h*|^p from the dual solve
  double dual_bound_value = 0.0;
  bool primal_converged = false;
  bool dual_converged = false;
};

/// Projected gradient descent with backtracking: gradient steps on the
/// (smoothed, for p < 2) objective, directions projected onto the
/// vanishing-marginals subspace so iterates stay feasible, re-projected onto
/// the constraint set every iteration. Stops when the projected-gradient
/// sup norm falls below tol.
PrimalResult solve_primal(const PrimalProblem& problem, double tol,
                          int max_iter = 400000);

/// Runs the dual continuation solve and the primal oracle on the same data
/// and reports their discrepancies.
CrossValidation cross_validate(const std::vector<MarginalTable>& marginals,
                               double p, const Mesh& mesh, double tol);

}  // namespace minmarg
