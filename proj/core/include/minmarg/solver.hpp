#pragma once

#include <limits>
#include <vector>

#include "minmarg/closed_form.hpp"
#include "minmarg/mesh.hpp"

namespace minmarg {

/// One multiplier table per axis, plus the norm exponent they were solved
/// for. The gauge normalization (zero axis mean for every axis but the
/// first) is a property of converged sets, not enforced on construction.
struct PotentialSet {
  double p = 2.0;
  std::vector<std::vector<double>> phis;
};

struct SolverConfig {
  double tol_residual = 1e-9;  // sup-norm stop on the stacked residual
  int max_iter = 200;          // Levenberg-Marquardt iterations per stage
  double epsilon = 1e-8;       // smoothing of |s| near 0 in the main stage
  /// Re-solve passes with decreasing smoothing; 0 means the exact map.
  std::vector<double> polish_epsilons = {1e-10, 1e-12, 0.0};
  double lm_lambda_init = 1e-3;
  double lm_lambda_shrink = 0.25;
  double lm_lambda_grow = 10.0;
  double delta_p = 0.1;  // continuation step away from p = 2
};

struct ContinuationStep {
  double p = 0.0;
  double residual_inf = 0.0;
};

struct SolveReport {
  PotentialSet potentials;
  double residual_inf = std::numeric_limits<double>::infinity();
  double gauge_inf = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
  double bound = 0.0;  // (1/m^n) sum |phi_bar|^{p/(p-1)}
  std::vector<ContinuationStep> continuation_path;
};

/// Optional reweighting of the underlying measure. `cell` scales the full
/// quadrature weight per grid cell and `gauge` the per-axis weight in the
/// zero-mean conditions. Empty members mean the uniform measure.
struct MeasureWeights {
  GridTable cell;                                // m^n entries or empty
  std::vector<std::vector<double>> gauge;        // n tables or empty
};

/// The map from the potential average to the minimal-density value:
/// sign(s) |s|^{1/(p-1)}, with |s| replaced by sqrt(s^2 + eps^2) when
/// eps > 0. Total for every argument.
double dual_map(double s, double p, double eps);

/// Derivative of dual_map in s. For eps = 0 this is
/// (1/(p-1)) |s|^{(2-p)/(p-1)}; unbounded at s = 0 when p > 2, in which
/// case the call throws std::domain_error.
double dual_map_deriv(double s, double p, double eps);

/// Average of the potentials on the full grid.
GridTable mean_potential(const PotentialSet& potentials, const Mesh& mesh);

/// (1/m^n) sum |phi_bar|^q with q = p/(p-1); the sharp lower bound.
double dual_bound(const PotentialSet& potentials, const Mesh& mesh);

/// Stacked residual of the discrete system, length n*m + (n-1):
/// first the n marginal blocks
///   (sum over cells with axis-i index t of dual_map(phi_bar) * w) / m^(n-1)
///     - g_i(t),
/// then the gauge rows (sum_k phi_i(x_k) * gw_i(x_k)) / m for i >= 1.
std::vector<double> residual_vector(const PotentialSet& potentials,
                                    const std::vector<MarginalTable>& marginals,
                                    const Mesh& mesh, double eps,
                                    const MeasureWeights* weights = nullptr);

/// Dense Jacobian of residual_vector in the stacked potentials, row-major
/// with n*m + (n-1) rows and n*m columns.
std::vector<double> residual_jacobian(const PotentialSet& potentials,
                                      const Mesh& mesh, double eps,
                                      const MeasureWeights* weights = nullptr);

/// Seed for the nonlinear solver from the explicit p = 2 solution.
PotentialSet l2_seed(const L2Solution& solution);

/// Damped Gauss-Newton (Levenberg-Marquardt) solve of the discrete system at
/// a fixed exponent, followed by re-solves on the polish smoothing schedule.
/// The reported residual is evaluated with the exact (eps = 0) map.
SolveReport solve_at_p(const std::vector<MarginalTable>& marginals,
                       const Mesh& mesh, double p, const PotentialSet& seed,
                       const SolverConfig& config = {});

/// Continuation in p from the explicit p = 2 solution: walks from 2 toward
/// every requested target in steps of at most delta_p, reseeding each solve
/// from the previous one, and returns one report per target in input order.
/// Non-convergence at one target is recorded and does not stop the sweep.
std::vector<SolveReport> continuation_sweep(
    const std::vector<MarginalTable>& marginals, const Mesh& mesh,
    const std::vector<double>& p_targets, const SolverConfig& config = {});

/// Weighted variants of the two entry points above, used by the
/// reweighted-measure front end. `weights` must outlive the call.
SolveReport solve_at_p_weighted(const std::vector<MarginalTable>& marginals,
                                const Mesh& mesh, double p,
                                const PotentialSet& seed,
                                const SolverConfig& config,
                                const MeasureWeights* weights);
std::vector<SolveReport> continuation_sweep_weighted(
    const std::vector<MarginalTable>& marginals, const Mesh& mesh,
    const std::vector<double>& p_targets, const SolverConfig& config,
    const MeasureWeights* weights);

}  // namespace minmarg
