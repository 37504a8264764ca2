#pragma once

#include <cstddef>
#include <vector>

#include "minmarg/mesh.hpp"
#include "minmarg/solver.hpp"

namespace minmarg {

/// Strictly positive reweighting of the baseline measure, either as a
/// product of per-axis densities (each of unit discrete mass) or as a full
/// tensor (n <= 3 only). Axis marginals of the weight reweight the gauge
/// conditions.
class WeightSpec {
public:
  static WeightSpec product(std::vector<MarginalTable> axis_factors);
  static WeightSpec tensor(GridTable values);

  bool is_product() const { return is_product_; }
  /// Cell weights and per-axis gauge weights on this mesh; validates
  /// positivity, sizes and (for the product form) unit axis masses.
  MeasureWeights materialize(const Mesh& mesh) const;

private:
  WeightSpec() = default;
  bool is_product_ = true;
  std::vector<MarginalTable> factors_;
  GridTable tensor_;
};

/// Reweighted solve: identical solver loop with the quadrature weights
/// multiplied by the weight density and the gauge rows weighted by its axis
/// marginals. With unit weights this coincides with solve_at_p.
SolveReport solve_weighted(const std::vector<MarginalTable>& marginals,
                           const WeightSpec& weights, double p,
                           const Mesh& mesh, const SolverConfig& config = {});

/// Static replication of a twice-differentiable payoff: cash and forward
/// positions struck at k0 plus put weights below and call weights above,
/// given by the payoff's discrete convexity.
struct PayoffDecomposition {
  std::vector<double> strikes;  // the input grid
  double k0 = 0.0;              // snapped to the nearest interior grid point
  std::size_t k0_index = 0;
  double bond_units = 0.0;     // payoff at k0
  double forward_units = 0.0;  // first derivative at k0
  std::vector<double> put_strikes;   // interior strikes < k0
  std::vector<double> put_weights;   // second derivative there
  std::vector<double> call_strikes;  // interior strikes > k0
  std::vector<double> call_weights;
  /// Second derivative at k0 itself; reconstruction integrates it with half
  /// trapezoid weight on each side of the put/call split.
  double k0_convexity = 0.0;
};

/// Finite-difference decomposition of a tabulated payoff. Requires at least
/// five strictly increasing strikes and a k0 whose nearest grid point is
/// interior.
PayoffDecomposition carr_madan_decompose(const std::vector<double>& strikes,
                                         const std::vector<double>& payoff,
                                         double k0);

/// Evaluates bond + forward + trapezoid put/call integrals at the given
/// strikes. Exact at interior grid points for quadratic payoffs.
std::vector<double> reconstruct(const PayoffDecomposition& decomposition,
                                const std::vector<double>& strikes);

}  // namespace minmarg
