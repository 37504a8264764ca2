#pragma once

#include <vector>

#include "minmarg/mesh.hpp"

namespace minmarg {

/// Explicit solution of the quadratic (p = 2) problem: the potentials are
/// affine in the marginals and the minimal density is their average.
struct L2Solution {
  /// potentials[0] = n*g_1, potentials[i] = n*(g_i - c) for i >= 1,
  /// where c is the common discrete mass.
  std::vector<std::vector<double>> potentials;
  double common_mass = 0.0;
  double bound = 0.0;  // sum_i <g_i^2> - (n-1) c^2
};

/// Maximum allowed spread between the discrete masses of the marginals.
inline constexpr double kMassTolerance = 1e-10;

L2Solution l2_potentials(const std::vector<MarginalTable>& marginals,
                         const Mesh& mesh);

/// Quadratic lower bound sum_i (1/m) sum_k g_i(x_k)^2 - (n-1) * mass^2.
double l2_bound(const std::vector<MarginalTable>& marginals,
                double common_mass, const Mesh& mesh);

/// The p = 2 minimal density sum_i g_i - (n-1) c on the full grid; this is
/// also the average of the L2Solution potentials.
GridTable l2_minimal_density(const L2Solution& solution, const Mesh& mesh);

/// Throws unless all marginals live on this mesh and share one discrete mass
/// (within kMassTolerance); returns that mass.
double require_common_mass(const std::vector<MarginalTable>& marginals,
                           const Mesh& mesh);

}  // namespace minmarg
