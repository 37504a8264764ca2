#pragma once

#include <cstdint>
#include <vector>

#include "minmarg/mesh.hpp"
#include "minmarg/solver.hpp"

namespace minmarg {

/// Sharp-bound evaluation for one potential set.
struct BoundReport {
  double p = 0.0;
  double q = 0.0;        // conjugate exponent p/(p-1)
  double bound = 0.0;    // (1/m^n) sum |phi_bar|^q
  double h_norm_p = 0.0; // (1/m^n) sum |h*|^p, equals bound up to rounding
  double phi_bar_norm_q = 0.0;  // bound^{1/q}
  double attainment_rel_error = 0.0;  // cellwise |h*|^p vs |phi_bar|^q
};

/// Outcome of comparing a feasible candidate joint against the bound.
struct DualityRecord {
  double bound = 0.0;
  double candidate_norm_p = 0.0;  // (1/m^n) sum |g|^p
  double gap = 0.0;               // candidate_norm_p - bound
  double marginal_mismatch = 0.0; // sup distance of candidate marginals
  bool passed = false;            // gap >= -1e-9
};

/// Full-grid table whose every axis marginal vanishes identically.
struct Perturbation {
  GridTable values;
};

struct ProbeResult {
  double min_drop = 0.0;         // min over trials of |h*+phi|_p^p - |h*|_p^p
  double max_abs_pairing = 0.0;  // sup |<sign(h*)|h*|^{p-1}, phi>|
  int trials = 0;
};

inline constexpr double kDualityGapTolerance = 1e-9;
inline constexpr double kCandidateMarginalTolerance = 1e-8;

/// Minimal density h*(cell) = dual_map(phi_bar(cell), p, 0).
GridTable minimal_density(const PotentialSet& potentials, const Mesh& mesh);

/// Evaluates the bound and the attainment identity; throws std::logic_error
/// if the cellwise identity |h*|^p = |phi_bar|^q fails beyond rounding.
BoundReport sharp_bound(const PotentialSet& potentials, const Mesh& mesh);

/// Compares a candidate joint with the same discrete marginals as the
/// minimal density (within kCandidateMarginalTolerance, else throws).
DualityRecord duality_check(const PotentialSet& potentials,
                            const GridTable& candidate, const Mesh& mesh);

/// Additive correction removing all axis marginals:
/// phi - sum_i lift_i(marginal_i) + (n-1) * grand mean.
GridTable project_vanishing_marginals(const GridTable& table, const Mesh& mesh);

/// Draws a uniform [-1,1) table from the seed, projects it onto the
/// vanishing-marginals space and rescales to the requested sup norm
/// (zero tables are returned unscaled).
Perturbation random_perturbation(const Mesh& mesh, std::uint64_t seed,
                                 double amplitude);

/// Probes local minimality of h* over marginal-preserving perturbations and
/// the orthogonality pairing; trial t uses the deterministic sub-seed
/// derived from `seed` and t.
ProbeResult minimality_probe(const PotentialSet& potentials, const Mesh& mesh,
                             int trials, double amplitude,
                             std::uint64_t seed = 0);

}  // namespace minmarg
