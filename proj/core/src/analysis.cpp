#include "minmarg/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "minmarg/rng.hpp"

namespace minmarg {

namespace {

double sign_of(double s) { return (s > 0.0) - (s < 0.0); }

}  // namespace

GridTable minimal_density(const PotentialSet& potentials, const Mesh& mesh) {
  GridTable h = mean_potential(potentials, mesh);
  for (double& v : h) v = dual_map(v, potentials.p, 0.0);
  return h;
}

BoundReport sharp_bound(const PotentialSet& potentials, const Mesh& mesh) {
  const GridTable bar = mean_potential(potentials, mesh);
  const double p = potentials.p;
  const double q = p / (p - 1.0);
  const double divisor = cell_divisor(mesh.cells(), mesh.dim());

  double bound_sum = 0.0;
  double h_sum = 0.0;
  double worst_cell = 0.0;
  for (double s : bar) {
    const double bq = std::pow(std::abs(s), q);
    const double hp = std::pow(std::abs(dual_map(s, p, 0.0)), p);
    bound_sum += bq;
    h_sum += hp;
    const double scale = std::max({bq, hp, 1e-300});
    worst_cell = std::max(worst_cell, std::abs(hp - bq) / scale);
  }

  BoundReport report;
  report.p = p;
  report.q = q;
  report.bound = bound_sum / divisor;
  report.h_norm_p = h_sum / divisor;
  report.phi_bar_norm_q = std::pow(report.bound, 1.0 / q);
  report.attainment_rel_error = worst_cell;
  if (worst_cell > 1e-9) {
    std::ostringstream os;
    os << "attainment identity violated: cellwise |h|^p vs |phi_bar|^q "
          "relative error "
       << worst_cell;
    throw std::logic_error(os.str());
  }
  return report;
}

DualityRecord duality_check(const PotentialSet& potentials,
                            const GridTable& candidate, const Mesh& mesh) {
  if (candidate.size() != mesh.cell_count())
    throw std::invalid_argument("candidate joint size does not match the mesh");
  const GridTable h = minimal_density(potentials, mesh);

  double mismatch = 0.0;
  for (int axis = 0; axis < mesh.dim(); ++axis) {
    const MarginalTable mc = marginalize(candidate, axis, mesh);
    const MarginalTable mh = marginalize(h, axis, mesh);
    for (int t = 0; t < mesh.cells(); ++t)
      mismatch = std::max(mismatch, std::abs(mc.values[t] - mh.values[t]));
  }
  if (mismatch > kCandidateMarginalTolerance) {
    std::ostringstream os;
    os << "candidate joint does not match the solved marginals: sup "
          "difference "
       << mismatch << " exceeds " << kCandidateMarginalTolerance;
    throw std::invalid_argument(os.str());
  }

  const double divisor = cell_divisor(mesh.cells(), mesh.dim());
  double cand_sum = 0.0;
  for (double v : candidate) cand_sum += std::pow(std::abs(v), potentials.p);

  DualityRecord record;
  record.bound = dual_bound(potentials, mesh);
  record.candidate_norm_p = cand_sum / divisor;
  record.gap = record.candidate_norm_p - record.bound;
  record.marginal_mismatch = mismatch;
  record.passed = record.gap >= -kDualityGapTolerance;
  return record;
}

GridTable project_vanishing_marginals(const GridTable& table,
                                      const Mesh& mesh) {
  if (table.size() != mesh.cell_count())
    throw std::invalid_argument("table size does not match the mesh");
  const int n = mesh.dim();
  const int m = mesh.cells();

  std::vector<MarginalTable> marginals;
  marginals.reserve(n);
  for (int axis = 0; axis < n; ++axis)
    marginals.push_back(marginalize(table, axis, mesh));
  const double mean = grid_integral(table, mesh);

  GridTable out(table.size());
  std::vector<int> idx(n, 0);
  for (std::size_t flat = 0; flat < out.size(); ++flat) {
    double v = table[flat];
    for (int i = 0; i < n; ++i) v -= marginals[i].values[idx[i]];
    out[flat] = v + (n - 1) * mean;
    for (int a = n - 1; a >= 0; --a) {
      if (++idx[a] < m) break;
      idx[a] = 0;
    }
  }
  return out;
}

Perturbation random_perturbation(const Mesh& mesh, std::uint64_t seed,
                                 double amplitude) {
  SplitMix64 rng(seed);
  GridTable draw(mesh.cell_count());
  for (double& v : draw) v = rng.uniform_pm1();
  GridTable projected = project_vanishing_marginals(draw, mesh);

  double sup = 0.0;
  for (double v : projected) sup = std::max(sup, std::abs(v));
  if (sup > 0.0) {
    const double scale = amplitude / sup;
    for (double& v : projected) v *= scale;
  }
  return Perturbation{std::move(projected)};
}

ProbeResult minimality_probe(const PotentialSet& potentials, const Mesh& mesh,
                             int trials, double amplitude,
                             std::uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("probe needs trials >= 1");
  const double p = potentials.p;
  const GridTable h = minimal_density(potentials, mesh);
  const double divisor = cell_divisor(mesh.cells(), mesh.dim());

  double base = 0.0;
  GridTable gradient(h.size());
  for (std::size_t c = 0; c < h.size(); ++c) {
    base += std::pow(std::abs(h[c]), p);
    gradient[c] = sign_of(h[c]) * std::pow(std::abs(h[c]), p - 1.0);
  }
  base /= divisor;

  ProbeResult result;
  result.trials = trials;
  result.min_drop = std::numeric_limits<double>::infinity();
  for (int t = 0; t < trials; ++t) {
    const Perturbation phi =
        random_perturbation(mesh, subseed(seed, static_cast<std::uint64_t>(t)),
                            amplitude);
    double perturbed = 0.0;
    double pairing = 0.0;
    for (std::size_t c = 0; c < h.size(); ++c) {
      perturbed += std::pow(std::abs(h[c] + phi.values[c]), p);
      pairing += gradient[c] * phi.values[c];
    }
    result.min_drop = std::min(result.min_drop, perturbed / divisor - base);
    result.max_abs_pairing =
        std::max(result.max_abs_pairing, std::abs(pairing / divisor));
  }
  return result;
}

}  // namespace minmarg
