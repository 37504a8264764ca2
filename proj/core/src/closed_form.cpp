#include "minmarg/closed_form.hpp"

#include <cmath>
#include <cstddef>
#include <sstream>
#include <stdexcept>

namespace minmarg {

double require_common_mass(const std::vector<MarginalTable>& marginals,
                           const Mesh& mesh) {
  if (marginals.size() != static_cast<std::size_t>(mesh.dim()))
    throw std::invalid_argument("need one marginal per mesh axis");
  for (const auto& g : marginals)
    if (g.values.size() != static_cast<std::size_t>(mesh.cells()))
      throw std::invalid_argument("marginal length does not match the mesh");
  const double c = marginals.front().mass;
  for (std::size_t i = 1; i < marginals.size(); ++i) {
    if (std::abs(marginals[i].mass - c) > kMassTolerance) {
      std::ostringstream os;
      os << "incompatible marginals: mass of axis " << i << " is "
         << marginals[i].mass << ", axis 0 has " << c
         << " (tolerance " << kMassTolerance << ")";
      throw std::invalid_argument(os.str());
    }
  }
  return c;
}

L2Solution l2_potentials(const std::vector<MarginalTable>& marginals,
                         const Mesh& mesh) {
  const double c = require_common_mass(marginals, mesh);
  const int n = mesh.dim();
  const int m = mesh.cells();

  L2Solution sol;
  sol.common_mass = c;
  sol.potentials.resize(n);
  for (int i = 0; i < n; ++i) {
    sol.potentials[i].resize(m);
    for (int k = 0; k < m; ++k) {
      const double g = marginals[i].values[k];
      sol.potentials[i][k] = (i == 0) ? n * g : n * (g - c);
    }
  }
  sol.bound = l2_bound(marginals, c, mesh);
  return sol;
}

double l2_bound(const std::vector<MarginalTable>& marginals,
                double common_mass, const Mesh& mesh) {
  require_common_mass(marginals, mesh);
  const int m = mesh.cells();
  double total = 0.0;
  for (const auto& g : marginals) {
    double s = 0.0;
    for (double v : g.values) s += v * v;
    total += s / m;
  }
  return total - (mesh.dim() - 1) * common_mass * common_mass;
}

GridTable l2_minimal_density(const L2Solution& solution, const Mesh& mesh) {
  const int n = mesh.dim();
  GridTable h(mesh.cell_count());
  std::vector<int> idx(n, 0);
  for (std::size_t flat = 0; flat < h.size(); ++flat) {
    // The potential average equals sum_i g_i - (n-1)c by construction.
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += solution.potentials[i][idx[i]];
    h[flat] = s / n;
    for (int a = n - 1; a >= 0; --a) {
      if (++idx[a] < mesh.cells()) break;
      idx[a] = 0;
    }
  }
  return h;
}

}  // namespace minmarg
