#include "minmarg/mesh.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace minmarg {

namespace {

[[noreturn]] void fail(const std::string& msg) {
  throw std::invalid_argument(msg);
}

}  // namespace

double cell_divisor(int cells_per_axis, int exponent) {
  double d = 1.0;
  for (int k = 0; k < exponent; ++k) d *= cells_per_axis;
  return d;  // exact while below 2^53; guarded by the mesh entry budget
}

Mesh::Mesh(int dim, int cells_per_axis, std::size_t entry_budget)
    : dim_(dim), cells_(cells_per_axis) {
  if (dim < 2) {
    std::ostringstream os;
    os << "mesh dimension must be >= 2, got n=" << dim;
    fail(os.str());
  }
  if (cells_per_axis < 2) {
    std::ostringstream os;
    os << "mesh needs >= 2 cells per axis, got m=" << cells_per_axis;
    fail(os.str());
  }
  // n * m^n entries must fit the budget; check before allocating.
  long double entries = dim;
  for (int k = 0; k < dim; ++k) entries *= cells_per_axis;
  if (entries > static_cast<long double>(entry_budget)) {
    std::ostringstream os;
    os << "mesh n=" << dim << ", m=" << cells_per_axis << " needs "
       << static_cast<double>(entries) << " table entries, over the budget of "
       << entry_budget;
    fail(os.str());
  }

  centers_.resize(cells_);
  for (int k = 0; k < cells_; ++k) centers_[k] = (k + 0.5) / cells_;

  strides_.assign(dim_, 1);
  for (int a = dim_ - 2; a >= 0; --a)
    strides_[a] = strides_[a + 1] * static_cast<std::size_t>(cells_);
  cell_count_ = strides_[0] * static_cast<std::size_t>(cells_);
}

Mesh build_mesh(int dim, int cells_per_axis, std::size_t entry_budget) {
  return Mesh(dim, cells_per_axis, entry_budget);
}

MarginalSpec MarginalSpec::uniform() {
  MarginalSpec s;
  s.kind = Kind::Uniform;
  return s;
}

MarginalSpec MarginalSpec::gaussian(double mu, double sigma2) {
  MarginalSpec s;
  s.kind = Kind::Gaussian;
  s.mu = mu;
  s.sigma2 = sigma2;
  return s;
}

MarginalSpec MarginalSpec::beta_density(double alpha, double beta) {
  MarginalSpec s;
  s.kind = Kind::Beta;
  s.alpha = alpha;
  s.beta = beta;
  return s;
}

MarginalSpec MarginalSpec::tabulated(std::vector<double> values,
                                     bool normalize) {
  MarginalSpec s;
  s.kind = Kind::Tabulated;
  s.values = std::move(values);
  s.normalize = normalize;
  return s;
}

MarginalTable make_marginal(std::vector<double> values, const Mesh& mesh) {
  if (values.size() != static_cast<std::size_t>(mesh.cells()))
    fail("marginal table length does not match the mesh");
  MarginalTable t;
  t.values = std::move(values);
  double sum = 0.0;
  for (double v : t.values) {
    if (!std::isfinite(v)) fail("marginal table contains a non-finite value");
    sum += v;
  }
  t.mass = sum / mesh.cells();
  return t;
}

MarginalTable sample_marginal(const MarginalSpec& spec, const Mesh& mesh) {
  const int m = mesh.cells();
  std::vector<double> values(m);
  switch (spec.kind) {
    case MarginalSpec::Kind::Uniform:
      values.assign(m, 1.0);
      break;
    case MarginalSpec::Kind::Gaussian: {
      if (!(spec.sigma2 > 0.0)) fail("gaussian marginal needs sigma2 > 0");
      const double norm = 1.0 / std::sqrt(2.0 * M_PI * spec.sigma2);
      for (int k = 0; k < m; ++k) {
        const double d = mesh.centers()[k] - spec.mu;
        values[k] = norm * std::exp(-0.5 * d * d / spec.sigma2);
      }
      break;
    }
    case MarginalSpec::Kind::Beta: {
      if (!(spec.alpha > 0.0) || !(spec.beta > 0.0))
        fail("beta marginal needs alpha > 0 and beta > 0");
      const double log_b = std::lgamma(spec.alpha) + std::lgamma(spec.beta) -
                           std::lgamma(spec.alpha + spec.beta);
      for (int k = 0; k < m; ++k) {
        const double x = mesh.centers()[k];
        values[k] = std::exp((spec.alpha - 1.0) * std::log(x) +
                             (spec.beta - 1.0) * std::log1p(-x) - log_b);
      }
      break;
    }
    case MarginalSpec::Kind::Tabulated: {
      if (spec.values.size() != static_cast<std::size_t>(m)) {
        std::ostringstream os;
        os << "tabulated marginal has " << spec.values.size()
           << " values, mesh has m=" << m;
        fail(os.str());
      }
      values = spec.values;
      break;
    }
  }

  MarginalTable table = make_marginal(std::move(values), mesh);
  if (spec.normalize) {
    if (table.mass == 0.0)
      fail("cannot normalize a marginal with zero discrete mass");
    const double scale = spec.target_mass / table.mass;
    for (double& v : table.values) v *= scale;
    table = make_marginal(std::move(table.values), mesh);
  }
  return table;
}

MarginalTable marginalize(const GridTable& h, int axis, const Mesh& mesh) {
  if (h.size() != mesh.cell_count())
    fail("full-grid table size does not match the mesh");
  if (axis < 0 || axis >= mesh.dim()) {
    std::ostringstream os;
    os << "axis " << axis << " out of range for dimension " << mesh.dim();
    fail(os.str());
  }
  const int m = mesh.cells();
  const std::size_t stride = mesh.stride(axis);
  std::vector<double> sums(m, 0.0);
  // One block = `stride` consecutive cells sharing the same axis index.
  const std::size_t block = stride * static_cast<std::size_t>(m);
  for (std::size_t base = 0; base < h.size(); base += block) {
    for (int t = 0; t < m; ++t) {
      const std::size_t off = base + stride * static_cast<std::size_t>(t);
      double acc = 0.0;
      for (std::size_t j = 0; j < stride; ++j) acc += h[off + j];
      sums[t] += acc;
    }
  }
  const double divisor = cell_divisor(m, mesh.dim() - 1);
  MarginalTable out;
  out.values.resize(m);
  double total = 0.0;
  for (int t = 0; t < m; ++t) {
    out.values[t] = sums[t] / divisor;
    total += out.values[t];
  }
  out.mass = total / m;
  return out;
}

double grid_integral(const GridTable& h, const Mesh& mesh) {
  if (h.size() != mesh.cell_count())
    fail("full-grid table size does not match the mesh");
  double sum = 0.0;
  for (double v : h) sum += v;
  return sum / cell_divisor(mesh.cells(), mesh.dim());
}

}  // namespace minmarg
