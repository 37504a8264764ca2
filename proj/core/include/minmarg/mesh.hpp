#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace minmarg {

/// Uniform midpoint grid on the unit hypercube [0,1]^n.
///
/// Every axis carries the same m cell centers x_k = (k + 1/2)/m with
/// quadrature weight 1/m, so the discrete integral of a per-axis table is
/// sum(values)/m and of a full-grid table sum(values)/m^n. Full-grid tables
/// are stored flat in lexicographic order with axis 0 slowest, so the flat
/// index of (i_0, ..., i_{n-1}) is sum_a i_a * m^(n-1-a).
class Mesh {
public:
  static constexpr std::size_t kDefaultEntryBudget = std::size_t{1} << 23;

  Mesh(int dim, int cells_per_axis,
       std::size_t entry_budget = kDefaultEntryBudget);

  int dim() const { return dim_; }
  int cells() const { return cells_; }
  const std::vector<double>& centers() const { return centers_; }
  double axis_weight() const { return 1.0 / cells_; }
  std::size_t cell_count() const { return cell_count_; }

  /// Flat-index stride of an axis (axis 0 is the slowest-varying).
  std::size_t stride(int axis) const { return strides_[axis]; }
  /// Grid index along `axis` of the cell with flat index `flat`.
  int axis_index(std::size_t flat, int axis) const {
    return static_cast<int>((flat / strides_[axis]) % cells_);
  }

private:
  int dim_ = 0;
  int cells_ = 0;
  std::vector<double> centers_;
  std::vector<std::size_t> strides_;
  std::size_t cell_count_ = 0;
};

/// Full-grid table with Mesh::cell_count() entries in Mesh flat order.
using GridTable = std::vector<double>;

/// One-dimensional density sampled at the cell centers of a single axis.
struct MarginalTable {
  std::vector<double> values;
  double mass = 0.0;  // sum(values)/m, kept consistent with values
};

/// Parametric description of a marginal density, sampled by sample_marginal.
struct MarginalSpec {
  enum class Kind { Uniform, Gaussian, Beta, Tabulated };

  Kind kind = Kind::Uniform;
  double mu = 0.5;      // Gaussian mean
  double sigma2 = 0.1;  // Gaussian variance, > 0
  double alpha = 1.0;   // Beta shape, > 0
  double beta = 1.0;    // Beta shape, > 0
  std::vector<double> values;  // Tabulated: length must match the mesh
  bool normalize = true;
  double target_mass = 1.0;

  static MarginalSpec uniform();
  static MarginalSpec gaussian(double mu, double sigma2);
  static MarginalSpec beta_density(double alpha, double beta);
  static MarginalSpec tabulated(std::vector<double> values,
                                bool normalize = false);
};

Mesh build_mesh(int dim, int cells_per_axis,
                std::size_t entry_budget = Mesh::kDefaultEntryBudget);

/// Wraps raw values as a MarginalTable, recomputing the discrete mass.
MarginalTable make_marginal(std::vector<double> values, const Mesh& mesh);

/// Samples a marginal density at the cell centers of one axis. When the spec
/// asks for normalization the table is rescaled so its discrete mass equals
/// the target exactly.
MarginalTable sample_marginal(const MarginalSpec& spec, const Mesh& mesh);

/// Integrates a full-grid table over all axes but `axis`:
/// result[t] = sum over cells with axis-index t of h / m^(n-1).
MarginalTable marginalize(const GridTable& h, int axis, const Mesh& mesh);

/// Discrete integral of a full-grid table, sum(h)/m^n.
double grid_integral(const GridTable& h, const Mesh& mesh);

/// Exact integer power m^k as a double (used as the quadrature divisor).
double cell_divisor(int cells_per_axis, int exponent);

}  // namespace minmarg
