#include "minmarg/finance.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "minmarg/closed_form.hpp"

namespace minmarg {

WeightSpec WeightSpec::product(std::vector<MarginalTable> axis_factors) {
  WeightSpec w;
  w.is_product_ = true;
  w.factors_ = std::move(axis_factors);
  return w;
}

WeightSpec WeightSpec::tensor(GridTable values) {
  WeightSpec w;
  w.is_product_ = false;
  w.tensor_ = std::move(values);
  return w;
}

MeasureWeights WeightSpec::materialize(const Mesh& mesh) const {
  const int n = mesh.dim();
  const int m = mesh.cells();
  MeasureWeights out;

  if (is_product_) {
    if (factors_.size() != static_cast<std::size_t>(n))
      throw std::invalid_argument("product weight needs one factor per axis");
    for (int i = 0; i < n; ++i) {
      const auto& f = factors_[i];
      if (f.values.size() != static_cast<std::size_t>(m))
        throw std::invalid_argument("weight factor length does not match the mesh");
      for (double v : f.values)
        if (!(v > 0.0))
          throw std::invalid_argument("weight density must be strictly positive");
      if (std::abs(f.mass - 1.0) > 1e-8) {
        std::ostringstream os;
        os << "product weight factor for axis " << i << " has discrete mass "
           << f.mass << ", expected 1";
        throw std::invalid_argument(os.str());
      }
    }
    out.cell.resize(mesh.cell_count());
    std::vector<int> idx(n, 0);
    for (std::size_t flat = 0; flat < out.cell.size(); ++flat) {
      double w = 1.0;
      for (int i = 0; i < n; ++i) w *= factors_[i].values[idx[i]];
      out.cell[flat] = w;
      for (int a = n - 1; a >= 0; --a) {
        if (++idx[a] < m) break;
        idx[a] = 0;
      }
    }
    out.gauge.resize(n);
    for (int i = 0; i < n; ++i) out.gauge[i] = factors_[i].values;
  } else {
    if (n > 3)
      throw std::invalid_argument("tensor weights are supported for n <= 3 only");
    if (tensor_.size() != mesh.cell_count())
      throw std::invalid_argument("tensor weight size does not match the mesh");
    for (double v : tensor_)
      if (!(v > 0.0))
        throw std::invalid_argument("weight density must be strictly positive");
    out.cell = tensor_;
    out.gauge.resize(n);
    for (int i = 0; i < n; ++i)
      out.gauge[i] = marginalize(tensor_, i, mesh).values;
  }
  return out;
}

SolveReport solve_weighted(const std::vector<MarginalTable>& marginals,
                           const WeightSpec& weights, double p,
                           const Mesh& mesh, const SolverConfig& config) {
  const MeasureWeights mw = weights.materialize(mesh);
  return continuation_sweep_weighted(marginals, mesh, {p}, config, &mw)
      .front();
}

namespace {

void check_strikes(const std::vector<double>& strikes,
                   const std::vector<double>& payoff) {
  if (strikes.size() < 5)
    throw std::invalid_argument("payoff table needs at least 5 strikes");
  if (payoff.size() != strikes.size())
    throw std::invalid_argument("strike and payoff tables differ in length");
  for (std::size_t j = 1; j < strikes.size(); ++j)
    if (!(strikes[j] > strikes[j - 1]))
      throw std::invalid_argument("strikes must be strictly increasing");
}

/// Three-point second derivative at an interior node of a non-uniform grid;
/// exact for quadratics.
double second_derivative(const std::vector<double>& x,
                         const std::vector<double>& f, std::size_t j) {
  const double hl = x[j] - x[j - 1];
  const double hr = x[j + 1] - x[j];
  return 2.0 * ((f[j + 1] - f[j]) / hr - (f[j] - f[j - 1]) / hl) / (hl + hr);
}

/// Three-point first derivative at an interior node; exact for quadratics.
double first_derivative(const std::vector<double>& x,
                        const std::vector<double>& f, std::size_t j) {
  const double hl = x[j] - x[j - 1];
  const double hr = x[j + 1] - x[j];
  return (f[j + 1] * hl * hl - f[j - 1] * hr * hr +
          f[j] * (hr * hr - hl * hl)) /
         (hl * hr * (hl + hr));
}

}  // namespace

PayoffDecomposition carr_madan_decompose(const std::vector<double>& strikes,
                                         const std::vector<double>& payoff,
                                         double k0) {
  check_strikes(strikes, payoff);
  if (k0 < strikes.front() || k0 > strikes.back()) {
    std::ostringstream os;
    os << "k0=" << k0 << " lies outside the strike grid ["
       << strikes.front() << ", " << strikes.back() << "]";
    throw std::invalid_argument(os.str());
  }
  const std::size_t last = strikes.size() - 1;
  std::size_t j0 = 0;
  double best = std::abs(strikes[0] - k0);
  for (std::size_t j = 1; j <= last; ++j) {
    const double d = std::abs(strikes[j] - k0);
    if (d < best) {
      best = d;
      j0 = j;
    }
  }
  if (j0 == 0 || j0 == last)
    throw std::invalid_argument(
        "k0 must snap to an interior grid point, away from the boundary");

  PayoffDecomposition dec;
  dec.strikes = strikes;
  dec.k0_index = j0;
  dec.k0 = strikes[j0];
  dec.bond_units = payoff[j0];
  dec.forward_units = first_derivative(strikes, payoff, j0);
  dec.k0_convexity = second_derivative(strikes, payoff, j0);
  for (std::size_t j = 1; j < j0; ++j) {
    dec.put_strikes.push_back(strikes[j]);
    dec.put_weights.push_back(second_derivative(strikes, payoff, j));
  }
  for (std::size_t j = j0 + 1; j < last; ++j) {
    dec.call_strikes.push_back(strikes[j]);
    dec.call_weights.push_back(second_derivative(strikes, payoff, j));
  }
  return dec;
}

std::vector<double> reconstruct(const PayoffDecomposition& decomposition,
                                const std::vector<double>& strikes) {
  const auto& dec = decomposition;

  // Trapezoid node weights over [first interior strike, k0] for the put leg
  // and [k0, last interior strike] for the call leg; k0 carries the half
  // weight of the panel it closes on each side.
  auto node_weight = [](const std::vector<double>& xs, std::size_t j) {
    const double left = (j == 0) ? 0.0 : xs[j] - xs[j - 1];
    const double right = (j + 1 == xs.size()) ? 0.0 : xs[j + 1] - xs[j];
    return 0.5 * (left + right);
  };

  std::vector<double> put_xs = dec.put_strikes;
  put_xs.push_back(dec.k0);
  std::vector<double> call_xs{dec.k0};
  call_xs.insert(call_xs.end(), dec.call_strikes.begin(),
                 dec.call_strikes.end());

  std::vector<double> out(strikes.size());
  for (std::size_t s = 0; s < strikes.size(); ++s) {
    const double K = strikes[s];
    double v = dec.bond_units + dec.forward_units * (K - dec.k0);
    for (std::size_t j = 0; j + 1 < put_xs.size(); ++j) {
      const double kink = put_xs[j] - K;
      if (kink > 0.0) v += dec.put_weights[j] * kink * node_weight(put_xs, j);
    }
    {
      const double w_put_k0 = node_weight(put_xs, put_xs.size() - 1);
      const double w_call_k0 = node_weight(call_xs, 0);
      const double kink = dec.k0 - K;
      if (kink > 0.0) v += dec.k0_convexity * kink * w_put_k0;
      if (-kink > 0.0) v += dec.k0_convexity * (-kink) * w_call_k0;
    }
    for (std::size_t j = 1; j < call_xs.size(); ++j) {
      const double kink = K - call_xs[j];
      if (kink > 0.0)
        v += dec.call_weights[j - 1] * kink * node_weight(call_xs, j);
    }
    out[s] = v;
  }
  return out;
}

}  // namespace minmarg
