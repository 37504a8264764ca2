#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "minmarg/analysis.hpp"
#include "minmarg/closed_form.hpp"
#include "minmarg/solver.hpp"
#include "testutil.hpp"

using namespace minmarg;

TEST_CASE("dual_map special values") {
  for (double s : {-2.0, -0.5, 0.0, 0.3, 1.7})
    CHECK(dual_map(s, 2.0, 0.0) == s);
  CHECK(dual_map(4.0, 3.0, 0.0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(dual_map(-2.0, 1.5, 0.0) == doctest::Approx(-4.0).epsilon(1e-15));
  CHECK(dual_map(0.0, 3.0, 0.0) == 0.0);
  CHECK(dual_map(0.0, 3.0, 1e-4) == 0.0);
  // Smoothed magnitude is (s^2 + eps^2)^{1/(2(p-1))}.
  CHECK(dual_map(3.0, 2.0, 4.0) == doctest::Approx(5.0).epsilon(1e-15));
}

TEST_CASE("dual_map_deriv values and the finite-difference oracle") {
  CHECK(dual_map_deriv(0.7, 2.0, 0.0) == 1.0);
  CHECK(dual_map_deriv(4.0, 3.0, 0.0) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK_THROWS_AS(dual_map_deriv(0.0, 3.0, 0.0), std::domain_error);
  CHECK(dual_map_deriv(0.0, 1.5, 0.0) == 0.0);

  for (double p : {1.5, 2.5}) {
    for (double eps : {0.0, 1e-3}) {
      for (double s = -2.0; s <= 2.0; s += 0.25) {
        if (std::abs(s) < 0.2) continue;
        const double step = 1e-6;
        const double fd =
            (dual_map(s + step, p, eps) - dual_map(s - step, p, eps)) /
            (2.0 * step);
        const double exact = dual_map_deriv(s, p, eps);
        CHECK(std::abs(fd - exact) <= 1e-6 * std::max(1.0, std::abs(exact)));
      }
    }
  }
}

TEST_CASE("residual vanishes at the uniform solution") {
  for (int n : {2, 3}) {
    const Mesh mesh = build_mesh(n, n == 2 ? 30 : 10);
    std::vector<MarginalTable> marginals(
        n, sample_marginal(MarginalSpec::uniform(), mesh));
    for (double p : {1.5, 2.0, 3.0}) {
      PotentialSet pots;
      pots.p = p;
      pots.phis.assign(n, std::vector<double>(mesh.cells(), 0.0));
      pots.phis[0].assign(mesh.cells(), static_cast<double>(n));
      const auto res = residual_vector(pots, marginals, mesh, 0.0);
      CHECK(testutil::sup_abs(res) <= 1e-15);
    }
  }
}

TEST_CASE("residual at zero potentials is minus the marginals") {
  const Mesh mesh = build_mesh(2, 12);
  const auto marginals = testutil::gaussian_pair(mesh);
  PotentialSet pots;
  pots.p = 2.5;
  pots.phis.assign(2, std::vector<double>(12, 0.0));
  const auto res = residual_vector(pots, marginals, mesh, 0.0);
  for (int i = 0; i < 2; ++i)
    for (int t = 0; t < 12; ++t)
      CHECK(res[i * 12 + t] ==
            -marginals[i].values[t]);
  CHECK(res[24] == 0.0);
}

TEST_CASE("residual input validation") {
  const Mesh mesh = build_mesh(2, 6);
  const auto marginals = testutil::gaussian_pair(mesh);
  PotentialSet bad;
  bad.p = 2.0;
  bad.phis.assign(2, std::vector<double>(5, 0.0));
  CHECK_THROWS_AS(residual_vector(bad, marginals, mesh, 0.0),
                  std::invalid_argument);
  PotentialSet ok;
  ok.p = 0.5;
  ok.phis.assign(2, std::vector<double>(6, 0.0));
  CHECK_THROWS_AS(residual_vector(ok, marginals, mesh, 0.0),
                  std::invalid_argument);

  MarginalSpec heavy = MarginalSpec::uniform();
  heavy.target_mass = 2.0;
  const std::vector<MarginalTable> mismatched{
      sample_marginal(MarginalSpec::uniform(), mesh),
      sample_marginal(heavy, mesh)};
  ok.p = 2.0;
  CHECK_THROWS_AS(residual_vector(ok, mismatched, mesh, 0.0),
                  std::invalid_argument);
}

TEST_CASE("marginal-block sums agree across axes at any potentials") {
  // The weighted row sums all equal the integral of the current density
  // minus the common mass, whatever the potentials are.
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    const int n = 2 + static_cast<int>(seed % 2);
    const Mesh mesh = build_mesh(n, 6);
    std::vector<MarginalTable> marginals;
    for (int i = 0; i < n; ++i) {
      MarginalSpec spec = MarginalSpec::tabulated(
          testutil::random_table(6, minmarg::subseed(seed, 100 + i), 0.3, 1.7));
      spec.normalize = true;
      marginals.push_back(sample_marginal(spec, mesh));
    }
    const PotentialSet pots = testutil::random_potentials(n, 6, 2.5, seed);
    const auto res = residual_vector(pots, marginals, mesh, 1e-8);
    double first = 0.0;
    for (int i = 0; i < n; ++i) {
      double sum = 0.0;
      for (int t = 0; t < 6; ++t) sum += res[i * 6 + t];
      sum /= 6;
      if (i == 0)
        first = sum;
      else
        CHECK(sum == doctest::Approx(first).epsilon(1e-12));
    }
  }
}

TEST_CASE("analytic Jacobian matches central differences") {
  int checked = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Mesh mesh = build_mesh(2, 6);
    std::vector<MarginalTable> marginals;
    for (int i = 0; i < 2; ++i) {
      MarginalSpec spec = MarginalSpec::tabulated(
          testutil::random_table(6, minmarg::subseed(seed, 200 + i), 0.3, 1.7));
      spec.normalize = true;
      marginals.push_back(sample_marginal(spec, mesh));
    }
    const double p = (seed % 2 == 0) ? 1.5 : 2.5;
    const double eps = 1e-2;
    const PotentialSet pots = testutil::random_potentials(2, 6, p, seed);
    const auto analytic = residual_jacobian(pots, mesh, eps);
    const auto fd = testutil::fd_jacobian(pots, marginals, mesh, eps);
    double scale = 1.0;
    for (double v : analytic) scale = std::max(scale, std::abs(v));
    double worst = 0.0;
    for (std::size_t k = 0; k < analytic.size(); ++k)
      worst = std::max(worst, std::abs(analytic[k] - fd[k]));
    CHECK(worst / scale <= 1e-5);
    ++checked;
  }
  CHECK(checked == 10);
}

TEST_CASE("solve_at_p converges on uniform data for p=3") {
  const Mesh mesh = build_mesh(2, 30);
  const std::vector<MarginalTable> marginals(
      2, sample_marginal(MarginalSpec::uniform(), mesh));
  const PotentialSet seed = l2_seed(l2_potentials(marginals, mesh));
  const SolveReport report = solve_at_p(marginals, mesh, 3.0, seed);
  CHECK(report.converged);
  CHECK(report.residual_inf <= 1e-9);
  for (double v : report.potentials.phis[0])
    CHECK(v == doctest::Approx(2.0).epsilon(1e-9));
  for (double v : report.potentials.phis[1])
    CHECK(std::abs(v) <= 1e-9);
  CHECK(report.bound == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("uniform companions give the power-law potential") {
  // With every other marginal uniform, phi_1 = n g_1^{p-1} and phi_i = 0
  // solves the system exactly; check the residual of that candidate and that
  // the solver lands on it.
  const Mesh mesh = build_mesh(2, 16);
  std::vector<MarginalTable> marginals{
      sample_marginal(MarginalSpec::gaussian(0.5, 0.1), mesh),
      sample_marginal(MarginalSpec::uniform(), mesh)};
  for (double p : {1.5, 3.0}) {
    PotentialSet exact;
    exact.p = p;
    exact.phis.assign(2, std::vector<double>(16, 0.0));
    for (int k = 0; k < 16; ++k)
      exact.phis[0][k] = 2.0 * std::pow(marginals[0].values[k], p - 1.0);
    const auto res = residual_vector(exact, marginals, mesh, 0.0);
    CHECK(testutil::sup_abs(res) <= 1e-12);

    const PotentialSet seed = l2_seed(l2_potentials(marginals, mesh));
    const SolveReport report =
        continuation_sweep(marginals, mesh, {p}).front();
    CHECK(report.converged);
    CHECK(testutil::sup_diff(report.potentials.phis[0], exact.phis[0]) <= 1e-6);
    CHECK(testutil::sup_abs(report.potentials.phis[1]) <= 1e-6);
  }
}

TEST_CASE("solve_at_p reproduces the explicit p=2 solution") {
  const Mesh mesh = build_mesh(2, 30);
  const auto marginals = testutil::gaussian_pair(mesh);
  const L2Solution closed = l2_potentials(marginals, mesh);
  const SolveReport report =
      solve_at_p(marginals, mesh, 2.0, l2_seed(closed));
  CHECK(report.converged);
  for (int i = 0; i < 2; ++i)
    CHECK(testutil::sup_diff(report.potentials.phis[i], closed.potentials[i]) <=
          1e-8);
}

TEST_CASE("non-convergence is reported, not thrown") {
  const Mesh mesh = build_mesh(2, 10);
  const auto marginals = testutil::gaussian_pair(mesh);
  PotentialSet bad_seed;
  bad_seed.p = 3.0;
  bad_seed.phis.assign(2, std::vector<double>(10, 5.0));
  SolverConfig config;
  config.max_iter = 1;
  config.polish_epsilons = {};
  const SolveReport report =
      solve_at_p(marginals, mesh, 3.0, bad_seed, config);
  CHECK_FALSE(report.converged);
  CHECK(report.iterations <= 1);
  CHECK(std::isfinite(report.residual_inf));
}

TEST_CASE("continuation at 2.0 equals the closed form") {
  const Mesh mesh = build_mesh(2, 30);
  const auto marginals = testutil::gaussian_pair(mesh);
  const auto reports = continuation_sweep(marginals, mesh, {2.0});
  REQUIRE(reports.size() == 1);
  const L2Solution closed = l2_potentials(marginals, mesh);
  for (int i = 0; i < 2; ++i)
    CHECK(testutil::sup_diff(reports[0].potentials.phis[i],
                             closed.potentials[i]) <= 1e-10);
  REQUIRE(reports[0].continuation_path.size() == 1);
  CHECK(reports[0].continuation_path[0].p == 2.0);
}

TEST_CASE("continuation ladder visits the expected exponents") {
  const Mesh mesh = build_mesh(2, 10);
  const auto marginals = testutil::gaussian_pair(mesh);
  const auto reports = continuation_sweep(marginals, mesh, {1.5});
  REQUIRE(reports.size() == 1);
  const auto& path = reports[0].continuation_path;
  REQUIRE(path.size() == 6);
  const double expected[] = {2.0, 1.9, 1.8, 1.7, 1.6, 1.5};
  for (int k = 0; k < 6; ++k)
    CHECK(path[k].p == doctest::Approx(expected[k]).epsilon(1e-12));
}

TEST_CASE("sweep over the full exponent range converges and orders ranges") {
  const Mesh mesh = build_mesh(2, 30);
  const auto marginals = testutil::gaussian_pair(mesh);
  std::vector<double> targets;
  for (int k = 0; k < 10; ++k) targets.push_back(1.2 + 0.2 * k);
  const auto reports = continuation_sweep(marginals, mesh, targets);
  REQUIRE(reports.size() == targets.size());
  auto range_of = [](const std::vector<double>& v) {
    double lo = v[0], hi = v[0];
    for (double x : v) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
    return hi - lo;
  };
  double previous = -1.0;
  for (std::size_t r = 0; r < reports.size(); ++r) {
    CHECK(reports[r].converged);
    CHECK(reports[r].residual_inf <= 1e-9);
    const double range = range_of(reports[r].potentials.phis[0]);
    if (r > 0) CHECK(range > previous);  // flatter toward 1, peaked beyond 2
    previous = range;
  }
}

TEST_CASE("equal marginals pin the trailing potentials together") {
  const Mesh mesh = build_mesh(3, 10);
  std::vector<MarginalTable> marginals(
      3, sample_marginal(MarginalSpec::gaussian(0.5, 0.1), mesh));
  const auto report = continuation_sweep(marginals, mesh, {2.5}).front();
  REQUIRE(report.converged);
  CHECK(testutil::sup_diff(report.potentials.phis[1],
                           report.potentials.phis[2]) <= 1e-8);
  // phi_1 differs from phi_2 by a constant only.
  std::vector<double> diff(10);
  for (int k = 0; k < 10; ++k)
    diff[k] = report.potentials.phis[0][k] - report.potentials.phis[1][k];
  double lo = diff[0], hi = diff[0];
  for (double v : diff) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK(hi - lo <= 1e-8);
}

TEST_CASE("uniform axes converge to constant potentials") {
  const Mesh mesh = build_mesh(2, 30);
  std::vector<MarginalTable> marginals{
      sample_marginal(MarginalSpec::uniform(), mesh),
      sample_marginal(MarginalSpec::gaussian(0.5, 0.1), mesh)};
  for (double p : {1.2, 3.0}) {
    const auto report = continuation_sweep(marginals, mesh, {p}).front();
    REQUIRE(report.converged);
    const auto& phi1 = report.potentials.phis[0];
    double lo = phi1[0], hi = phi1[0];
    for (double v : phi1) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    CHECK(hi - lo <= 1e-6);
  }
}

TEST_CASE("singular derivative surfaces as a domain error") {
  // p > 2 with no smoothing and a vanishing potential average has an
  // unbounded Jacobian; the solver propagates the failure.
  const Mesh mesh = build_mesh(2, 6);
  const auto marginals = testutil::gaussian_pair(mesh);
  PotentialSet zero;
  zero.p = 3.0;
  zero.phis.assign(2, std::vector<double>(6, 0.0));
  SolverConfig config;
  config.epsilon = 0.0;
  config.polish_epsilons = {};
  CHECK_THROWS_AS(solve_at_p(marginals, mesh, 3.0, zero, config),
                  std::domain_error);
}

TEST_CASE("sweep carries on past non-converged targets") {
  const Mesh mesh = build_mesh(2, 10);
  const auto marginals = testutil::gaussian_pair(mesh);
  SolverConfig config;
  config.max_iter = 1;
  config.delta_p = 1.0;
  const auto reports = continuation_sweep(marginals, mesh, {3.0, 1.2}, config);
  REQUIRE(reports.size() == 2);
  for (const auto& report : reports) {
    CHECK_FALSE(report.converged);
    CHECK(std::isfinite(report.residual_inf));
    CHECK_FALSE(report.continuation_path.empty());
  }
}

TEST_CASE("invalid continuation targets are rejected") {
  const Mesh mesh = build_mesh(2, 6);
  const auto marginals = testutil::gaussian_pair(mesh);
  CHECK_THROWS_AS(continuation_sweep(marginals, mesh, {1.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(continuation_sweep(marginals, mesh, {2.0, 0.5}),
                  std::invalid_argument);
}
