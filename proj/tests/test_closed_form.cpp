#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "minmarg/analysis.hpp"
#include "minmarg/closed_form.hpp"
#include "minmarg/solver.hpp"
#include "testutil.hpp"

using namespace minmarg;

TEST_CASE("uniform marginals give constant potentials") {
  const Mesh mesh = build_mesh(2, 30);
  const std::vector<MarginalTable> marginals{
      sample_marginal(MarginalSpec::uniform(), mesh),
      sample_marginal(MarginalSpec::uniform(), mesh)};
  const L2Solution sol = l2_potentials(marginals, mesh);
  for (double v : sol.potentials[0]) CHECK(v == 2.0);
  for (double v : sol.potentials[1]) CHECK(v == 0.0);
  CHECK(sol.bound == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("gaussian marginals reproduce the affine formulas") {
  const Mesh mesh = build_mesh(2, 30);
  const auto marginals = testutil::gaussian_pair(mesh);
  const L2Solution sol = l2_potentials(marginals, mesh);
  for (int k = 0; k < 30; ++k) {
    CHECK(sol.potentials[0][k] ==
          doctest::Approx(2.0 * marginals[0].values[k]).epsilon(1e-15));
    CHECK(sol.potentials[1][k] ==
          doctest::Approx(2.0 * (marginals[1].values[k] - 1.0)).epsilon(1e-13));
  }
  // Gauge holds in the discrete sense.
  double gauge = 0.0;
  for (double v : sol.potentials[1]) gauge += v;
  CHECK(std::abs(gauge / 30) <= 1e-14);
}

TEST_CASE("three equal linear marginals") {
  const Mesh mesh = build_mesh(3, 16);
  std::vector<double> linear(16);
  for (int k = 0; k < 16; ++k) linear[k] = 2.0 * mesh.centers()[k];
  const MarginalTable g = sample_marginal(MarginalSpec::tabulated(linear), mesh);
  REQUIRE(g.mass == doctest::Approx(1.0).epsilon(1e-15));
  const std::vector<MarginalTable> marginals{g, g, g};
  const L2Solution sol = l2_potentials(marginals, mesh);
  for (int k = 0; k < 16; ++k) {
    const double x = mesh.centers()[k];
    CHECK(sol.potentials[0][k] == doctest::Approx(6.0 * x).epsilon(1e-14));
    CHECK(sol.potentials[1][k] ==
          doctest::Approx(3.0 * (2.0 * x - 1.0)).epsilon(1e-13));
    CHECK(sol.potentials[2][k] ==
          doctest::Approx(3.0 * (2.0 * x - 1.0)).epsilon(1e-13));
  }
}

TEST_CASE("mass mismatch is rejected") {
  const Mesh mesh = build_mesh(2, 8);
  const MarginalTable unit = sample_marginal(MarginalSpec::uniform(), mesh);
  MarginalSpec doubled = MarginalSpec::uniform();
  doubled.target_mass = 2.0;
  const MarginalTable two = sample_marginal(doubled, mesh);
  CHECK_THROWS_AS(l2_potentials({unit, two}, mesh), std::invalid_argument);
  CHECK_THROWS_AS(l2_bound({unit, two}, 1.0, mesh), std::invalid_argument);
}

TEST_CASE("quadratic bound for linear marginals") {
  // g_1 = g_2 = 2x: the exact integral of (2x)^2 is 4/3 and the midpoint sum
  // on m cells is 4/3 - 1/(3 m^2), so the discrete bound is 5/3 - 2/(3 m^2).
  const Mesh mesh = build_mesh(2, 30);
  std::vector<double> linear(30);
  for (int k = 0; k < 30; ++k) linear[k] = 2.0 * mesh.centers()[k];
  const MarginalTable g = sample_marginal(MarginalSpec::tabulated(linear), mesh);
  const double bound = l2_bound({g, g}, g.mass, mesh);
  CHECK(bound == doctest::Approx(5.0 / 3.0 - 2.0 / 2700.0).epsilon(1e-14));
  CHECK(std::abs(bound - 5.0 / 3.0) <= 1e-3);

  // Fine-grid quadrature oracle for the exact value.
  const double fine = testutil::midpoint_quadrature(
      [](double x) { return 4.0 * x * x; }, 4096);
  CHECK(std::abs(2.0 * fine - 1.0 - 5.0 / 3.0) <= 1e-6);
}

TEST_CASE("zero-mass signed marginals lose the mass term") {
  const Mesh mesh = build_mesh(2, 10);
  std::vector<double> signedvals(10);
  for (int k = 0; k < 10; ++k) signedvals[k] = mesh.centers()[k] - 0.5;
  const MarginalTable g =
      sample_marginal(MarginalSpec::tabulated(signedvals), mesh);
  REQUIRE(std::abs(g.mass) <= 1e-15);
  double expected = 0.0;
  for (double v : signedvals) expected += 2.0 * v * v / 10;
  CHECK(l2_bound({g, g}, 0.0, mesh) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("sharpness identity of the minimal density") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const int n = 2 + static_cast<int>(seed % 2);
    const Mesh mesh = build_mesh(n, 7);
    std::vector<MarginalTable> marginals;
    for (int i = 0; i < n; ++i) {
      MarginalSpec spec = MarginalSpec::tabulated(
          testutil::random_table(7, minmarg::subseed(seed, i), 0.2, 2.0));
      spec.normalize = true;
      marginals.push_back(sample_marginal(spec, mesh));
    }
    const L2Solution sol = l2_potentials(marginals, mesh);
    const GridTable h = l2_minimal_density(sol, mesh);
    double norm2 = 0.0;
    for (double v : h) norm2 += v * v;
    norm2 /= cell_divisor(mesh.cells(), n);
    CHECK(norm2 == doctest::Approx(sol.bound).epsilon(1e-12));
  }
}

TEST_CASE("closed form solves the p=2 residual system") {
  const Mesh mesh = build_mesh(2, 30);
  const auto marginals = testutil::gaussian_pair(mesh, 1.0 / 3.0, 2.0 / 3.0);
  const PotentialSet pots = l2_seed(l2_potentials(marginals, mesh));
  const auto res = residual_vector(pots, marginals, mesh, 0.0);
  CHECK(testutil::sup_abs(res) <= 1e-12);
}

TEST_CASE("random feasible perturbations cannot beat the bound") {
  const Mesh mesh = build_mesh(2, 12);
  const auto marginals = testutil::gaussian_pair(mesh);
  const L2Solution sol = l2_potentials(marginals, mesh);
  const GridTable h = l2_minimal_density(sol, mesh);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Perturbation phi = random_perturbation(mesh, seed, 1e-2);
    double norm2 = 0.0;
    for (std::size_t c = 0; c < h.size(); ++c) {
      const double v = h[c] + phi.values[c];
      norm2 += v * v;
    }
    norm2 /= cell_divisor(mesh.cells(), mesh.dim());
    CHECK(norm2 >= sol.bound - 1e-10);
  }
}
