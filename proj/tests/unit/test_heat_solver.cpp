#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "diffusim/diagnostics.hpp"
#include "diffusim/heat_solver.hpp"

using namespace diffusim;

namespace {

Eigen::MatrixXd dense(const RadialLaplacian& lap, const std::vector<double>& a) {
  const auto n = static_cast<Eigen::Index>(lap.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto u = static_cast<std::size_t>(i);
    if (i > 0) m(i, i - 1) = lap.lower(u) / a[u];
    m(i, i) = lap.diag(u) / a[u];
    if (i + 1 < n) m(i, i + 1) = lap.upper(u) / a[u];
  }
  return m;
}

// Eigenvector of a^{-1} L belonging to its `which`-th largest eigenvalue.
std::pair<double, Field> mode(const RadialLaplacian& lap, const std::vector<double>& a, int which) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(dense(lap, a));
  std::vector<std::pair<double, Eigen::Index>> order;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    order.emplace_back(es.eigenvalues()(i).real(), i);
  }
  std::sort(order.begin(), order.end(), [](auto x, auto y) { return x.first > y.first; });
  const auto idx = order[static_cast<std::size_t>(which)].second;
  Field v(lap.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = es.eigenvectors()(static_cast<Eigen::Index>(i), idx).real();
  }
  return {order[static_cast<std::size_t>(which)].first, v};
}

}  // namespace

TEST_SUITE("heat") {

TEST_CASE("backward Euler on a three-node eigenmode") {
  const RadialLaplacian lap(3, 0.5, 1, Boundary::Neumann);
  const std::vector<double> a(3, 1.0);
  const auto [mu, v0] = mode(lap, a, 1);
  REQUIRE(mu < 0.0);
  Field v = v0;
  const double h = 0.1;
  theta_step(lap, a, 1.0, h, v.span());
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(std::abs(v[i] - v0[i] / (1.0 - h * mu)) < 1e-12);
  }
}

TEST_CASE("theta steps on an eigenmode of the damped operator") {
  const RadialGrid grid(16, 0.25, 2);
  const ProblemParams p(2, 0.5, 1.0);
  const RadialLaplacian lap(grid, Boundary::Neumann);
  const auto a = damping_profile(grid, 0.5);
  const auto [mu, v0] = mode(lap, a, 2);
  REQUIRE(mu < 0.0);

  HeatConfig cfg{.dt = 0.05, .theta = 0.5, .boundary = Boundary::Neumann};
  HeatState s = init_heat(grid, p, v0, 0.0, cfg);
  const Field vt = heat_time_derivative(s);
  for (std::size_t i = 0; i < 16; ++i) {
    CHECK(std::abs(vt[i] - mu * v0[i]) < 1e-9 * std::abs(mu));
  }
  s = step_heat(std::move(s));
  const double g = (1.0 + 0.5 * cfg.dt * mu) / (1.0 - 0.5 * cfg.dt * mu);
  for (std::size_t i = 0; i < 16; ++i) {
    CHECK(std::abs(s.v[i] - g * v0[i]) < 1e-12);
  }
  CHECK(s.t() == doctest::Approx(0.05));
}

TEST_CASE("constants stay constant with a reflecting boundary") {
  const RadialGrid grid(50, 0.1, 3);
  const ProblemParams p(3, 0.25, 1.0);
  const HeatConfig cfg{.dt = 0.1, .theta = 1.0, .boundary = Boundary::Neumann};
  const Field v = apply_E(Field(50, 2.0), 0.0, 3.0, grid, p, cfg);
  for (std::size_t i = 0; i < 50; ++i) {
    CHECK(std::abs(v[i] - 2.0) < 1e-12);
  }
}

TEST_CASE("damped mass decreases and the scheme is order preserving") {
  const RadialGrid grid(150, 0.05, 1);
  const ProblemParams p(1, 0.5, 1.0);
  const HeatConfig cfg{.dt = 0.05, .theta = 1.0};
  const Field big = bump_initial_data(grid, 1.0, 1.0);
  Field small = bump_initial_data(grid, 0.7, 0.8);
  HeatState hb = init_heat(grid, p, big, 0.0, cfg);
  HeatState hs = init_heat(grid, p, small, 0.0, cfg);
  double m = damped_mass(hb.v, hb.laplacian, hb.damping);
  for (int k = 0; k < 100; ++k) {
    hb = step_heat(std::move(hb));
    hs = step_heat(std::move(hs));
    const double m_next = damped_mass(hb.v, hb.laplacian, hb.damping);
    CHECK(m_next <= m * (1.0 + 1e-12));
    m = m_next;
    for (std::size_t i = 0; i < grid.n_points(); ++i) {
      CHECK(hb.v[i] >= hs.v[i]);
      CHECK(hs.v[i] >= 0.0);
    }
  }
}

TEST_CASE("solution operator") {
  const RadialGrid grid(120, 0.05, 2);
  const ProblemParams p(2, 0.5, 1.0);
  const HeatConfig cfg{.dt = 0.05, .theta = 1.0};
  const Field f = bump_initial_data(grid, 1.0, 1.0);

  SUBCASE("zero interval is the identity") { CHECK(apply_E(f, 1.5, 1.5, grid, p, cfg) == f); }
  SUBCASE("backwards evolution is rejected") {
    CHECK_THROWS_AS(apply_E(f, 2.0, 1.0, grid, p, cfg), std::invalid_argument);
  }
  SUBCASE("semigroup") {
    const Field half = apply_E(f, 0.0, 1.0, grid, p, cfg);
    const Field two = apply_E(half, 1.0, 2.0, grid, p, cfg);
    const Field direct = apply_E(f, 0.0, 2.0, grid, p, cfg);
    for (std::size_t i = 0; i < grid.n_points(); ++i) {
      CHECK(std::abs(two[i] - direct[i]) < 1e-13);
    }
  }
}

TEST_CASE("advance lands on the target time") {
  const RadialGrid grid(60, 0.05, 1);
  const ProblemParams p(1, 0.0, 1.0);
  HeatState s = init_heat(grid, p, bump_initial_data(grid, 1.0, 1.0), 0.5,
                          HeatConfig{.dt = 0.03, .theta = 1.0});
  int calls = 0;
  advance_heat_to(s, 0.71, [&](const HeatState&) { ++calls; });
  CHECK(s.t() == doctest::Approx(0.71).epsilon(1e-14));
  CHECK(calls >= 7);
  CHECK(calls <= 8);
  CHECK_THROWS_AS(advance_heat_to(s, 0.2), std::invalid_argument);
}

TEST_CASE("Gaussian against the free heat kernel") {
  // a = 1: exp(-r^2) evolves to (1+4t)^{-n/2} exp(-r^2/(1+4t))
  for (int n : {1, 3}) {
    const double dr = 0.01;
    const RadialGrid grid = RadialGrid::covering(12.0, dr, n);
    const ProblemParams p(n, 0.0, 1.0);
    Field g(grid.n_points());
    Field exact(grid.n_points());
    const double t = 1.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double r = grid.r(i);
      g[i] = std::exp(-r * r);
      exact[i] = std::pow(1.0 + 4.0 * t, -0.5 * n) * std::exp(-r * r / (1.0 + 4.0 * t));
    }
    g[g.size() - 1] = 0.0;
    const Field v = apply_E(g, 0.0, t, grid, p, HeatConfig{.dt = 0.005, .theta = 1.0});
    CHECK(profile_difference(v, exact, grid) / l2_norm(exact, grid) < 0.01);
  }
}

TEST_CASE("configuration checks") {
  CHECK_THROWS_AS((HeatConfig{.dt = 0.0}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((HeatConfig{.dt = 0.1, .theta = 0.4}.validate()), std::invalid_argument);
  CHECK(heat_outer_radius(ProblemParams(1, 0.0, 2.0), 3.0, 8.0) == doctest::Approx(32.0));
}

}
