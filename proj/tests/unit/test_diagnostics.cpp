#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "diffusim/diagnostics.hpp"
#include "diffusim/harness.hpp"
#include "diffusim/scenario.hpp"

using namespace diffusim;

TEST_SUITE("diagnostics") {

TEST_CASE("flat norm") {
  const RadialGrid grid(101, 0.05, 1);
  const double R = grid.r_max();
  CHECK(l2_norm(Field(101, 1.0), grid) == doctest::Approx(std::sqrt(2.0 * R)).epsilon(1e-14));
}

TEST_CASE("Gaussian norm in three dimensions") {
  // 4 pi int r^2 exp(-2 r^2) dr = pi^{3/2} / (2 sqrt 2)
  const RadialGrid grid = RadialGrid::covering(8.0, 1e-3, 3);
  Field g(grid.n_points());
  for (std::size_t i = 0; i < g.size(); ++i) {
    g[i] = std::exp(-grid.r(i) * grid.r(i));
  }
  CHECK(l2_norm(g, grid) == doctest::Approx(1.40310).epsilon(1e-5));
  const double exact = std::sqrt(std::pow(std::numbers::pi, 1.5) / (2.0 * std::sqrt(2.0)));
  CHECK(std::abs(l2_norm(g, grid) - exact) < 1e-6);
}

TEST_CASE("profile norm ratio follows the predicted rate") {
  const ProblemParams p(3, 0.5, 1.0);
  const RadialGrid grid = RadialGrid::covering(60.0, 1e-3, 3);
  const double ratio =
      l2_norm(sample_profile(2.0, grid, p), grid) / l2_norm(sample_profile(1.0, grid, p), grid);
  const double expected = std::pow(2.0, -theoretical_rates(p).l2_rate);
  CHECK(std::abs(ratio - expected) < 1e-4);
}

TEST_CASE("outer mass") {
  const RadialGrid grid(101, 0.1, 1);
  const Field one(101, 1.0);
  CHECK(mass_outside(one, grid, 5.0) == doctest::Approx(std::sqrt(2.0 * 5.0)).epsilon(1e-12));
  CHECK(mass_outside(one, grid, 0.0) == doctest::Approx(l2_norm(one, grid)));
  CHECK(mass_outside(one, grid, 20.0) == 0.0);
}

TEST_CASE("weighted integrals") {
  const RadialGrid grid(201, 0.05, 2);
  const WeightParams w(0.5, 0.1, 0.1);
  const Field f = bump_initial_data(grid, 3.0, 1.0);
  const double plain = l2_norm_squared(f, grid);

  SUBCASE("bounded by the extreme weights") {
    const double t = 2.0;
    const double top = std::exp(2.0 * weight_psi(t, 3.0, w));
    const double bottom = std::exp(2.0 * weight_psi(t, 0.0, w));
    const double v = weighted_integral(f, t, w, false, grid);
    CHECK(v >= bottom * plain * (1.0 - 1e-12));
    CHECK(v <= top * plain * (1.0 + 1e-12));
    CHECK(weighted_integral(f, t, w, true, grid) < v);
  }
  SUBCASE("weight fades for large times") {
    CHECK(weighted_integral(f, 1e12, w, false, grid) == doctest::Approx(plain).epsilon(1e-9));
  }
  SUBCASE("unrepresentable results throw") {
    const RadialGrid wide(40001, 0.05, 1);
    const WeightParams w0(0.0, 0.1, 0.1);
    CHECK_THROWS_AS(weighted_integral(Field(40001, 1.0), 0.0, w0, false, wide),
                    std::overflow_error);
  }
  SUBCASE("large exponents stay finite in the log domain") {
    // 2 psi is about 857 at r = 60 while f^2 = 1e-200
    const RadialGrid wide(1201, 0.05, 1);
    const WeightParams w0(0.0, 0.1, 0.1);
    Field spot(1201);
    spot[1199] = 1e-100;
    const double v = weighted_integral(spot, 0.0, w0, false, wide);
    CHECK(std::isfinite(v));
    CHECK(v > 1e100);
  }
}

TEST_CASE("initial norm against fine quadrature") {
  // u = exp(-r^2), u_t = 0 in one dimension: I_0 = int e^{2psi} (u^2 + u_r^2) over the line
  const RadialGrid grid = RadialGrid::covering(10.0, 1e-3, 1);
  const ProblemParams p(1, 0.5, 1.0);
  const WeightParams w(0.5, 0.1, 0.1);
  Field u0(grid.n_points());
  for (std::size_t i = 0; i < u0.size(); ++i) {
    u0[i] = std::exp(-grid.r(i) * grid.r(i));
  }
  u0[u0.size() - 1] = 0.0;
  const auto d = initial_derivatives(u0, Field(u0.size()), grid, p);
  const double I0 = initial_norms(d, w, grid, 0).front();

  // Simpson on [0, 10] with 2e5 panels; u_t = 0 so only u^2 and u_r^2 enter
  const int m = 200000;
  const double h = 10.0 / m;
  double acc = 0.0;
  for (int j = 0; j <= m; ++j) {
    const double r = j * h;
    const double e = std::exp(-r * r);
    const double val = std::exp(2.0 * weight_psi(0.0, r, w)) * (e * e + 4.0 * r * r * e * e);
    acc += val * (j == 0 || j == m ? 1.0 : (j % 2 == 1 ? 4.0 : 2.0));
  }
  const double exact = 2.0 * acc * h / 3.0;
  CHECK(std::abs(I0 - exact) < 1e-6);

  CHECK_THROWS_AS(initial_norms(d, w, grid, 3), std::invalid_argument);
  const auto all = initial_norms(d, w, grid, 2);
  CHECK(all[1] >= all[0]);
  CHECK(all[2] >= all[1]);
}

TEST_CASE("energy functionals") {
  const RadialGrid grid(101, 0.05, 2);
  const WeightParams w(0.25, 0.1, 0.1);
  WaveSnapshot zero{.t = 3.0, .u = Field(101), .u_t = Field(101), .u_tt = {}, .u_ttt = {}};
  const auto e0 = energy_functionals(zero, w, 1.0, 0.1, grid);
  CHECK(e0.E1 == 0.0);
  CHECK(e0.E1_psi == 0.0);
  CHECK(e0.H1_tilde == 0.0);

  WaveSnapshot s = zero;
  s.u = bump_initial_data(grid, 1.0, 1.0);
  s.u_t = bump_initial_data(grid, 1.0, 0.5);
  const auto e = energy_functionals(s, w, 1.0, 0.1, grid);
  CHECK(e.E1 > 0.0);
  CHECK(e.E1_psi > 0.0);
  CHECK(e.H1_tilde > 0.0);
  CHECK_THROWS_AS(energy_functionals(s, WeightParams(0.25, 1.0, 0.1), 1.0, 0.1, grid),
                  std::invalid_argument);
}

TEST_CASE("power-law fit is exact on a power law") {
  DecaySeries s("p");
  for (int i = 1; i <= 40; ++i) {
    const double t = 1.5 * i;
    s.add(t, 3.0 * std::pow(t, -1.25));
  }
  const auto fit = fit_decay_rate(s, 2.0, 50.0);
  CHECK(std::abs(fit.slope + 1.25) < 1e-12);
  CHECK(std::abs(fit.intercept - std::log(3.0)) < 1e-12);
  CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fit.n_samples == 32);
  CHECK_THROWS_AS(fit_decay_rate(s, 100.0, 200.0), std::invalid_argument);

  const double x[] = {0.0, 1.0, 2.0, 3.0};
  const double y[] = {1.0, 3.0, 5.0, 7.0};
  const auto line = fit_line(x, y);
  CHECK(line.slope == doctest::Approx(2.0));
  CHECK(line.intercept == doctest::Approx(1.0));
}

TEST_CASE("decay series rules") {
  DecaySeries s("x");
  s.add(1.0, 2.0);
  s.add(2.0, 0.0);
  CHECK(s.dropped() == 1);
  CHECK(s.samples().size() == 1);
  CHECK_THROWS_AS(s.add(2.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(s.add(3.0, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(s.add(3.0, std::numeric_limits<double>::quiet_NaN()), std::invalid_argument);
}

TEST_CASE("running median") {
  const double v[] = {1.0, 9.0, 2.0, 3.0, 8.0};
  const auto m = median3(v);
  CHECK(m == std::vector<double>{1.0, 2.0, 3.0, 3.0, 8.0});
  CHECK(median3(std::span<const double>{}).empty());
}

TEST_CASE("parabolic region") {
  const ProblemParams p(2, 0.5, 1.0);
  const WeightParams w(0.5, 0.1, 0.1);
  CHECK_THROWS_AS(ParabolicRegionSpec(0.6, 0.1, w), std::invalid_argument);
  CHECK_THROWS_AS(ParabolicRegionSpec(0.25, 2.0 * w.A(), w), std::invalid_argument);
  const ParabolicRegionSpec spec(0.25, w.A(), w);
  const double t = 4.0;
  const double R = spec.threshold_radius(t, 0.5);
  CHECK(std::pow(1.0 + R * R, 0.75) == doctest::Approx(std::pow(1.0 + t, 1.25)));

  const RadialGrid grid(301, 0.05, 2);
  const Field f = bump_initial_data(grid, 12.0, 1.0);
  const double total = l2_norm_squared(f, grid);
  const double inside = region_complement_mass(f, t, spec, grid, p);
  const double outside = region_mass(f, t, spec, grid, p);
  CHECK(inside + outside == doctest::Approx(total).epsilon(1e-12));
  CHECK(outside > 0.0);
  CHECK(inside > 0.0);
}

TEST_CASE("profile difference needs matching sizes") {
  const RadialGrid grid(20, 0.1, 1);
  CHECK(profile_difference(Field(20, 1.0), Field(20, 1.0), grid) == 0.0);
  CHECK_THROWS_AS(profile_difference(Field(20), Field(19), grid), std::invalid_argument);
}

TEST_CASE("diffusion profile data") {
  const RadialGrid grid(40, 0.1, 1);
  const ProblemParams p(1, 0.5, 1.0);
  const Field d = diffusion_profile_data(Field(40, 1.0), Field(40, 2.0), grid, p);
  CHECK(d[10] == doctest::Approx(1.0 + 2.0 / damping_coefficient(1.0, 0.5)));
}

TEST_CASE("Duhamel residual") {
  Scenario s = parse_scenario(R"(
[problem]
n = 1
alpha = 0.5
[grid]
dr = 0.04
[wave]
cfl_factor = 1.0
[time]
t_max = 20.0
[fit]
t_lo = 5.0
heat_t_lo = 5.0
[profile]
t_hi = 15.0
[duhamel]
t = 2.0
nodes = 33
)");
  const RadialGrid grid = scenario_grid(s);
  const double times[] = {1.0, 2.0};
  const auto wave = run_wave_trajectory(s, grid, {times, times + 2}, true);
  REQUIRE(wave.ok());
  const auto& h = wave.duhamel;
  REQUIRE(h.times.size() == 33);
  const HeatConfig heat = s.duhamel_heat();

  SUBCASE("product rule is accurate") {
    const double r = duhamel_residual(h, grid, s.problem, heat);
    CHECK(r < 0.02);
  }
  SUBCASE("sweep and parallel sums agree for any thread count") {
    // spacing 2/32 is a whole number of these steps
    HeatConfig heat = s.duhamel_heat();
    heat.dt = 0.0125;
    const double sweep = duhamel_residual(h, grid, s.problem, heat, 1, DuhamelMethod::TrapezoidSweep);
    const double par1 =
        duhamel_residual(h, grid, s.problem, heat, 1, DuhamelMethod::TrapezoidParallel);
    const double par3 =
        duhamel_residual(h, grid, s.problem, heat, 3, DuhamelMethod::TrapezoidParallel);
    CHECK(par1 == par3);
    CHECK(std::abs(sweep - par1) < 1e-12);
    CHECK(duhamel_residual(h, grid, s.problem, heat, 3) ==
          duhamel_residual(h, grid, s.problem, heat, 1));
  }
  SUBCASE("zero horizon") {
    DuhamelHistory z;
    z.times.assign(16, 0.0);
    z.sources.assign(16, Field(grid.n_points()));
    z.u0 = h.u0;
    z.u_final = h.u0;
    CHECK(duhamel_residual(z, grid, s.problem, heat) == 0.0);
  }
  SUBCASE("too few nodes") {
    DuhamelHistory few = h;
    few.times.resize(15);
    few.sources.resize(15);
    CHECK_THROWS_AS(duhamel_residual(few, grid, s.problem, heat), std::invalid_argument);
  }
}

}
