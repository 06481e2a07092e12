#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "doctest.h"
#include "diffusim/radial_operator.hpp"

using namespace diffusim;

TEST_SUITE("radial") {

TEST_CASE("quadratic is reproduced exactly") {
  // Delta r^2 = 2n, including the origin row
  for (int n : {1, 2, 3}) {
    const RadialGrid grid(40, 0.05, n);
    const RadialLaplacian lap(grid, Boundary::Neumann);
    Field u(grid.n_points());
    for (std::size_t i = 0; i < u.size(); ++i) {
      u[i] = grid.r(i) * grid.r(i);
    }
    const Field lu = lap.apply(u);
    for (std::size_t i = 0; i + 1 < u.size(); ++i) {
      CHECK(lu[i] == doctest::Approx(2.0 * n).epsilon(1e-9));
    }
  }
}

TEST_CASE("origin row") {
  const RadialLaplacian lap(20, 0.5, 3, Boundary::Dirichlet);
  CHECK(lap.diag(0) == doctest::Approx(-6.0 / 0.25));
  CHECK(lap.upper(0) == doctest::Approx(6.0 / 0.25));
  CHECK(lap.lower(0) == 0.0);
  CHECK(lap.lower(1) == doctest::Approx(0.0));
  CHECK(lap.is_fixed(19));
  CHECK_FALSE(lap.is_fixed(18));
}

TEST_CASE("weights symmetrize the operator") {
  for (int n : {1, 2, 3}) {
    for (Boundary b : {Boundary::Dirichlet, Boundary::Neumann}) {
      const RadialLaplacian lap(30, 0.1, n, b);
      const auto& w = lap.node_weights();
      const std::size_t last = b == Boundary::Dirichlet ? lap.size() - 1 : lap.size();
      for (std::size_t i = 0; i + 1 < last; ++i) {
        CHECK(w[i] * lap.upper(i) == doctest::Approx(w[i + 1] * lap.lower(i + 1)).epsilon(1e-13));
      }
    }
  }
}

TEST_CASE("weights follow the radial measure") {
  for (int n : {1, 2, 3}) {
    const double dr = 0.1;
    const RadialLaplacian lap(30, dr, n, Boundary::Dirichlet);
    for (std::size_t i = 1; i + 1 < lap.size(); ++i) {
      const double r = static_cast<double>(i) * dr;
      const double expected = sphere_measure(n) * std::pow(r, n - 1) * dr;
      CHECK(lap.node_weights()[i] == doctest::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("operator is negative semidefinite") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int n : {1, 2, 3}) {
    for (Boundary b : {Boundary::Dirichlet, Boundary::Neumann}) {
      const RadialLaplacian lap(25, 0.2, n, b);
      for (int trial = 0; trial < 20; ++trial) {
        Field u(lap.size());
        Field v(lap.size());
        for (std::size_t i = 0; i < u.size(); ++i) {
          u[i] = dist(rng);
          v[i] = dist(rng);
        }
        if (b == Boundary::Dirichlet) {
          u[u.size() - 1] = 0.0;
          v[v.size() - 1] = 0.0;
        }
        const Field lv = lap.apply(v);
        double ulv = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) {
          ulv += lap.node_weights()[i] * u[i] * lv[i];
        }
        CHECK(lap.stiffness_product(u.span(), v.span()) == doctest::Approx(-ulv).epsilon(1e-10));
        CHECK(lap.stiffness_product(u.span(), u.span()) >= 0.0);
      }
    }
  }
}

TEST_CASE("constants are in the Neumann kernel") {
  const RadialLaplacian lap(20, 0.1, 2, Boundary::Neumann);
  const Field lu = lap.apply(Field(20, 3.0));
  for (std::size_t i = 0; i < lu.size(); ++i) {
    CHECK(std::abs(lu[i]) < 1e-10);
  }
}

TEST_CASE("sphere measure") {
  CHECK(sphere_measure(1) == doctest::Approx(2.0));
  CHECK(sphere_measure(2) == doctest::Approx(2.0 * std::numbers::pi));
  CHECK(sphere_measure(3) == doctest::Approx(4.0 * std::numbers::pi));
}

TEST_CASE("dimension four is rejected") {
  CHECK_THROWS_AS(RadialLaplacian(20, 0.1, 4, Boundary::Dirichlet), std::invalid_argument);
  CHECK_THROWS_AS(RadialLaplacian(20, 0.1, 0, Boundary::Dirichlet), std::invalid_argument);
}

TEST_CASE("size mismatch") {
  const RadialLaplacian lap(20, 0.1, 1, Boundary::Dirichlet);
  CHECK_THROWS_AS(lap.apply(Field(19)), std::invalid_argument);
}

}
