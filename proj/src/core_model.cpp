#include "diffusim/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace diffusim {

namespace {

void check_alpha(double alpha) {
  if (!(alpha >= 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("damping exponent alpha must lie in [0, 1), got " +
                                std::to_string(alpha));
  }
}

}  // namespace

ProblemParams::ProblemParams(int n, double a, double L)
    : n_dim(n), alpha(a), support_radius(L) {
  validate();
}

void ProblemParams::validate() const {
  if (n_dim < 1) {
    throw std::invalid_argument("dimension must be >= 1");
  }
  check_alpha(alpha);
  if (!(support_radius > 0.0)) {
    throw std::invalid_argument("support radius L must be positive");
  }
}

WeightParams::WeightParams(double alpha, double delta, double epsilon)
    : alpha_(alpha), delta_(delta), epsilon_(epsilon) {
  check_alpha(alpha);
  if (!(delta > 0.0) || !(epsilon > 0.0)) {
    throw std::invalid_argument("delta and epsilon must be positive");
  }
  const double s = 2.0 - alpha;
  A_ = 1.0 / (s * s * (2.0 + delta));
}

RadialGrid::RadialGrid(std::size_t n_points, double dr, int n_dim)
    : n_points_(n_points), dr_(dr), n_dim_(n_dim) {
  if (n_points < kMinPoints) {
    throw std::invalid_argument("radial grid needs at least 16 nodes");
  }
  if (!(dr > 0.0) || !std::isfinite(dr)) {
    throw std::invalid_argument("mesh spacing dr must be positive");
  }
  if (n_dim < 1) {
    throw std::invalid_argument("dimension must be >= 1");
  }
}

RadialGrid RadialGrid::covering(double r_max, double dr, int n_dim) {
  if (!(dr > 0.0)) {
    throw std::invalid_argument("mesh spacing dr must be positive");
  }
  // tolerate r_max/dr landing a hair above an integer
  const double cells = std::ceil(r_max / dr - 1e-9);
  const auto n = static_cast<std::size_t>(std::max(cells, 0.0)) + 1;
  return RadialGrid(std::max(n, kMinPoints), dr, n_dim);
}

bool Field::all_finite() const {
  return std::all_of(values_.begin(), values_.end(),
                     [](double v) { return std::isfinite(v); });
}

double damping_coefficient(double r, double alpha) {
  check_alpha(alpha);
  if (alpha == 0.0) {
    return 1.0;
  }
  return std::pow(1.0 + r * r, -0.5 * alpha);
}

std::vector<double> damping_profile(const RadialGrid& grid, double alpha) {
  std::vector<double> a(grid.n_points());
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = damping_coefficient(grid.r(i), alpha);
  }
  return a;
}

double weight_psi(double t, double r, const WeightParams& w) {
  if (t < 0.0 || r < 0.0) {
    throw std::invalid_argument("weight_psi needs t >= 0 and r >= 0");
  }
  return w.A() * std::pow(1.0 + r * r, 0.5 * (2.0 - w.alpha())) / (1.0 + t);
}

RateTable theoretical_rates(const ProblemParams& p, int k) {
  p.validate();
  if (k < 0) {
    throw std::invalid_argument("derivative order must be >= 0");
  }
  const double n = p.n_dim;
  const double a = p.alpha;
  const double base = (n - a) / (2.0 - a);
  return RateTable{
      .l2_rate = (n - 2.0 * a) / (2.0 * (2.0 - a)),
      .weighted_sq_rate = base + 2.0 * k,
      .weighted_grad_sq_rate = base + 2.0 * k + 1.0,
  };
}

double self_similar_profile(double t, double r, const ProblemParams& p) {
  if (!(t > 0.0)) {
    throw std::invalid_argument("self-similar profile needs t > 0");
  }
  const double s = 2.0 - p.alpha;
  const double exponent = (p.n_dim - p.alpha) / s;
  return std::pow(t, -exponent) * std::exp(-std::pow(r, s) / (s * s * t));
}

Field sample_profile(double t, const RadialGrid& grid, const ProblemParams& p) {
  Field g(grid.n_points());
  for (std::size_t i = 0; i < g.size(); ++i) {
    g[i] = self_similar_profile(t, grid.r(i), p);
  }
  return g;
}

Field bump_initial_data(const RadialGrid& grid, double L, double amplitude) {
  if (!(L > 0.0) || !(L < grid.r_max())) {
    throw std::invalid_argument("bump support radius must satisfy 0 < L < r_max");
  }
  Field f(grid.n_points());
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double s = grid.r(i) / L;
    if (s < 1.0) {
      f[i] = amplitude * std::exp(1.0 - 1.0 / (1.0 - s * s));
    }
  }
  return f;
}

}  // namespace diffusim
