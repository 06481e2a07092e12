#include "diffusim/radial_operator.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace diffusim {

RadialLaplacian::RadialLaplacian(std::size_t n_points, double dr, int n_dim, Boundary boundary)
    : dr_(dr), n_dim_(n_dim), boundary_(boundary) {
  if (n_points < 2) {
    throw std::invalid_argument("radial Laplacian needs at least 2 nodes");
  }
  if (!(dr > 0.0)) {
    throw std::invalid_argument("mesh spacing dr must be positive");
  }
  if (n_dim < 1 || n_dim > kMaxDim) {
    // n >= 4 makes the first sub-diagonal coefficient negative: the stencil
    // is no longer monotone nor symmetrizable.
    throw std::invalid_argument("radial solvers support dimensions 1..3, got " +
                                std::to_string(n_dim));
  }
  const std::size_t n = n_points;
  const double inv = 1.0 / (dr * dr);
  lower_.assign(n, 0.0);
  diag_.assign(n, 0.0);
  upper_.assign(n, 0.0);

  diag_[0] = -2.0 * n_dim * inv;
  upper_[0] = 2.0 * n_dim * inv;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double k = (n_dim - 1) / (2.0 * static_cast<double>(i));
    lower_[i] = (1.0 - k) * inv;
    diag_[i] = -2.0 * inv;
    upper_[i] = (1.0 + k) * inv;
  }
  if (boundary_ == Boundary::Neumann) {
    lower_[n - 1] = 2.0 * inv;
    diag_[n - 1] = -2.0 * inv;
  }
  build_weights();
}

RadialLaplacian::RadialLaplacian(const RadialGrid& grid, Boundary boundary)
    : RadialLaplacian(grid.n_points(), grid.dr(), grid.n_dim(), boundary) {}

void RadialLaplacian::build_weights() {
  const std::size_t n = size();
  std::vector<double> w(n, 0.0);
  // w_{i+1} lower_{i+1} = w_i upper_i. For n = 3 the first lower coefficient
  // vanishes, which forces w_0 = 0; start the recursion at node 1 then.
  std::size_t start = 0;
  if (n > 1 && lower_[1] == 0.0 && !(boundary_ == Boundary::Dirichlet && n == 2)) {
    start = 1;
  }
  w[start] = 1.0;
  const std::size_t last_equation = boundary_ == Boundary::Dirichlet ? n - 1 : n;
  for (std::size_t i = start; i + 1 < last_equation; ++i) {
    w[i + 1] = w[i] * upper_[i] / lower_[i + 1];
  }
  if (boundary_ == Boundary::Dirichlet) {
    // held node: any positive weight works since the value stays 0
    w[n - 1] = n > 2 ? 0.5 * w[n - 2] : w[0];
  }
  // for n <= 3 the recursion gives w_i proportional to i^{n-1} for i >= 1
  double scale = 1.0;
  if (n > 1 && w[1] > 0.0) {
    scale = std::pow(dr_, n_dim_ - 1) / w[1];
  }
  const double measure = sphere_measure(n_dim_) * dr_;
  node_weights_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    node_weights_[i] = w[i] * scale * measure;
  }
  edge_weights_.assign(n - 1, 0.0);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    edge_weights_[i] = node_weights_[i] * upper_[i];
  }
}

void RadialLaplacian::apply(std::span<const double> u, std::span<double> out) const {
  const std::size_t n = size();
  if (u.size() != n || out.size() != n) {
    throw std::invalid_argument("field size does not match the Laplacian");
  }
  out[0] = diag_[0] * u[0] + upper_[0] * u[1];
  for (std::size_t i = 1; i + 1 < n; ++i) {
    out[i] = lower_[i] * u[i - 1] + diag_[i] * u[i] + upper_[i] * u[i + 1];
  }
  if (n > 1) {
    out[n - 1] = lower_[n - 1] * u[n - 2] + diag_[n - 1] * u[n - 1];
  }
}

Field RadialLaplacian::apply(const Field& u) const {
  Field out(u.size());
  apply(u.span(), out.span());
  return out;
}

double RadialLaplacian::stiffness_product(std::span<const double> u,
                                          std::span<const double> v) const {
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < size(); ++i) {
    sum += edge_weights_[i] * (u[i + 1] - u[i]) * (v[i + 1] - v[i]);
  }
  return sum;
}

double sphere_measure(int n_dim) {
  const double h = 0.5 * n_dim;
  return 2.0 * std::pow(std::numbers::pi, h) / std::tgamma(h);
}

}  // namespace diffusim
