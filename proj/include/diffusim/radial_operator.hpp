#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "diffusim/core_model.hpp"

namespace diffusim {

enum class Boundary {
  Dirichlet,  ///< u(r_max) = 0
  Neumann,    ///< reflecting, ghost node u(r_max + dr) = u(r_max - dr)
};

/// Discrete radial Laplacian u_rr + (n-1)/r u_r on r_i = i dr.
///
/// Interior rows use centered differences. The origin row uses the symmetric
/// ghost u(-dr) = u(dr) together with Delta u(0) = n u_rr(0), which gives
/// 2n (u_1 - u_0) / dr^2. The operator is tridiagonal and, for n <= 3,
/// symmetric with respect to the positive diagonal inner product returned by
/// node_weights().
class RadialLaplacian {
 public:
  static constexpr int kMaxDim = 3;

  RadialLaplacian(std::size_t n_points, double dr, int n_dim, Boundary boundary);
  RadialLaplacian(const RadialGrid& grid, Boundary boundary);

  std::size_t size() const { return diag_.size(); }
  double dr() const { return dr_; }
  int n_dim() const { return n_dim_; }
  Boundary boundary() const { return boundary_; }

  /// Row coefficients, already divided by dr^2. lower(0) and upper(N-1) are 0.
  double lower(std::size_t i) const { return lower_[i]; }
  double diag(std::size_t i) const { return diag_[i]; }
  double upper(std::size_t i) const { return upper_[i]; }

  /// True when row i is a held Dirichlet value rather than an equation.
  bool is_fixed(std::size_t i) const {
    return boundary_ == Boundary::Dirichlet && i + 1 == size();
  }

  void apply(std::span<const double> u, std::span<double> out) const;
  Field apply(const Field& u) const;

  /// Diagonal weights making the operator self-adjoint; they reduce to
  /// omega_n r_i^{n-1} dr away from the origin.
  const std::vector<double>& node_weights() const { return node_weights_; }

  /// Coupling of nodes (i, i+1) in the form -<u, L v>_W = sum_e k_e du_e dv_e.
  const std::vector<double>& edge_weights() const { return edge_weights_; }

  /// -<u, L v>_W expressed through the edge differences.
  double stiffness_product(std::span<const double> u, std::span<const double> v) const;

 private:
  void build_weights();

  double dr_;
  int n_dim_;
  Boundary boundary_;
  std::vector<double> lower_;
  std::vector<double> diag_;
  std::vector<double> upper_;
  std::vector<double> node_weights_;
  std::vector<double> edge_weights_;
};

/// Surface measure of the unit sphere in R^n, 2 pi^{n/2} / Gamma(n/2).
double sphere_measure(int n_dim);

}  // namespace diffusim
