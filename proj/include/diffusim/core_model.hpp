#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace diffusim {

/// Physical problem: dimension, damping exponent and radius of the initial support.
struct ProblemParams {
  int n_dim = 1;
  double alpha = 0.0;
  double support_radius = 1.0;

  ProblemParams() = default;
  ProblemParams(int n, double a, double L);

  void validate() const;
};

/// Parameters of the parabolic exponential weight psi(t, r) = A <r>^{2-alpha} / (1 + t).
class WeightParams {
 public:
  WeightParams(double alpha, double delta, double epsilon);

  double alpha() const { return alpha_; }
  double delta() const { return delta_; }
  double epsilon() const { return epsilon_; }
  /// A = 1 / ((2 - alpha)^2 (2 + delta)).
  double A() const { return A_; }

 private:
  double alpha_;
  double delta_;
  double epsilon_;
  double A_;
};

/// Uniform mesh of the radius axis, r_i = i * dr.
class RadialGrid {
 public:
  static constexpr std::size_t kMinPoints = 16;

  RadialGrid(std::size_t n_points, double dr, int n_dim);

  /// Smallest grid with spacing dr whose outer radius is at least r_max.
  static RadialGrid covering(double r_max, double dr, int n_dim);

  std::size_t n_points() const { return n_points_; }
  double dr() const { return dr_; }
  int n_dim() const { return n_dim_; }
  double r_max() const { return static_cast<double>(n_points_ - 1) * dr_; }
  double r(std::size_t i) const { return static_cast<double>(i) * dr_; }

  bool operator==(const RadialGrid&) const = default;

 private:
  std::size_t n_points_;
  double dr_;
  int n_dim_;
};

/// Radial function sampled at the grid nodes.
class Field {
 public:
  Field() = default;
  explicit Field(std::size_t n, double value = 0.0) : values_(n, value) {}
  explicit Field(std::vector<double> values) : values_(std::move(values)) {}

  std::size_t size() const { return values_.size(); }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  std::span<double> span() { return values_; }
  std::span<const double> span() const { return values_; }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  bool all_finite() const;

  bool operator==(const Field&) const = default;

 private:
  std::vector<double> values_;
};

/// Decay exponents predicted for the wave and heat flows.
struct RateTable {
  /// ||u(t)||_{L2} ~ (1+t)^{-l2_rate}
  double l2_rate;
  /// exponent multiplying the weighted a|d_t^k u|^2 integral
  double weighted_sq_rate;
  /// exponent multiplying the weighted |grad d_t^k u|^2 integral
  double weighted_grad_sq_rate;
};

/// a(r) = (1 + r^2)^{-alpha/2}.
double damping_coefficient(double r, double alpha);

/// Damping sampled at every node of the grid.
std::vector<double> damping_profile(const RadialGrid& grid, double alpha);

double weight_psi(double t, double r, const WeightParams& w);

RateTable theoretical_rates(const ProblemParams& p, int k = 0);

/// G(t, r) = t^{-(n-alpha)/(2-alpha)} exp(-r^{2-alpha} / ((2-alpha)^2 t)).
double self_similar_profile(double t, double r, const ProblemParams& p);

Field sample_profile(double t, const RadialGrid& grid, const ProblemParams& p);

/// Smooth bump amplitude * exp(1 - 1/(1 - (r/L)^2)), zero for r >= L.
Field bump_initial_data(const RadialGrid& grid, double L, double amplitude);

}  // namespace diffusim
