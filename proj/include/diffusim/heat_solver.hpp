#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "diffusim/core_model.hpp"
#include "diffusim/radial_operator.hpp"

namespace diffusim {

struct HeatConfig {
  double dt = 0.05;
  double theta = 1.0;  ///< 1 backward Euler, 0.5 Crank-Nicolson
  Boundary boundary = Boundary::Dirichlet;

  void validate() const;
};

/// Factorized theta-step matrix a/h - theta L for a fixed step h.
class ThetaStepper {
 public:
  ThetaStepper(const RadialLaplacian& laplacian, std::span<const double> damping, double theta,
               double h);

  double h() const { return h_; }
  double theta() const { return theta_; }

  /// v <- (a/h - theta L)^{-1} ((a/h + (1 - theta) L) v + forcing).
  /// An empty forcing means none; held Dirichlet rows ignore it.
  void apply(const RadialLaplacian& laplacian, std::span<const double> damping,
             std::span<double> v, std::span<const double> forcing = {}) const;

 private:
  double theta_;
  double h_;
  std::vector<double> lower_;    // matrix sub-diagonal
  std::vector<double> inv_piv_;  // 1 / Thomas pivots
  std::vector<double> c_;        // normalized super-diagonal
  mutable std::vector<double> rhs_;
};

/// Solution of a(r) v_t = L v at time t.
struct HeatState {
  RadialGrid grid;
  ProblemParams params;
  RadialLaplacian laplacian;
  std::vector<double> damping;
  Field v;
  double t0 = 0.0;          ///< start of the current run of uniform steps
  std::int64_t steps = 0;   ///< uniform steps taken since t0
  double dt = 0.0;
  double theta = 1.0;
  std::shared_ptr<const ThetaStepper> stepper;  ///< cached factorization for dt

  double t() const { return t0 + static_cast<double>(steps) * dt; }
};

HeatState init_heat(const RadialGrid& grid, const ProblemParams& params, const Field& v_tau,
                    double tau, const HeatConfig& config);

/// (a/dt)(v+ - v) = theta L v+ + (1 - theta) L v, one tridiagonal solve.
HeatState step_heat(HeatState state);

/// theta-step of size h on raw arrays; v is overwritten.
void theta_step(const RadialLaplacian& laplacian, std::span<const double> damping, double theta,
                double h, std::span<double> v);

/// Advances to exactly t_target with uniform sub-steps no longer than dt.
/// Regular stepping resumes from t_target afterwards.
void advance_heat_to(HeatState& state, double t_target,
                     const std::function<void(const HeatState&)>& observer = {});

/// Solution operator E(to_t - from_tau) applied to data.
Field apply_E(const Field& data, double from_tau, double to_t, const RadialGrid& grid,
              const ProblemParams& params, const HeatConfig& config);

/// v_t = a^{-1} L v.
Field heat_time_derivative(const HeatState& state);

/// Outer radius that keeps the heat flow away from the boundary up to t_max:
/// margin * (1 + t_max)^{1/(2-alpha)} * L.
double heat_outer_radius(const ProblemParams& p, double t_max, double margin = 8.0);

}  // namespace diffusim
