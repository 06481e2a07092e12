#include "diffusim/heat_solver.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

namespace diffusim {

void HeatConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw std::invalid_argument("heat time step must be positive");
  }
  if (!(theta >= 0.5 && theta <= 1.0)) {
    throw std::invalid_argument("theta must lie in [0.5, 1]");
  }
}

HeatState init_heat(const RadialGrid& grid, const ProblemParams& params, const Field& v_tau,
                    double tau, const HeatConfig& config) {
  params.validate();
  config.validate();
  if (params.n_dim != grid.n_dim()) {
    throw std::invalid_argument("grid dimension differs from problem dimension");
  }
  if (v_tau.size() != grid.n_points()) {
    throw std::invalid_argument("heat data size does not match the grid");
  }
  if (!v_tau.all_finite()) {
    throw std::invalid_argument("heat data contains non-finite values");
  }
  return HeatState{
      .grid = grid,
      .params = params,
      .laplacian = RadialLaplacian(grid, config.boundary),
      .damping = damping_profile(grid, params.alpha),
      .v = v_tau,
      .t0 = tau,
      .steps = 0,
      .dt = config.dt,
      .theta = config.theta,
      .stepper = nullptr,
  };
}

ThetaStepper::ThetaStepper(const RadialLaplacian& lap, std::span<const double> damping,
                           double theta, double h)
    : theta_(theta), h_(h) {
  const std::size_t n = lap.size();
  lower_.resize(n);
  inv_piv_.resize(n);
  c_.assign(n, 0.0);
  rhs_.resize(n);
  std::vector<double> diag(n), upper(n);
  for (std::size_t i = 0; i < n; ++i) {
    lower_[i] = -theta * lap.lower(i);
    diag[i] = damping[i] / h - theta * lap.diag(i);
    upper[i] = -theta * lap.upper(i);
  }
  if (lap.is_fixed(n - 1)) {
    lower_[n - 1] = 0.0;
    diag[n - 1] = 1.0;
  }
  double pivot = diag[0];
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) {
      c_[i] = upper[i - 1] / pivot;
      pivot = diag[i] - lower_[i] * c_[i];
    }
    if (pivot == 0.0) {
      throw std::runtime_error("singular tridiagonal system in the heat step (row " +
                               std::to_string(i) + ")");
    }
    inv_piv_[i] = 1.0 / pivot;
  }
}

void ThetaStepper::apply(const RadialLaplacian& lap, std::span<const double> damping,
                         std::span<double> v, std::span<const double> forcing) const {
  const std::size_t n = lap.size();
  const double explicit_part = 1.0 - theta_;
  for (std::size_t i = 0; i < n; ++i) {
    double lv = lap.diag(i) * v[i];
    if (i > 0) {
      lv += lap.lower(i) * v[i - 1];
    }
    if (i + 1 < n) {
      lv += lap.upper(i) * v[i + 1];
    }
    rhs_[i] = damping[i] / h_ * v[i] + explicit_part * lv;
  }
  if (!forcing.empty()) {
    if (forcing.size() != n) {
      throw std::invalid_argument("heat forcing size does not match the grid");
    }
    for (std::size_t i = 0; i < n; ++i) {
      rhs_[i] += forcing[i];
    }
  }
  if (lap.is_fixed(n - 1)) {
    rhs_[n - 1] = 0.0;
  }
  // forward elimination then back substitution (Thomas)
  rhs_[0] *= inv_piv_[0];
  for (std::size_t i = 1; i < n; ++i) {
    rhs_[i] = (rhs_[i] - lower_[i] * rhs_[i - 1]) * inv_piv_[i];
  }
  v[n - 1] = rhs_[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) {
    v[i] = rhs_[i] - c_[i + 1] * v[i + 1];
  }
}

void theta_step(const RadialLaplacian& lap, std::span<const double> damping, double theta,
                double h, std::span<double> v) {
  ThetaStepper(lap, damping, theta, h).apply(lap, damping, v);
}

HeatState step_heat(HeatState state) {
  if (!state.stepper || state.stepper->h() != state.dt || state.stepper->theta() != state.theta) {
    state.stepper =
        std::make_shared<const ThetaStepper>(state.laplacian, state.damping, state.theta, state.dt);
  }
  state.stepper->apply(state.laplacian, state.damping, state.v.span());
  ++state.steps;
  if (!state.v.all_finite()) {
    std::ostringstream os;
    os << "heat solution became non-finite at t = " << state.t();
    throw std::runtime_error(os.str());
  }
  return state;
}

void advance_heat_to(HeatState& state, double t_target,
                     const std::function<void(const HeatState&)>& observer) {
  const double span = t_target - state.t();
  if (span < 0.0) {
    throw std::invalid_argument("cannot evolve the heat flow backwards in time");
  }
  if (span == 0.0) {
    return;
  }
  // whole steps when the target is step-aligned, uniform shorter steps otherwise
  const double ratio = span / state.dt;
  const double whole = std::round(ratio);
  if (whole >= 1.0 && std::abs(ratio - whole) <= 1e-9 * whole) {
    const auto count = static_cast<std::int64_t>(whole);
    for (std::int64_t k = 0; k < count; ++k) {
      state = step_heat(std::move(state));
      if (observer) {
        observer(state);
      }
    }
    return;
  }
  const auto count = static_cast<std::int64_t>(std::ceil(ratio));
  const double h = span / static_cast<double>(count);
  const double regular_dt = state.dt;
  const double start = state.t();
  state.t0 = start;
  state.steps = 0;
  state.dt = h;
  for (std::int64_t k = 0; k < count; ++k) {
    state = step_heat(std::move(state));
    if (observer) {
      observer(state);
    }
  }
  state.t0 = t_target;
  state.steps = 0;
  state.dt = regular_dt;
}

Field apply_E(const Field& data, double from_tau, double to_t, const RadialGrid& grid,
              const ProblemParams& params, const HeatConfig& config) {
  if (to_t < from_tau) {
    throw std::invalid_argument("apply_E needs to_t >= from_tau");
  }
  HeatState state = init_heat(grid, params, data, from_tau, config);
  if (to_t == from_tau) {
    return state.v;
  }
  advance_heat_to(state, to_t);
  return std::move(state.v);
}

Field heat_time_derivative(const HeatState& state) {
  Field out = state.laplacian.apply(state.v);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] /= state.damping[i];
  }
  return out;
}

double heat_outer_radius(const ProblemParams& p, double t_max, double margin) {
  return margin * std::pow(1.0 + t_max, 1.0 / (2.0 - p.alpha)) * p.support_radius;
}

}  // namespace diffusim
