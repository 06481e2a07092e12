#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "diffusim/core_model.hpp"
#include "diffusim/radial_operator.hpp"

namespace diffusim {

/// Raised when a time step produces a non-finite value.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double t) : std::runtime_error(what), time_(t) {}
  double time() const { return time_; }

 private:
  double time_;
};

/// Largest leapfrog step for the radial stencil: dr * sqrt(2 / (n + 1)).
///
/// The origin row carries the eigenvalue -2n/dr^2 and the spectral radius of
/// the full operator stays below (2n + 2)/dr^2 for n <= 3.
double max_stable_dt(const RadialGrid& grid);

/// cfl_factor * max_stable_dt(grid).
double default_wave_dt(const RadialGrid& grid, double cfl_factor = 0.9);

struct WaveState {
  RadialGrid grid;
  ProblemParams params;
  RadialLaplacian laplacian;
  std::vector<double> damping;
  Field u_prev;  ///< u at t - dt
  Field u_curr;  ///< u at t
  double dt = 0.0;
  std::int64_t steps = 0;  ///< t = steps * dt

  double t() const { return static_cast<double>(steps) * dt; }
};

WaveState init_wave(const RadialGrid& grid, const ProblemParams& params, const Field& u0,
                    const Field& u1, double dt, Boundary boundary = Boundary::Dirichlet);

/// One step of the damping-centered leapfrog scheme
/// (u+ - 2u + u-)/dt^2 = L u - a (u+ - u-)/(2 dt).
WaveState step_wave(WaveState state);

/// Pointwise leapfrog update. `u_next` may alias `u_prev`. Returns false on a
/// non-finite value.
bool leapfrog_update(const RadialLaplacian& laplacian, std::span<const double> damping,
                     double dt, std::span<const double> u_prev, std::span<const double> u_curr,
                     std::span<double> u_next);

/// Discrete energy at the half step between u_prev and u_curr:
/// 0.5 ||(u_curr - u_prev)/dt||_W^2 + 0.5 * stiffness(u_curr, u_prev).
/// Nonincreasing along the scheme.
double discrete_energy(const RadialLaplacian& laplacian, double dt,
                       std::span<const double> u_prev, std::span<const double> u_curr);

double discrete_energy(const WaveState& state);

struct WaveSnapshot {
  double t = 0.0;
  Field u;
  Field u_t;
  Field u_tt;
  Field u_ttt;
};

/// Time derivative of order k <= 3 from u and u_t through the equation and
/// its time derivative: u_tt = L u - a u_t, u_ttt = L u_t - a u_tt.
Field time_derivative(const RadialLaplacian& laplacian, std::span<const double> damping,
                      const Field& u, const Field& u_t, int k);

struct WaveProblem {
  RadialGrid grid;
  ProblemParams params;
  Field u0;
  Field u1;
  double dt;
  Boundary boundary = Boundary::Dirichlet;
};

/// Called after every completed step.
using WaveObserver = std::function<void(const WaveState&)>;

/// Receives each snapshot as soon as it is complete.
using SnapshotSink = std::function<void(WaveSnapshot&&)>;

/// Runs up to the last requested time and delivers one snapshot per entry,
/// each taken at the step nearest to the requested time.
void stream_wave(const WaveProblem& problem, std::span<const double> sample_times,
                 const SnapshotSink& sink, const WaveObserver& observer = {});

/// stream_wave collected into a vector.
std::vector<WaveSnapshot> run_wave(const WaveProblem& problem,
                                   std::span<const double> sample_times,
                                   const WaveObserver& observer = {});

}  // namespace diffusim
