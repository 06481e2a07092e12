#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "diffusim/core_model.hpp"
#include "diffusim/heat_solver.hpp"
#include "diffusim/wave_solver.hpp"

namespace diffusim {

// ---------------------------------------------------------------------------
// Radial quadrature

/// (omega_n int_0^{r_max} f^2 r^{n-1} dr)^{1/2}, composite trapezoid.
double l2_norm(const Field& f, const RadialGrid& grid);
double l2_norm_squared(const Field& f, const RadialGrid& grid);

/// L2 norm restricted to the cells lying at radius >= radius.
double mass_outside(const Field& f, const RadialGrid& grid, double radius);

/// sum_i W_i a_i v_i^2 in the inner product that makes the discrete
/// Laplacian self-adjoint.
double damped_mass(const Field& v, const RadialLaplacian& laplacian,
                   std::span<const double> damping);

/// omega_n int e^{2 psi(t,r)} [a(r)] f^2 r^{n-1} dr.
///
/// Switches to log-domain accumulation when 2 psi exceeds 500 on the support
/// of f. Throws std::overflow_error when the result itself is not
/// representable.
double weighted_integral(const Field& f, double t, const WeightParams& w, bool include_a,
                         const RadialGrid& grid);

/// omega_n int e^{2 psi(t,r)} |f_r|^2 r^{n-1} dr with f_r at cell midpoints.
double weighted_gradient_integral(const Field& f, double t, const WeightParams& w,
                                  const RadialGrid& grid);

/// Cumulative initial-data norms I_0..I_{k_max}. derivatives[j] holds
/// d_t^j u(0) and must cover j = 0..k_max+1.
std::vector<double> initial_norms(std::span<const Field> derivatives, const WeightParams& w,
                                  const RadialGrid& grid, int k_max);

/// d_t^j u(0) for j = 0..3 computed from (u0, u1) through the equation.
std::vector<Field> initial_derivatives(const Field& u0, const Field& u1, const RadialGrid& grid,
                                       const ProblemParams& params,
                                       Boundary boundary = Boundary::Dirichlet);

struct EnergyFunctionals {
  double E1;
  double E1_psi;
  double H1_tilde;
};

/// Weighted energies of a wave snapshot; t0 is the time shift and nu the
/// coupling of the u u_t correction. Needs 0 < delta < 1.
EnergyFunctionals energy_functionals(const WaveSnapshot& snap, const WeightParams& w, double t0,
                                     double nu, const RadialGrid& grid);

// ---------------------------------------------------------------------------
// Decay-rate fitting

struct DecaySample {
  double t;
  double value;
};

/// Increasing-time series of positive values. Zero values are dropped and
/// counted; negative or non-finite values are rejected.
class DecaySeries {
 public:
  explicit DecaySeries(std::string label = {}) : label_(std::move(label)) {}

  void add(double t, double value);

  const std::string& label() const { return label_; }
  const std::vector<DecaySample>& samples() const { return samples_; }
  std::size_t dropped() const { return dropped_; }
  bool empty() const { return samples_.empty(); }

 private:
  std::string label_;
  std::vector<DecaySample> samples_;
  std::size_t dropped_ = 0;
  double last_t_ = 0.0;
  bool any_ = false;
};

struct FitResult {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double t_lo = 0.0;
  double t_hi = 0.0;
  std::size_t n_samples = 0;
};

inline constexpr std::size_t kMinFitSamples = 8;

/// Least-squares line through (log t, log value) for samples in [t_lo, t_hi].
FitResult fit_decay_rate(const DecaySeries& series, double t_lo, double t_hi);

/// Ordinary least squares y = intercept + slope x; t_lo and t_hi stay 0.
FitResult fit_line(std::span<const double> x, std::span<const double> y);

/// Three-point running median; the end points are kept.
std::vector<double> median3(std::span<const double> values);

// ---------------------------------------------------------------------------
// Localization outside the parabolic region

class ParabolicRegionSpec {
 public:
  /// Requires 0 < rho < 1 - alpha and 0 < mu < 2A.
  ParabolicRegionSpec(double rho, double mu, const WeightParams& w);

  double rho() const { return rho_; }
  double mu() const { return mu_; }

  /// Radius where <r>^{2-alpha} = (1+t)^{1+rho}.
  double threshold_radius(double t, double alpha) const;

 private:
  double rho_;
  double mu_;
};

/// omega_n int_{<r>^{2-alpha} >= (1+t)^{1+rho}} f^2 r^{n-1} dr.
double region_mass(const Field& f, double t, const ParabolicRegionSpec& spec,
                   const RadialGrid& grid, const ProblemParams& params);

/// Quadrature over the remaining cells; region + complement = ||f||^2.
double region_complement_mass(const Field& f, double t, const ParabolicRegionSpec& spec,
                              const RadialGrid& grid, const ProblemParams& params);

// ---------------------------------------------------------------------------
// Wave versus heat comparisons

/// ||u - profile||_{L2} for two fields on the same grid.
double profile_difference(const Field& u, const Field& profile, const RadialGrid& grid);

/// ||u(t) - E(t)[u0 + u1/a]||_{L2}, evolving the heat profile internally.
double profile_difference(const WaveSnapshot& snap, const Field& u0, const Field& u1,
                          const RadialGrid& grid, const ProblemParams& params,
                          const HeatConfig& heat);

/// u0 + u1 / a.
Field diffusion_profile_data(const Field& u0, const Field& u1, const RadialGrid& grid,
                             const ProblemParams& params);

/// Stored wave history for the Duhamel check: sources[j] = a^{-1} u_tt(times[j]).
struct DuhamelHistory {
  std::vector<double> times;
  std::vector<Field> sources;
  Field u0;
  Field u_final;
};

inline constexpr std::size_t kMinDuhamelNodes = 16;

enum class DuhamelMethod {
  /// Source interpolated linearly between quadrature times and carried by the
  /// heat scheme as the forced problem a v_t = L v - a s. Resolves the fast
  /// variation of E(t - tau) near tau = t that the plain sum misses.
  ProductTrapezoid,
  /// Plain trapezoid sum of E(t - tau_j) s_j accumulated on one heat trajectory.
  TrapezoidSweep,
  /// The same sum with one apply_E call per node, spread over `jobs` threads.
  /// Agrees with TrapezoidSweep when the heat step divides every interval.
  TrapezoidParallel,
};

/// ||u(t) - E(t)u0 + int_0^t E(t - tau)[a^{-1} u_tt(tau)] dtau|| / ||u(t)||
/// with trapezoid quadrature over the stored times. Contributions are summed
/// in a fixed order, so the result does not depend on `jobs`.
double duhamel_residual(const DuhamelHistory& history, const RadialGrid& grid,
                        const ProblemParams& params, const HeatConfig& heat, int jobs = 1,
                        DuhamelMethod method = DuhamelMethod::ProductTrapezoid);

}  // namespace diffusim
