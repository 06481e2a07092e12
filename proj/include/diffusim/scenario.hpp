#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "diffusim/core_model.hpp"
#include "diffusim/heat_solver.hpp"
#include "diffusim/radial_operator.hpp"

namespace diffusim {

/// Parse or validation failure; line is 0 when the problem is not tied to one line.
class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(const std::string& source, int line, const std::string& message);
  int line() const { return line_; }

 private:
  int line_;
};

enum class InitialKind {
  Bump,      ///< smooth compactly supported bump of radius L
  Constant,  ///< u0 = amplitude everywhere; needs a Neumann boundary
};

enum class RefineMode {
  Space,  ///< dr halves, wave dt follows the CFL bound, heat dt fixed
  Time,   ///< dr fixed, wave and heat steps halve
};

inline const std::vector<std::string>& known_experiments() {
  static const std::vector<std::string> names = {
      "profile-check", "verify-heat", "verify-wave", "verify-dp",
      "verify-th2",    "verify-lem3", "duhamel",
  };
  return names;
}

struct Scenario {
  std::string name = "scenario";

  // [problem]
  ProblemParams problem{1, 0.5, 1.0};
  InitialKind initial = InitialKind::Bump;
  double u0_amplitude = 1.0;
  double u1_amplitude = 0.0;

  // [weights]
  double delta = 0.1;
  double epsilon = 0.1;

  // [grid]
  double dr = 0.02;
  double wave_margin = 2.0;
  double heat_margin = 8.0;
  Boundary boundary = Boundary::Dirichlet;

  // [wave]
  double cfl_factor = 0.9;
  double energy_t0 = 1.0;
  double energy_nu = 0.1;

  // [heat]
  double heat_dt = 0.05;
  double heat_theta = 1.0;

  // [time]
  double t_max = 200.0;
  int samples = 100;
  double t_first = 1.0;

  // [fit]
  double fit_t_lo = 50.0;
  double fit_t_hi = 0.0;  ///< 0 means t_max
  double heat_fit_t_lo = 50.0;

  // [profile]
  double profile_t_lo = 10.0;
  double profile_t_hi = 100.0;

  // [lem3]
  double lem3_rho = 0.25;
  double lem3_mu = 0.0;  ///< 0 means A
  double lem3_t_lo = 5.0;

  // [duhamel]
  double duhamel_t = 5.0;
  int duhamel_nodes = 64;
  double duhamel_theta = 0.5;
  double duhamel_heat_dt = 0.02;

  // [convergence]
  double conv_t_final = 10.0;
  int conv_levels = 4;
  std::size_t conv_max_nodes = 2'000'000;
  RefineMode conv_refine = RefineMode::Space;
  std::string conv_check;  ///< quantity whose orders are checked, empty for none
  double conv_order_min = 0.0;
  double conv_order_max = 0.0;

  // [experiments] / [output]
  std::vector<std::string> experiments;
  std::string output_dir = "out";

  WeightParams weights() const;
  HeatConfig heat() const;
  HeatConfig duhamel_heat() const;
  double fit_hi() const { return fit_t_hi > 0.0 ? fit_t_hi : t_max; }
  double mu() const { return lem3_mu > 0.0 ? lem3_mu : weights().A(); }
  bool wants(const std::string& experiment) const;

  /// max(T + L + wave margin, heat margin * (1 + T)^{1/(2-alpha)} * L).
  double r_max_for(double t_end) const;
  double r_max() const { return r_max_for(t_max); }

  /// Throws ScenarioError naming the offending field.
  void validate() const;
};

Scenario parse_scenario(const std::string& text, const std::string& source = "<scenario>");
Scenario load_scenario(const std::string& path);

}  // namespace diffusim
