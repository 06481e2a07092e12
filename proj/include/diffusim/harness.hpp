#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "diffusim/diagnostics.hpp"
#include "diffusim/report.hpp"
#include "diffusim/scenario.hpp"

namespace diffusim {

/// Geometric sample times from t_first to t_max, both included.
std::vector<double> sample_schedule(const Scenario& s);

/// Wave step that lands on every Duhamel quadrature time of the scenario.
double aligned_wave_dt(const RadialGrid& grid, const Scenario& s, double t_end, int nodes);

/// Initial data of the scenario on a grid.
Field scenario_u0(const Scenario& s, const RadialGrid& grid);
Field scenario_u1(const Scenario& s, const RadialGrid& grid);

struct WaveTrajectory {
  RadialGrid grid;
  double dt = 0.0;
  std::vector<WaveSnapshot> samples;  ///< at the schedule times, snapped to steps
  DuhamelHistory duhamel;             ///< snapshots at the quadrature times
  double max_energy_increase = 0.0;   ///< worst relative step-to-step energy gain
  std::string failure;                ///< empty on success

  bool ok() const { return failure.empty(); }
};

struct HeatTrajectory {
  RadialGrid grid;
  std::vector<double> times;
  std::vector<Field> values;
  double max_mass_increase = 0.0;  ///< worst relative step-to-step gain of sum W a v^2
  std::size_t steps = 0;
  std::string failure;

  bool ok() const { return failure.empty(); }
};

/// Shared grid for the wave and heat runs of a scenario.
RadialGrid scenario_grid(const Scenario& s);

/// Wave run over the schedule; also stores the Duhamel quadrature snapshots
/// when keep_duhamel is set. Solver failures land in `failure`.
WaveTrajectory run_wave_trajectory(const Scenario& s, const RadialGrid& grid,
                                   const std::vector<double>& times, bool keep_duhamel);

/// Heat run of u0 + u1/a sampled at the given times.
HeatTrajectory run_heat_trajectory(const Scenario& s, const RadialGrid& grid,
                                   const std::vector<double>& times);

/// Per-scenario output sink: series files keyed by name, written on request.
class SeriesSink {
 public:
  virtual ~SeriesSink() = default;
  virtual void put(const std::string& name, const DecaySeries& series) = 0;
};

/// Collects series in memory; the CLI flushes them to `<dir>/<name>.csv`.
class MemorySink : public SeriesSink {
 public:
  void put(const std::string& name, const DecaySeries& series) override;
  const std::map<std::string, DecaySeries>& series() const { return series_; }
  void write_all(const std::string& dir) const;

 private:
  std::map<std::string, DecaySeries> series_;
};

// Individual experiments. Each appends its records to the report. The
// trajectory-based checks throw std::logic_error when a trajectory they
// depend on is absent.
void experiment_profile_check(const Scenario& s, VerificationReport& report, SeriesSink* sink);
void experiment_verify_heat(const Scenario& s, const HeatTrajectory* heat,
                            VerificationReport& report, SeriesSink* sink);
void experiment_verify_wave(const Scenario& s, const WaveTrajectory* wave,
                            VerificationReport& report, SeriesSink* sink);
void experiment_verify_dp(const Scenario& s, const WaveTrajectory* wave,
                          const HeatTrajectory* heat, VerificationReport& report,
                          SeriesSink* sink);
void experiment_verify_th2(const Scenario& s, const WaveTrajectory* wave,
                           VerificationReport& report, SeriesSink* sink);
void experiment_verify_lem3(const Scenario& s, const HeatTrajectory* heat,
                            VerificationReport& report, SeriesSink* sink);
void experiment_duhamel(const Scenario& s, const WaveTrajectory* wave, VerificationReport& report,
                        int jobs);

struct RunOptions {
  int jobs = 1;
  std::ostream* log = nullptr;
};

/// Runs the requested experiments in dependency order: solver trajectories
/// first, then the checks that read them.
VerificationReport run_scenario(const Scenario& s, SeriesSink* sink, const RunOptions& options = {});

/// Loads, runs and writes series plus report.txt / report.csv under `out_dir`
/// (scenario output.dir when empty).
VerificationReport run_scenario_file(const std::string& path, const std::string& out_dir,
                                     const RunOptions& options = {});

struct ConvergenceLevel {
  double dr = 0.0;
  double wave_dt = 0.0;
  double heat_dt = 0.0;
  std::size_t n_points = 0;
};

struct ConvergenceQuantity {
  std::string name;
  bool against_exact = false;   ///< values are errors against a known solution
  std::vector<double> values;   ///< one per level
  std::vector<double> errors;   ///< successive differences, or the values themselves
  std::vector<double> orders;   ///< log2 of consecutive error ratios
};

struct ConvergenceTable {
  std::vector<ConvergenceLevel> levels;
  std::vector<ConvergenceQuantity> quantities;

  const ConvergenceQuantity& quantity(const std::string& name) const;
  void write(std::ostream& out) const;
};

/// Reruns the scenario's wave and heat flows up to convergence.t_final on
/// `levels` refinements. Throws std::length_error when a level would exceed
/// the node cap; nothing is run in that case.
ConvergenceTable convergence_study(const Scenario& s, int levels);

/// Orders of convergence.check all inside [order_min, order_max]; true when
/// no check is configured.
bool convergence_check_passes(const Scenario& s, const ConvergenceTable& table);

}  // namespace diffusim
