#include "diffusim/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace diffusim {

namespace {

constexpr double kUnderflowMass = 1e-300;

std::int64_t step_index(double t, double dt) { return std::llround(t / dt); }

// -x without producing a negative zero in the report
double negated(double x) { return x == 0.0 ? 0.0 : -x; }

// schedule snapped to whole wave steps, duplicates removed
std::vector<double> snapped_times(const std::vector<double>& times, double dt) {
  std::vector<double> out;
  for (double t : times) {
    const double snapped = static_cast<double>(step_index(t, dt)) * dt;
    if (out.empty() || snapped > out.back()) {
      out.push_back(snapped);
    }
  }
  return out;
}

void log_line(const RunOptions& o, const std::string& text) {
  if (o.log) {
    *o.log << text << '\n';
  }
}

VerificationRecord make_record(const std::string& experiment, const std::string& id,
                               const std::string& claim, double predicted, double tolerance,
                               Comparison comparison) {
  VerificationRecord r;
  r.experiment = experiment;
  r.claim_id = id;
  r.claim = claim;
  r.predicted = predicted;
  r.tolerance = tolerance;
  r.comparison = comparison;
  return r;
}

// fits series over [lo, hi] into the record's measured slope
void fit_into(VerificationRecord& r, const DecaySeries& series, double lo, double hi) {
  try {
    const FitResult fit = fit_decay_rate(series, lo, hi);
    r.measured = fit.slope;
    r.fit = fit;
    r.evaluate();
  } catch (const std::exception& e) {
    r.fail_with(e.what());
  }
}

void put(SeriesSink* sink, const std::string& name, const DecaySeries& series) {
  if (sink) {
    sink->put(name, series);
  }
}

std::string missing(const char* what, const std::string& failure) {
  return std::string(what) + " failed: " + failure;
}

DuhamelHistory collect_duhamel(const Scenario& s, const RadialGrid& grid, double dt, int nodes,
                               const Field& u0, const Field& u1) {
  const double dtau = s.duhamel_t / static_cast<double>(nodes - 1);
  std::vector<double> times(static_cast<std::size_t>(nodes));
  for (int j = 0; j < nodes; ++j) {
    times[static_cast<std::size_t>(j)] = static_cast<double>(j) * dtau;
  }
  DuhamelHistory h;
  h.u0 = u0;
  const auto a = damping_profile(grid, s.problem.alpha);
  stream_wave({grid, s.problem, u0, u1, dt, s.boundary}, times, [&](WaveSnapshot&& snap) {
    Field src = std::move(snap.u_tt);
    for (std::size_t i = 0; i < src.size(); ++i) {
      src[i] /= a[i];
    }
    h.times.push_back(snap.t);
    h.sources.push_back(std::move(src));
    h.u_final = std::move(snap.u);
  });
  return h;
}

}  // namespace

std::vector<double> sample_schedule(const Scenario& s) {
  std::vector<double> out(static_cast<std::size_t>(s.samples));
  const double ratio = std::log(s.t_max / s.t_first);
  const double last = static_cast<double>(s.samples - 1);
  for (int k = 0; k < s.samples; ++k) {
    out[static_cast<std::size_t>(k)] = s.t_first * std::exp(ratio * static_cast<double>(k) / last);
  }
  out.front() = s.t_first;
  out.back() = s.t_max;
  return out;
}

double aligned_wave_dt(const RadialGrid& grid, const Scenario& s, double t_end, int nodes) {
  const double dtau = t_end / static_cast<double>(nodes - 1);
  const double base = default_wave_dt(grid, s.cfl_factor);
  const double per_interval = std::ceil(dtau / base - 1e-12);
  return dtau / per_interval;
}

Field scenario_u0(const Scenario& s, const RadialGrid& grid) {
  if (s.initial == InitialKind::Constant) {
    return Field(grid.n_points(), s.u0_amplitude);
  }
  return bump_initial_data(grid, s.problem.support_radius, s.u0_amplitude);
}

Field scenario_u1(const Scenario& s, const RadialGrid& grid) {
  if (s.initial == InitialKind::Constant) {
    return Field(grid.n_points(), s.u1_amplitude);
  }
  return bump_initial_data(grid, s.problem.support_radius, s.u1_amplitude);
}

RadialGrid scenario_grid(const Scenario& s) {
  return RadialGrid::covering(s.r_max(), s.dr, s.problem.n_dim);
}

WaveTrajectory run_wave_trajectory(const Scenario& s, const RadialGrid& grid,
                                   const std::vector<double>& times, bool keep_duhamel) {
  WaveTrajectory out{.grid = grid,
                     .dt = aligned_wave_dt(grid, s, s.duhamel_t, s.duhamel_nodes),
                     .samples = {},
                     .duhamel = {},
                     .max_energy_increase = 0.0,
                     .failure = {}};
  const double dt = out.dt;
  try {
    const Field u0 = scenario_u0(s, grid);
    const Field u1 = scenario_u1(s, grid);
    const WaveProblem problem{grid, s.problem, u0, u1, dt, s.boundary};

    std::set<std::int64_t> sample_steps;
    std::set<std::int64_t> quad_steps;
    for (double t : times) {
      sample_steps.insert(step_index(t, dt));
    }
    const double dtau = s.duhamel_t / static_cast<double>(s.duhamel_nodes - 1);
    if (keep_duhamel) {
      for (int j = 0; j < s.duhamel_nodes; ++j) {
        quad_steps.insert(step_index(static_cast<double>(j) * dtau, dt));
      }
    }
    std::set<std::int64_t> all = sample_steps;
    all.insert(quad_steps.begin(), quad_steps.end());
    std::vector<double> requested;
    requested.reserve(all.size());
    for (auto k : all) {
      requested.push_back(static_cast<double>(k) * dt);
    }

    const auto a = damping_profile(grid, s.problem.alpha);
    const WaveState start = init_wave(grid, s.problem, u0, u1, dt, s.boundary);
    double previous = discrete_energy(start);
    auto watch = [&](const WaveState& st) {
      const double e = discrete_energy(st);
      if (previous > 0.0) {
        out.max_energy_increase = std::max(out.max_energy_increase, (e - previous) / previous);
      }
      previous = e;
    };
    if (keep_duhamel) {
      out.duhamel.u0 = u0;
    }
    const std::int64_t last_quad = quad_steps.empty() ? -1 : *quad_steps.rbegin();
    stream_wave(
        problem, requested,
        [&](WaveSnapshot&& snap) {
          const std::int64_t k = step_index(snap.t, dt);
          if (quad_steps.count(k)) {
            Field src = snap.u_tt;
            for (std::size_t i = 0; i < src.size(); ++i) {
              src[i] /= a[i];
            }
            out.duhamel.times.push_back(snap.t);
            out.duhamel.sources.push_back(std::move(src));
            if (k == last_quad) {
              out.duhamel.u_final = snap.u;
            }
          }
          if (sample_steps.count(k)) {
            out.samples.push_back(std::move(snap));
          }
        },
        watch);
  } catch (const std::exception& e) {
    out.failure = e.what();
  }
  return out;
}

HeatTrajectory run_heat_trajectory(const Scenario& s, const RadialGrid& grid,
                                   const std::vector<double>& times) {
  HeatTrajectory out{.grid = grid,
                     .times = {},
                     .values = {},
                     .max_mass_increase = 0.0,
                     .steps = 0,
                     .failure = {}};
  try {
    const Field data =
        diffusion_profile_data(scenario_u0(s, grid), scenario_u1(s, grid), grid, s.problem);
    HeatState state = init_heat(grid, s.problem, data, 0.0, s.heat());
    double previous = damped_mass(state.v, state.laplacian, state.damping);
    auto watch = [&](const HeatState& st) {
      const double m = damped_mass(st.v, st.laplacian, st.damping);
      if (previous > 0.0) {
        out.max_mass_increase = std::max(out.max_mass_increase, (m - previous) / previous);
      }
      previous = m;
      ++out.steps;
    };
    for (double t : times) {
      advance_heat_to(state, t, watch);
      out.times.push_back(t);
      out.values.push_back(state.v);
    }
  } catch (const std::exception& e) {
    out.failure = e.what();
  }
  return out;
}

void MemorySink::put(const std::string& name, const DecaySeries& series) {
  series_.insert_or_assign(name, series);
}

void MemorySink::write_all(const std::string& dir) const {
  for (const auto& [name, series] : series_) {
    emit_series(series, (std::filesystem::path(dir) / (name + ".csv")).string());
  }
}

void experiment_profile_check(const Scenario& s, VerificationReport& report, SeriesSink* sink) {
  const ProblemParams& p = s.problem;
  const double predicted = negated(theoretical_rates(p).l2_rate);
  auto rec = make_record("profile-check", "profile-l2-slope",
                         "L2 norm of the self-similar profile G decays with the sharp exponent",
                         predicted, 1e-3, Comparison::AbsWithin);
  try {
    // G^2 falls below e^-100 at this radius for every t <= t_hi
    const double q = 2.0 - p.alpha;
    const double r_far = std::pow(q * q * s.profile_t_hi * 50.0, 1.0 / q);
    const RadialGrid grid = RadialGrid::covering(r_far, s.dr, p.n_dim);
    DecaySeries series("G_l2");
    for (double t : sample_schedule(s)) {
      if (t >= s.profile_t_lo && t <= s.profile_t_hi) {
        series.add(t, l2_norm(sample_profile(t, grid, p), grid));
      }
    }
    put(sink, "profile_l2", series);
    fit_into(rec, series, s.profile_t_lo, s.profile_t_hi);
  } catch (const std::exception& e) {
    rec.fail_with(e.what());
  }
  report.records.push_back(std::move(rec));
}

void experiment_verify_heat(const Scenario& s, const HeatTrajectory* heat,
                            VerificationReport& report, SeriesSink* sink) {
  if (!heat) {
    throw std::logic_error("verify-heat needs the heat trajectory");
  }
  auto slope = make_record("verify-heat", "heat-l2-slope",
                           "L2 norm of the heat flow decays with the sharp exponent",
                           negated(theoretical_rates(s.problem).l2_rate), 0.05, Comparison::AbsWithin);
  auto vt = make_record("verify-heat", "heat-vt-slope",
                        "int a |v_t|^2 decays two orders faster than the weighted mass",
                        negated(theoretical_rates(s.problem, 1).weighted_sq_rate), 0.15,
                        Comparison::AtMost);
  auto dissipation = make_record("verify-heat", "heat-dissipation",
                                 "weighted mass int a v^2 never increases over a time step", 0.0,
                                 1e-12, Comparison::AtMost);
  if (!heat->ok()) {
    for (auto* r : {&slope, &vt, &dissipation}) {
      r->fail_with(missing("heat run", heat->failure));
    }
  } else {
    DecaySeries series("heat_l2");
    DecaySeries rate("heat_vt");
    const RadialLaplacian lap(heat->grid, s.boundary);
    const auto a = damping_profile(heat->grid, s.problem.alpha);
    for (std::size_t k = 0; k < heat->times.size(); ++k) {
      series.add(heat->times[k], l2_norm(heat->values[k], heat->grid));
      // a |v_t|^2 = (L v)^2 / a
      Field lv = lap.apply(heat->values[k]);
      for (std::size_t i = 0; i < lv.size(); ++i) {
        lv[i] /= std::sqrt(a[i]);
      }
      rate.add(heat->times[k], l2_norm_squared(lv, heat->grid));
    }
    put(sink, "heat_l2", series);
    put(sink, "heat_vt", rate);
    fit_into(slope, series, s.heat_fit_t_lo, s.fit_hi());
    fit_into(vt, rate, s.fit_t_lo, s.fit_hi());
    dissipation.measured = heat->max_mass_increase;
    dissipation.note = std::to_string(heat->steps) + " steps";
    dissipation.evaluate();
  }
  report.records.push_back(std::move(slope));
  report.records.push_back(std::move(vt));
  report.records.push_back(std::move(dissipation));
}

void experiment_verify_wave(const Scenario& s, const WaveTrajectory* wave,
                            VerificationReport& report, SeriesSink* sink) {
  if (!wave) {
    throw std::logic_error("verify-wave needs the wave trajectory");
  }
  auto slope = make_record("verify-wave", "wave-l2-slope",
                           "L2 norm of the damped wave decays like the heat flow",
                           negated(theoretical_rates(s.problem).l2_rate), 0.1, Comparison::Band);
  slope.lower_slack = 0.15;
  auto energy = make_record("verify-wave", "wave-energy-monotone",
                            "discrete wave energy never increases over a time step", 0.0, 1e-10,
                            Comparison::AtMost);
  auto support = make_record("verify-wave", "finite-propagation",
                             "mass beyond t + L + 5 dr relative to ||u(t)|| at every sample", 0.0,
                             1e-8, Comparison::AtMost);
  if (!wave->ok()) {
    for (auto* r : {&slope, &energy, &support}) {
      r->fail_with(missing("wave run", wave->failure));
    }
  } else {
    DecaySeries series("wave_l2");
    double worst = 0.0;
    for (const auto& snap : wave->samples) {
      const double norm = l2_norm(snap.u, wave->grid);
      series.add(snap.t, norm);
      const double radius = snap.t + s.problem.support_radius + 5.0 * wave->grid.dr();
      const double outside = mass_outside(snap.u, wave->grid, radius);
      worst = std::max(worst, norm > 0.0 ? outside / norm : outside);
    }
    put(sink, "wave_l2", series);
    fit_into(slope, series, s.fit_t_lo, s.fit_hi());
    energy.measured = wave->max_energy_increase;
    energy.evaluate();
    support.measured = worst;
    support.note = std::to_string(wave->samples.size()) + " samples";
    support.evaluate();
  }
  report.records.push_back(std::move(slope));
  report.records.push_back(std::move(energy));
  report.records.push_back(std::move(support));
}

void experiment_verify_dp(const Scenario& s, const WaveTrajectory* wave,
                          const HeatTrajectory* heat, VerificationReport& report,
                          SeriesSink* sink) {
  if (!wave || !heat) {
    throw std::logic_error("verify-dp needs both the wave and the heat trajectory");
  }
  const double rate = theoretical_rates(s.problem).l2_rate;
  auto gap = make_record("verify-dp", "dp-slope-gap",
                         "||u - E(t)[u0 + u1/a]|| decays faster than the heat profile itself", 0.0,
                         0.2, Comparison::AtLeast);
  auto monotone =
      make_record("verify-dp", "dp-normalized-monotone",
                  "median-smoothed t^rate * ||u - E(t)[u0 + u1/a]|| is nonincreasing", 0.0, 0.0,
                  Comparison::AtMost);
  const std::string failure = !wave->ok()   ? missing("wave run", wave->failure)
                              : !heat->ok() ? missing("heat run", heat->failure)
                                            : std::string();
  if (!failure.empty()) {
    gap.fail_with(failure);
    monotone.fail_with(failure);
  } else if (wave->samples.size() != heat->times.size()) {
    gap.fail_with("wave and heat sample schedules differ");
    monotone.fail_with("wave and heat sample schedules differ");
  } else {
    DecaySeries diff("profile_difference");
    DecaySeries profile("heat_l2");
    std::vector<double> normalized;
    for (std::size_t k = 0; k < heat->times.size(); ++k) {
      const double t = wave->samples[k].t;
      if (t != heat->times[k]) {
        throw std::logic_error("wave and heat trajectories are sampled at different times");
      }
      const double d = profile_difference(wave->samples[k].u, heat->values[k], wave->grid);
      diff.add(t, d);
      profile.add(t, l2_norm(heat->values[k], heat->grid));
      if (t >= s.fit_t_lo && t <= s.fit_hi()) {
        normalized.push_back(d * std::pow(t, rate));
      }
    }
    put(sink, "profile_difference", diff);
    put(sink, "heat_l2", profile);
    try {
      const FitResult fd = fit_decay_rate(diff, s.fit_t_lo, s.fit_hi());
      const FitResult fh = fit_decay_rate(profile, s.fit_t_lo, s.fit_hi());
      gap.measured = fh.slope - fd.slope;
      gap.fit = fd;
      std::ostringstream note;
      note << std::setprecision(6) << "difference slope " << fd.slope << ", heat slope "
           << fh.slope;
      gap.note = note.str();
      gap.evaluate();
    } catch (const std::exception& e) {
      gap.fail_with(e.what());
    }
    const auto smooth = median3(normalized);
    DecaySeries smoothed("dp_normalized");
    double worst = -std::numeric_limits<double>::infinity();
    std::size_t j = 0;
    for (std::size_t k = 0; k < heat->times.size(); ++k) {
      const double t = heat->times[k];
      if (t >= s.fit_t_lo && t <= s.fit_hi()) {
        smoothed.add(t, smooth[j]);
        if (j > 0) {
          worst = std::max(worst, (smooth[j] - smooth[j - 1]) / smooth[j - 1]);
        }
        ++j;
      }
    }
    put(sink, "dp_normalized", smoothed);
    if (smooth.size() < 2) {
      monotone.fail_with("fewer than two samples in the fit window");
    } else {
      monotone.measured = worst;
      monotone.note = "largest relative step-to-step change";
      monotone.evaluate();
    }
  }
  report.records.push_back(std::move(gap));
  report.records.push_back(std::move(monotone));
}

void experiment_verify_th2(const Scenario& s, const WaveTrajectory* wave,
                           VerificationReport& report, SeriesSink* sink) {
  if (!wave) {
    throw std::logic_error("verify-th2 needs the wave trajectory");
  }
  const WeightParams w = s.weights();
  std::vector<VerificationRecord> records;
  for (int k = 0; k <= 1; ++k) {
    const RateTable rates = theoretical_rates(s.problem, k);
    const std::string ks = std::to_string(k);
    records.push_back(make_record("verify-th2", "th2-weighted-k" + ks,
                                  "int e^{2 psi} a |d_t^" + ks + " u|^2 decays at the weighted rate",
                                  negated(rates.weighted_sq_rate), 0.15, Comparison::AtMost));
    records.push_back(make_record("verify-th2", "th2-gradient-k" + ks,
                                  "int e^{2 psi} |grad d_t^" + ks + " u|^2 decays one order faster",
                                  negated(rates.weighted_grad_sq_rate), 0.15, Comparison::AtMost));
  }
  records.push_back(make_record(
      "verify-th2", "th2-energy-E1", "weighted energy E1 decays at the weighted rate less epsilon",
      negated(theoretical_rates(s.problem, 0).weighted_sq_rate - w.epsilon()), 0.15,
      Comparison::AtMost));
  if (!wave->ok()) {
    for (auto& r : records) {
      r.fail_with(missing("wave run", wave->failure));
    }
  } else {
    try {
      std::vector<DecaySeries> series = {DecaySeries("weighted_k0"), DecaySeries("gradient_k0"),
                                         DecaySeries("weighted_k1"), DecaySeries("gradient_k1")};
      DecaySeries e1("E1");
      DecaySeries e1_psi("E1_psi");
      DecaySeries h1("H1_tilde");
      for (const auto& snap : wave->samples) {
        series[0].add(snap.t, weighted_integral(snap.u, snap.t, w, true, wave->grid));
        series[1].add(snap.t, weighted_gradient_integral(snap.u, snap.t, w, wave->grid));
        series[2].add(snap.t, weighted_integral(snap.u_t, snap.t, w, true, wave->grid));
        series[3].add(snap.t, weighted_gradient_integral(snap.u_t, snap.t, w, wave->grid));
        const auto ef = energy_functionals(snap, w, s.energy_t0, s.energy_nu, wave->grid);
        e1.add(snap.t, ef.E1);
        e1_psi.add(snap.t, ef.E1_psi);
        if (ef.H1_tilde > 0.0) {
          h1.add(snap.t, ef.H1_tilde);
        }
      }
      for (std::size_t i = 0; i < series.size(); ++i) {
        put(sink, "th2_" + series[i].label(), series[i]);
        fit_into(records[i], series[i], s.fit_t_lo, s.fit_hi());
      }
      fit_into(records.back(), e1, s.fit_t_lo, s.fit_hi());
      put(sink, "energy_E1", e1);
      put(sink, "energy_E1_psi", e1_psi);
      put(sink, "energy_H1_tilde", h1);
    } catch (const std::exception& e) {
      for (auto& r : records) {
        r.fail_with(e.what());
      }
    }
  }
  for (auto& r : records) {
    report.records.push_back(std::move(r));
  }
}

void experiment_verify_lem3(const Scenario& s, const HeatTrajectory* heat,
                            VerificationReport& report, SeriesSink* sink) {
  if (!heat) {
    throw std::logic_error("verify-lem3 needs the heat trajectory");
  }
  const WeightParams w = s.weights();
  const double mu = s.mu();
  auto rec = make_record("verify-lem3", "lem3-envelope",
                         "log of the heat mass outside the parabolic region falls linearly in "
                         "(1+t)^rho",
                         -(2.0 * w.A() - mu), 0.1 * w.A(), Comparison::AtMost);
  if (!heat->ok()) {
    rec.fail_with(missing("heat run", heat->failure));
    report.records.push_back(std::move(rec));
    return;
  }
  try {
    const ParabolicRegionSpec spec(s.lem3_rho, mu, w);
    DecaySeries mass("region_mass");
    std::vector<double> x;
    std::vector<double> y;
    std::size_t underflows = 0;
    for (std::size_t k = 0; k < heat->times.size(); ++k) {
      const double t = heat->times[k];
      if (t < s.lem3_t_lo || t > s.fit_hi()) {
        continue;
      }
      const double m = region_mass(heat->values[k], t, spec, heat->grid, s.problem);
      mass.add(t, m);
      if (m < kUnderflowMass) {
        ++underflows;
        continue;
      }
      x.push_back(std::pow(1.0 + t, s.lem3_rho));
      y.push_back(std::log(m));
    }
    put(sink, "lem3_region_mass", mass);
    if (x.size() >= kMinFitSamples) {
      FitResult fit = fit_line(x, y);
      fit.t_lo = s.lem3_t_lo;
      fit.t_hi = s.fit_hi();
      rec.measured = fit.slope;
      rec.fit = fit;
      if (underflows > 0) {
        rec.note = std::to_string(underflows) + " samples below 1e-300 left out";
      }
      rec.evaluate();
    } else if (underflows > 0) {
      rec.measured = -std::numeric_limits<double>::infinity();
      rec.pass = true;
      rec.note = "pass by underflow: region mass below 1e-300 at " + std::to_string(underflows) +
                 " samples";
    } else {
      rec.fail_with("fewer than " + std::to_string(kMinFitSamples) + " samples in the window");
    }
  } catch (const std::exception& e) {
    rec.fail_with(e.what());
  }
  report.records.push_back(std::move(rec));
}

void experiment_duhamel(const Scenario& s, const WaveTrajectory* wave, VerificationReport& report,
                        int jobs) {
  if (!wave) {
    throw std::logic_error("duhamel needs the wave trajectory");
  }
  auto coarse = make_record("duhamel", "duhamel-residual",
                            "wave solution matches E(t)u0 minus the propagated a^{-1} u_tt source",
                            0.0, 0.02, Comparison::AtMost);
  auto ratio = make_record("duhamel", "duhamel-refinement",
                           "residual ratio after halving dr, dt and the quadrature step", 0.0, 0.5,
                           Comparison::AtMost);
  if (!wave->ok()) {
    coarse.fail_with(missing("wave run", wave->failure));
    ratio.fail_with(missing("wave run", wave->failure));
  } else if (wave->duhamel.times.size() != static_cast<std::size_t>(s.duhamel_nodes)) {
    throw std::logic_error("duhamel needs the wave trajectory with quadrature snapshots");
  } else {
    try {
      const double r0 = duhamel_residual(wave->duhamel, wave->grid, s.problem, s.duhamel_heat(),
                                         jobs);
      coarse.measured = r0;
      std::ostringstream note;
      note << "t = " << s.duhamel_t << ", " << s.duhamel_nodes << " nodes, dr " << wave->grid.dr();
      coarse.note = note.str();
      coarse.evaluate();

      const RadialGrid fine =
          RadialGrid::covering(wave->grid.r_max(), 0.5 * wave->grid.dr(), s.problem.n_dim);
      const int nodes = 2 * (s.duhamel_nodes - 1) + 1;
      const double dt = aligned_wave_dt(fine, s, s.duhamel_t, nodes);
      const DuhamelHistory h =
          collect_duhamel(s, fine, dt, nodes, scenario_u0(s, fine), scenario_u1(s, fine));
      HeatConfig heat = s.duhamel_heat();
      heat.dt *= 0.5;
      const double r1 = duhamel_residual(h, fine, s.problem, heat, jobs);
      ratio.measured = r1 / r0;
      std::ostringstream n2;
      n2 << std::setprecision(6) << "refined residual " << r1;
      ratio.note = n2.str();
      ratio.evaluate();
    } catch (const std::exception& e) {
      if (coarse.note.empty()) {
        coarse.fail_with(e.what());
      }
      ratio.fail_with(e.what());
    }
  }
  report.records.push_back(std::move(coarse));
  report.records.push_back(std::move(ratio));
}

VerificationReport run_scenario(const Scenario& s, SeriesSink* sink, const RunOptions& options) {
  s.validate();
  VerificationReport report;
  report.scenario = s.name;
  if (s.experiments.empty()) {
    return report;
  }
  const bool need_wave = s.wants("verify-wave") || s.wants("verify-dp") ||
                         s.wants("verify-th2") || s.wants("duhamel");
  const bool need_heat = s.wants("verify-heat") || s.wants("verify-dp") || s.wants("verify-lem3");

  std::optional<WaveTrajectory> wave;
  std::optional<HeatTrajectory> heat;
  if (need_wave || need_heat) {
    const RadialGrid grid = scenario_grid(s);
    const double dt = aligned_wave_dt(grid, s, s.duhamel_t, s.duhamel_nodes);
    const auto times = snapped_times(sample_schedule(s), dt);
    std::ostringstream os;
    os << "grid: " << grid.n_points() << " nodes, dr " << grid.dr() << ", r_max "
       << grid.r_max() << " (wave needs " << s.t_max + s.problem.support_radius + s.wave_margin
       << ", heat needs " << heat_outer_radius(s.problem, s.t_max, s.heat_margin)
       << "); wave dt " << dt << ", heat dt " << s.heat_dt << ", " << times.size() << " samples";
    log_line(options, os.str());
    auto run_w = [&] { return run_wave_trajectory(s, grid, times, s.wants("duhamel")); };
    auto run_h = [&] { return run_heat_trajectory(s, grid, times); };
    if (options.jobs > 1 && need_wave && need_heat) {
      auto fw = std::async(std::launch::async, run_w);
      heat = run_h();
      wave = fw.get();
    } else {
      if (need_wave) {
        wave = run_w();
      }
      if (need_heat) {
        heat = run_h();
      }
    }
    if (wave && !wave->ok()) {
      log_line(options, "wave run failed: " + wave->failure);
    }
    if (heat && !heat->ok()) {
      log_line(options, "heat run failed: " + heat->failure);
    }
  }
  const WaveTrajectory* w = wave ? &*wave : nullptr;
  const HeatTrajectory* h = heat ? &*heat : nullptr;

  // fixed order keeps the report independent of the listing order
  for (const auto& name : known_experiments()) {
    if (!s.wants(name)) {
      continue;
    }
    log_line(options, "experiment " + name);
    if (name == "profile-check") {
      experiment_profile_check(s, report, sink);
    } else if (name == "verify-heat") {
      experiment_verify_heat(s, h, report, sink);
    } else if (name == "verify-wave") {
      experiment_verify_wave(s, w, report, sink);
    } else if (name == "verify-dp") {
      experiment_verify_dp(s, w, h, report, sink);
    } else if (name == "verify-th2") {
      experiment_verify_th2(s, w, report, sink);
    } else if (name == "verify-lem3") {
      experiment_verify_lem3(s, h, report, sink);
    } else if (name == "duhamel") {
      experiment_duhamel(s, w, report, options.jobs);
    }
  }
  return report;
}

VerificationReport run_scenario_file(const std::string& path, const std::string& out_dir,
                                     const RunOptions& options) {
  const Scenario s = load_scenario(path);
  const std::string dir = out_dir.empty() ? s.output_dir : out_dir;
  std::filesystem::create_directories(dir);
  MemorySink sink;
  VerificationReport report = run_scenario(s, &sink, options);
  sink.write_all(dir);
  const auto base = std::filesystem::path(dir);
  std::ofstream table(base / "report.txt", std::ios::binary);
  report.write_table(table);
  std::ofstream csv(base / "report.csv", std::ios::binary);
  report.write_csv(csv);
  if (!table || !csv) {
    throw std::runtime_error("failed writing the report under " + dir);
  }
  return report;
}

// ---------------------------------------------------------------------------
// Convergence study

const ConvergenceQuantity& ConvergenceTable::quantity(const std::string& name) const {
  for (const auto& q : quantities) {
    if (q.name == name) {
      return q;
    }
  }
  throw std::out_of_range("no convergence quantity '" + name + "'");
}

void ConvergenceTable::write(std::ostream& out) const {
  auto num = [](double v) {
    std::ostringstream os;
    os << std::setprecision(6) << v;
    return os.str();
  };
  out << std::left << std::setw(7) << "level" << std::setw(12) << "dr" << std::setw(14)
      << "wave dt" << std::setw(12) << "heat dt" << "nodes\n";
  for (std::size_t k = 0; k < levels.size(); ++k) {
    out << std::left << std::setw(7) << k << std::setw(12) << num(levels[k].dr) << std::setw(14)
        << num(levels[k].wave_dt) << std::setw(12) << num(levels[k].heat_dt)
        << levels[k].n_points << '\n';
  }
  for (const auto& q : quantities) {
    out << '\n' << q.name << (q.against_exact ? " (error against the exact solution)" : "")
        << '\n';
    out << std::left << std::setw(7) << "level" << std::setw(26) << "value" << std::setw(14)
        << "error" << "order\n";
    for (std::size_t k = 0; k < q.values.size(); ++k) {
      out << std::left << std::setw(7) << k << std::setw(26) << format_double(q.values[k])
          << std::setw(14) << (k < q.errors.size() ? num(q.errors[k]) : "-")
          << (k < q.orders.size() && std::isfinite(q.orders[k]) ? num(q.orders[k]) : "-")
          << '\n';
    }
  }
}

ConvergenceTable convergence_study(const Scenario& s, int levels) {
  s.validate();
  if (levels < 3) {
    throw std::invalid_argument("a convergence study needs at least 3 levels");
  }
  const double T = s.conv_t_final;
  const double r_max = s.r_max_for(T);
  ConvergenceTable table;
  for (int k = 0; k < levels; ++k) {
    const double scale = std::ldexp(1.0, -k);
    ConvergenceLevel lv;
    lv.dr = s.conv_refine == RefineMode::Space ? s.dr * scale : s.dr;
    lv.heat_dt = s.conv_refine == RefineMode::Time ? s.heat_dt * scale : s.heat_dt;
    const double nodes = std::ceil(r_max / lv.dr) + 1.0;
    if (nodes > static_cast<double>(s.conv_max_nodes)) {
      std::ostringstream os;
      os << "convergence level " << k << " needs about " << nodes << " nodes, cap is "
         << s.conv_max_nodes;
      throw std::length_error(os.str());
    }
    lv.n_points = RadialGrid::covering(r_max, lv.dr, s.problem.n_dim).n_points();
    table.levels.push_back(lv);
  }
  // the wave step of every time level halves the coarsest one exactly
  const RadialGrid coarse = RadialGrid::covering(r_max, s.dr, s.problem.n_dim);
  const double base_steps = std::ceil(T / default_wave_dt(coarse, s.cfl_factor) - 1e-12);
  for (int k = 0; k < levels; ++k) {
    const double factor = std::ldexp(1.0, k);
    table.levels[static_cast<std::size_t>(k)].wave_dt = T / (base_steps * factor);
  }

  const bool exact = s.initial == InitialKind::Constant && s.u1_amplitude == 0.0;
  ConvergenceQuantity wave_q{exact ? "wave_stationary_error" : "wave_l2", exact, {}, {}, {}};
  ConvergenceQuantity heat_q{exact ? "heat_stationary_error" : "heat_l2", exact, {}, {}, {}};
  ConvergenceQuantity dp_q{"profile_difference", exact, {}, {}, {}};
  for (const auto& lv : table.levels) {
    const RadialGrid grid(lv.n_points, lv.dr, s.problem.n_dim);
    const Field u0 = scenario_u0(s, grid);
    const Field u1 = scenario_u1(s, grid);
    const std::vector<double> at = {T};
    const auto snaps = run_wave({grid, s.problem, u0, u1, lv.wave_dt, s.boundary}, at);
    HeatConfig hc = s.heat();
    hc.dt = lv.heat_dt;
    const Field v = apply_E(diffusion_profile_data(u0, u1, grid, s.problem), 0.0, T, grid,
                            s.problem, hc);
    const Field& u = snaps.back().u;
    if (exact) {
      const double scale = l2_norm(u0, grid);
      wave_q.values.push_back(profile_difference(u, u0, grid) / scale);
      heat_q.values.push_back(profile_difference(v, u0, grid) / scale);
      dp_q.values.push_back(profile_difference(u, v, grid) / scale);
    } else {
      wave_q.values.push_back(l2_norm(u, grid));
      heat_q.values.push_back(l2_norm(v, grid));
      dp_q.values.push_back(profile_difference(u, v, grid));
    }
  }
  for (auto* q : {&wave_q, &heat_q, &dp_q}) {
    if (q->against_exact) {
      q->errors = q->values;
    } else {
      for (std::size_t k = 0; k + 1 < q->values.size(); ++k) {
        q->errors.push_back(std::abs(q->values[k] - q->values[k + 1]));
      }
    }
    // errors at rounding level carry no order information
    const double floor = q->against_exact ? 1e-12 : 0.0;
    for (std::size_t k = 0; k + 1 < q->errors.size(); ++k) {
      const double a = q->errors[k];
      const double b = q->errors[k + 1];
      q->orders.push_back(a > floor && b > floor ? std::log2(a / b)
                                                 : std::numeric_limits<double>::quiet_NaN());
    }
    table.quantities.push_back(std::move(*q));
  }
  return table;
}

bool convergence_check_passes(const Scenario& s, const ConvergenceTable& table) {
  if (s.conv_check.empty()) {
    return true;
  }
  const auto& q = table.quantity(s.conv_check);
  if (q.orders.empty()) {
    return false;
  }
  return std::all_of(q.orders.begin(), q.orders.end(), [&](double p) {
    return std::isfinite(p) && p >= s.conv_order_min && p <= s.conv_order_max;
  });
}

}  // namespace diffusim
