#include "diffusim/wave_solver.hpp"

#include <cmath>
#include <optional>
#include <sstream>

namespace diffusim {

namespace {

void check_size(const Field& f, const RadialGrid& grid, const char* name) {
  if (f.size() != grid.n_points()) {
    std::ostringstream os;
    os << name << " has " << f.size() << " samples, grid has " << grid.n_points();
    throw std::invalid_argument(os.str());
  }
  if (!f.all_finite()) {
    throw std::invalid_argument(std::string(name) + " contains non-finite values");
  }
}

}  // namespace

double max_stable_dt(const RadialGrid& grid) {
  return grid.dr() * std::sqrt(2.0 / (grid.n_dim() + 1.0));
}

double default_wave_dt(const RadialGrid& grid, double cfl_factor) {
  if (!(cfl_factor > 0.0 && cfl_factor <= 1.0)) {
    throw std::invalid_argument("cfl factor must lie in (0, 1]");
  }
  return cfl_factor * max_stable_dt(grid);
}

WaveState init_wave(const RadialGrid& grid, const ProblemParams& params, const Field& u0,
                    const Field& u1, double dt, Boundary boundary) {
  params.validate();
  if (params.n_dim != grid.n_dim()) {
    throw std::invalid_argument("grid dimension differs from problem dimension");
  }
  check_size(u0, grid, "u0");
  check_size(u1, grid, "u1");
  if (!(dt > 0.0) || dt > max_stable_dt(grid) * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "time step " << dt << " violates the CFL bound " << max_stable_dt(grid);
    throw std::invalid_argument(os.str());
  }
  const std::size_t n = grid.n_points();
  if (boundary == Boundary::Dirichlet) {
    for (std::size_t i = n - 2; i < n; ++i) {
      if (u0[i] != 0.0 || u1[i] != 0.0) {
        throw std::invalid_argument("initial data support extends past r_max - 2 dr");
      }
    }
  }

  WaveState s{
      .grid = grid,
      .params = params,
      .laplacian = RadialLaplacian(grid, boundary),
      .damping = damping_profile(grid, params.alpha),
      .u_prev = u0,
      .u_curr = Field(n),
      .dt = dt,
      .steps = 1,
  };
  const Field lap = s.laplacian.apply(u0);
  for (std::size_t i = 0; i < n; ++i) {
    s.u_curr[i] = u0[i] + dt * u1[i] + 0.5 * dt * dt * (lap[i] - s.damping[i] * u1[i]);
  }
  if (s.laplacian.is_fixed(n - 1)) {
    s.u_curr[n - 1] = 0.0;
  }
  return s;
}

bool leapfrog_update(const RadialLaplacian& lap, std::span<const double> damping, double dt,
                     std::span<const double> u_prev, std::span<const double> u_curr,
                     std::span<double> u_next) {
  const std::size_t n = lap.size();
  const double dt2 = dt * dt;
  bool finite = true;
  auto update = [&](std::size_t i, double lu) {
    const double c = 0.5 * dt * damping[i];
    const double v = (2.0 * u_curr[i] - (1.0 - c) * u_prev[i] + dt2 * lu) / (1.0 + c);
    finite = finite && std::isfinite(v);
    u_next[i] = v;
  };
  update(0, lap.diag(0) * u_curr[0] + lap.upper(0) * u_curr[1]);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    update(i, lap.lower(i) * u_curr[i - 1] + lap.diag(i) * u_curr[i] +
                  lap.upper(i) * u_curr[i + 1]);
  }
  if (lap.is_fixed(n - 1)) {
    u_next[n - 1] = 0.0;
  } else {
    update(n - 1, lap.lower(n - 1) * u_curr[n - 2] + lap.diag(n - 1) * u_curr[n - 1]);
  }
  return finite;
}

WaveState step_wave(WaveState state) {
  // u_next overwrites u_prev node by node, then the two levels swap roles
  const bool ok = leapfrog_update(state.laplacian, state.damping, state.dt, state.u_prev.span(),
                                  state.u_curr.span(), state.u_prev.span());
  if (!ok) {
    std::ostringstream os;
    os << "wave solution became non-finite at t = " << state.t() + state.dt
       << " (CFL violation or blow-up)";
    throw SolverError(os.str(), state.t() + state.dt);
  }
  std::swap(state.u_prev, state.u_curr);
  ++state.steps;
  return state;
}

double discrete_energy(const RadialLaplacian& lap, double dt, std::span<const double> u_prev,
                       std::span<const double> u_curr) {
  const auto& w = lap.node_weights();
  double kinetic = 0.0;
  for (std::size_t i = 0; i < lap.size(); ++i) {
    const double v = (u_curr[i] - u_prev[i]) / dt;
    kinetic += w[i] * v * v;
  }
  return 0.5 * kinetic + 0.5 * lap.stiffness_product(u_curr, u_prev);
}

double discrete_energy(const WaveState& state) {
  return discrete_energy(state.laplacian, state.dt, state.u_prev.span(), state.u_curr.span());
}

Field time_derivative(const RadialLaplacian& lap, std::span<const double> damping,
                      const Field& u, const Field& u_t, int k) {
  if (k < 0 || k > 3) {
    throw std::invalid_argument("time derivatives are available for orders 0..3");
  }
  if (k == 0) {
    return u;
  }
  if (k == 1) {
    return u_t;
  }
  auto next = [&](const Field& f, const Field& f_t) {
    Field out = lap.apply(f);
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] -= damping[i] * f_t[i];
    }
    return out;
  };
  Field u_tt = next(u, u_t);
  if (k == 2) {
    return u_tt;
  }
  return next(u_t, u_tt);
}

void stream_wave(const WaveProblem& problem, std::span<const double> sample_times,
                 const SnapshotSink& sink, const WaveObserver& observer) {
  if (sample_times.empty()) {
    return;
  }
  for (std::size_t k = 0; k < sample_times.size(); ++k) {
    if (sample_times[k] < 0.0 || (k > 0 && sample_times[k] < sample_times[k - 1])) {
      throw std::invalid_argument("sample times must be nonnegative and ascending");
    }
  }
  WaveState state = init_wave(problem.grid, problem.params, problem.u0, problem.u1, problem.dt,
                              problem.boundary);
  const double dt = state.dt;

  std::optional<WaveSnapshot> last;
  auto finish = [&](WaveSnapshot snap) {
    snap.u_tt = time_derivative(state.laplacian, state.damping, snap.u, snap.u_t, 2);
    snap.u_ttt = time_derivative(state.laplacian, state.damping, snap.u, snap.u_t, 3);
    last = snap;
    sink(std::move(snap));
  };
  auto advance = [&] {
    state = step_wave(std::move(state));
    if (observer) {
      observer(state);
    }
  };

  Field u_before;  // u at the level preceding the sample
  for (double requested : sample_times) {
    const auto target = static_cast<std::int64_t>(std::llround(requested / dt));
    if (last && last->t == static_cast<double>(target) * dt) {
      sink(WaveSnapshot(*last));
      continue;
    }
    if (target == 0) {
      finish(WaveSnapshot{.t = 0.0, .u = problem.u0, .u_t = problem.u1, .u_tt = {}, .u_ttt = {}});
      continue;
    }
    while (state.steps < target) {
      advance();
    }
    // centered difference needs the level after the sample
    u_before = state.u_prev;
    WaveSnapshot snap{.t = state.t(), .u = state.u_curr, .u_t = {}, .u_tt = {}, .u_ttt = {}};
    advance();
    snap.u_t = Field(state.grid.n_points());
    for (std::size_t i = 0; i < snap.u_t.size(); ++i) {
      snap.u_t[i] = (state.u_curr[i] - u_before[i]) / (2.0 * dt);
    }
    finish(std::move(snap));
  }
}

std::vector<WaveSnapshot> run_wave(const WaveProblem& problem,
                                   std::span<const double> sample_times,
                                   const WaveObserver& observer) {
  std::vector<WaveSnapshot> out;
  out.reserve(sample_times.size());
  stream_wave(
      problem, sample_times, [&](WaveSnapshot&& snap) { out.push_back(std::move(snap)); },
      observer);
  return out;
}

}  // namespace diffusim
