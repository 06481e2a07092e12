#include "diffusim/diagnostics.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <exception>
#include <limits>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace diffusim {

namespace {

constexpr double kDirectExponentLimit = 500.0;

void require_same_size(const Field& f, const RadialGrid& grid) {
  if (f.size() != grid.n_points()) {
    std::ostringstream os;
    os << "field has " << f.size() << " samples, grid has " << grid.n_points();
    throw std::invalid_argument(os.str());
  }
}

double radial_factor(double r, int n_dim) {
  return n_dim == 1 ? 1.0 : std::pow(r, n_dim - 1);
}

/// Trapezoid weight of node i (without the sphere measure).
double node_weight(const RadialGrid& grid, std::size_t i) {
  const bool end = i == 0 || i + 1 == grid.n_points();
  return (end ? 0.5 : 1.0) * grid.dr() * radial_factor(grid.r(i), grid.n_dim());
}

/// sum_i c_i exp(e_i) for c_i >= 0, in the log domain when some exponent is large.
class ExpWeightedSum {
 public:
  void add(double coeff, double exponent) {
    if (coeff == 0.0) {
      return;
    }
    coeffs_.push_back(coeff);
    exponents_.push_back(exponent);
    max_exponent_ = std::max(max_exponent_, exponent);
  }

  double value() const {
    if (coeffs_.empty()) {
      return 0.0;
    }
    if (max_exponent_ <= kDirectExponentLimit) {
      double s = 0.0;
      for (std::size_t i = 0; i < coeffs_.size(); ++i) {
        s += coeffs_[i] * std::exp(exponents_[i]);
      }
      return s;
    }
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < coeffs_.size(); ++i) {
      m = std::max(m, std::log(coeffs_[i]) + exponents_[i]);
    }
    double s = 0.0;
    for (std::size_t i = 0; i < coeffs_.size(); ++i) {
      s += std::exp(std::log(coeffs_[i]) + exponents_[i] - m);
    }
    const double log_total = m + std::log(s);
    if (log_total >= std::log(DBL_MAX)) {
      throw std::overflow_error(
          "weighted integral overflows: field mass sits where the weight is huge "
          "(support violation?)");
    }
    return std::exp(log_total);
  }

 private:
  std::vector<double> coeffs_;
  std::vector<double> exponents_;
  double max_exponent_ = -std::numeric_limits<double>::infinity();
};

/// Trapezoid over cells [r_i, r_{i+1}] with first <= i < last.
double cell_range_integral(const Field& f, const RadialGrid& grid, std::size_t first,
                           std::size_t last) {
  double s = 0.0;
  for (std::size_t i = first; i < last; ++i) {
    const double g0 = f[i] * f[i] * radial_factor(grid.r(i), grid.n_dim());
    const double g1 = f[i + 1] * f[i + 1] * radial_factor(grid.r(i + 1), grid.n_dim());
    s += 0.5 * grid.dr() * (g0 + g1);
  }
  return sphere_measure(grid.n_dim()) * s;
}

/// First cell whose left node sits at radius >= r.
std::size_t first_cell_at(const RadialGrid& grid, double r) {
  if (r <= 0.0) {
    return 0;
  }
  const double x = r / grid.dr();
  auto i = static_cast<std::size_t>(std::ceil(x - 1e-12 * std::max(1.0, x)));
  return std::min(i, grid.n_points() - 1);
}

double psi_exponent(double t, double r, const WeightParams& w) {
  return 2.0 * weight_psi(t, r, w);
}

}  // namespace

double l2_norm_squared(const Field& f, const RadialGrid& grid) {
  require_same_size(f, grid);
  return cell_range_integral(f, grid, 0, grid.n_points() - 1);
}

double l2_norm(const Field& f, const RadialGrid& grid) {
  return std::sqrt(l2_norm_squared(f, grid));
}

double mass_outside(const Field& f, const RadialGrid& grid, double radius) {
  require_same_size(f, grid);
  const std::size_t first = first_cell_at(grid, radius);
  return std::sqrt(cell_range_integral(f, grid, first, grid.n_points() - 1));
}

double damped_mass(const Field& v, const RadialLaplacian& laplacian,
                   std::span<const double> damping) {
  const auto& w = laplacian.node_weights();
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    s += w[i] * damping[i] * v[i] * v[i];
  }
  return s;
}

double weighted_integral(const Field& f, double t, const WeightParams& w, bool include_a,
                         const RadialGrid& grid) {
  require_same_size(f, grid);
  ExpWeightedSum sum;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f[i] == 0.0) {
      continue;
    }
    const double r = grid.r(i);
    double c = node_weight(grid, i) * f[i] * f[i];
    if (include_a) {
      c *= damping_coefficient(r, w.alpha());
    }
    sum.add(c, psi_exponent(t, r, w));
  }
  return sphere_measure(grid.n_dim()) * sum.value();
}

double weighted_gradient_integral(const Field& f, double t, const WeightParams& w,
                                  const RadialGrid& grid) {
  require_same_size(f, grid);
  ExpWeightedSum sum;
  const double dr = grid.dr();
  for (std::size_t i = 0; i + 1 < f.size(); ++i) {
    const double g = (f[i + 1] - f[i]) / dr;
    if (g == 0.0) {
      continue;
    }
    const double r = grid.r(i) + 0.5 * dr;
    sum.add(dr * radial_factor(r, grid.n_dim()) * g * g, psi_exponent(t, r, w));
  }
  return sphere_measure(grid.n_dim()) * sum.value();
}

std::vector<double> initial_norms(std::span<const Field> derivatives, const WeightParams& w,
                                  const RadialGrid& grid, int k_max) {
  if (k_max < 0) {
    throw std::invalid_argument("k_max must be >= 0");
  }
  if (derivatives.size() < static_cast<std::size_t>(k_max) + 2) {
    throw std::invalid_argument("initial_norms needs time derivatives up to order k_max + 1");
  }
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(k_max) + 1);
  // I_0 carries the extra u0^2 term
  double acc = weighted_integral(derivatives[0], 0.0, w, false, grid);
  for (int k = 0; k <= k_max; ++k) {
    acc += weighted_integral(derivatives[k + 1], 0.0, w, false, grid) +
           weighted_gradient_integral(derivatives[k], 0.0, w, grid);
    out.push_back(acc);
  }
  return out;
}

std::vector<Field> initial_derivatives(const Field& u0, const Field& u1, const RadialGrid& grid,
                                       const ProblemParams& params, Boundary boundary) {
  require_same_size(u0, grid);
  require_same_size(u1, grid);
  const RadialLaplacian lap(grid, boundary);
  const auto a = damping_profile(grid, params.alpha);
  std::vector<Field> d;
  for (int k = 0; k <= 3; ++k) {
    d.push_back(time_derivative(lap, a, u0, u1, k));
  }
  return d;
}

EnergyFunctionals energy_functionals(const WaveSnapshot& snap, const WeightParams& w, double t0,
                                     double nu, const RadialGrid& grid) {
  require_same_size(snap.u, grid);
  require_same_size(snap.u_t, grid);
  if (!(w.delta() < 1.0)) {
    throw std::invalid_argument("energy functionals need delta < 1");
  }
  const double t = snap.t;
  const double alpha = w.alpha();
  const double n = grid.n_dim();
  const double A = w.A();
  const double shift = std::pow(t0 + t, alpha);
  const double base = (n - alpha) / (2.0 - alpha);
  // positive constants of the weighted multiplier estimates, fixed by delta
  const double delta1 = base * (0.5 - 1.0 / (2.0 + w.delta()));
  const double delta2 = (w.delta() - w.delta() * w.delta()) / 6.0;
  const double delta3 = delta2 / (4.0 + delta2);

  ExpWeightedSum e1;
  ExpWeightedSum e1_psi;
  ExpWeightedSum h1;
  for (std::size_t i = 0; i < grid.n_points(); ++i) {
    const double r = grid.r(i);
    const double c = node_weight(grid, i);
    const double psi = weight_psi(t, r, w);
    const double a = damping_coefficient(r, alpha);
    const double ut2 = snap.u_t[i] * snap.u_t[i];
    const double u2 = snap.u[i] * snap.u[i];
    const double grad_psi = A * (2.0 - alpha) * std::pow(1.0 + r * r, -0.5 * alpha) * r / (1.0 + t);
    e1.add(c * (shift * ut2 + a * u2), 2.0 * psi);
    e1_psi.add(c * (1.0 + shift * psi / (1.0 + t)) * ut2, 2.0 * psi);
    h1.add(c * nu *
               (delta3 * grad_psi * grad_psi + (base - 2.0 * delta1) * a / (2.0 * (1.0 + t))) *
               u2,
           2.0 * psi);
  }
  const double dr = grid.dr();
  for (std::size_t i = 0; i + 1 < grid.n_points(); ++i) {
    const double g = (snap.u[i + 1] - snap.u[i]) / dr;
    const double r = grid.r(i) + 0.5 * dr;
    const double c = dr * radial_factor(r, grid.n_dim()) * g * g;
    const double psi = weight_psi(t, r, w);
    e1.add(c * shift, 2.0 * psi);
    e1_psi.add(c * (1.0 + shift * psi / (1.0 + t)), 2.0 * psi);
  }
  const double m = sphere_measure(grid.n_dim());
  return {m * e1.value(), m * e1_psi.value(), m * h1.value()};
}

void DecaySeries::add(double t, double value) {
  if (!std::isfinite(t) || !std::isfinite(value) || value < 0.0) {
    throw std::invalid_argument("decay series needs finite times and nonnegative values");
  }
  if (any_ && !(t > last_t_)) {
    throw std::invalid_argument("decay series times must be strictly increasing");
  }
  any_ = true;
  last_t_ = t;
  if (value == 0.0) {
    ++dropped_;
    return;
  }
  samples_.push_back({t, value});
}

FitResult fit_decay_rate(const DecaySeries& series, double t_lo, double t_hi) {
  std::vector<double> x;
  std::vector<double> y;
  for (const auto& s : series.samples()) {
    if (s.t >= t_lo && s.t <= t_hi) {
      if (!(s.t > 0.0)) {
        throw std::invalid_argument("log-log fit needs positive times");
      }
      x.push_back(std::log(s.t));
      y.push_back(std::log(s.value));
    }
  }
  if (x.size() < kMinFitSamples) {
    std::ostringstream os;
    os << "fit window [" << t_lo << ", " << t_hi << "] of '" << series.label() << "' holds "
       << x.size() << " samples, need " << kMinFitSamples;
    throw std::invalid_argument(os.str());
  }
  FitResult fit = fit_line(x, y);
  fit.t_lo = t_lo;
  fit.t_hi = t_hi;
  return fit;
}

FitResult fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.empty()) {
    throw std::invalid_argument("line fit needs matching, non-empty abscissae and ordinates");
  }
  const auto count = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= count;
  my /= count;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  FitResult fit;
  fit.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - (fit.intercept + fit.slope * x[i]);
    ss_res += e * e;
  }
  fit.r_squared = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
  fit.n_samples = x.size();
  return fit;
}

std::vector<double> median3(std::span<const double> values) {
  std::vector<double> out(values.begin(), values.end());
  for (std::size_t i = 1; i + 1 < values.size(); ++i) {
    double a = values[i - 1];
    double b = values[i];
    double c = values[i + 1];
    out[i] = std::max(std::min(a, b), std::min(std::max(a, b), c));
  }
  return out;
}

ParabolicRegionSpec::ParabolicRegionSpec(double rho, double mu, const WeightParams& w)
    : rho_(rho), mu_(mu) {
  if (!(rho > 0.0 && rho < 1.0 - w.alpha())) {
    throw std::invalid_argument("rho must lie in (0, 1 - alpha)");
  }
  if (!(mu > 0.0 && mu < 2.0 * w.A())) {
    throw std::invalid_argument("mu must lie in (0, 2A)");
  }
}

double ParabolicRegionSpec::threshold_radius(double t, double alpha) const {
  const double bracket_sq = std::pow(1.0 + t, 2.0 * (1.0 + rho_) / (2.0 - alpha));
  return std::sqrt(std::max(bracket_sq - 1.0, 0.0));
}

double region_mass(const Field& f, double t, const ParabolicRegionSpec& spec,
                   const RadialGrid& grid, const ProblemParams& params) {
  require_same_size(f, grid);
  const std::size_t first = first_cell_at(grid, spec.threshold_radius(t, params.alpha));
  return cell_range_integral(f, grid, first, grid.n_points() - 1);
}

double region_complement_mass(const Field& f, double t, const ParabolicRegionSpec& spec,
                              const RadialGrid& grid, const ProblemParams& params) {
  require_same_size(f, grid);
  const std::size_t first = first_cell_at(grid, spec.threshold_radius(t, params.alpha));
  return cell_range_integral(f, grid, 0, first);
}

double profile_difference(const Field& u, const Field& profile, const RadialGrid& grid) {
  if (u.size() != profile.size()) {
    throw std::invalid_argument("wave and heat fields live on different grids");
  }
  require_same_size(u, grid);
  Field d(u.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    d[i] = u[i] - profile[i];
  }
  return l2_norm(d, grid);
}

Field diffusion_profile_data(const Field& u0, const Field& u1, const RadialGrid& grid,
                             const ProblemParams& params) {
  require_same_size(u0, grid);
  require_same_size(u1, grid);
  Field v(u0.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = u0[i] + u1[i] / damping_coefficient(grid.r(i), params.alpha);
  }
  return v;
}

double profile_difference(const WaveSnapshot& snap, const Field& u0, const Field& u1,
                          const RadialGrid& grid, const ProblemParams& params,
                          const HeatConfig& heat) {
  const Field profile =
      apply_E(diffusion_profile_data(u0, u1, grid, params), 0.0, snap.t, grid, params, heat);
  return profile_difference(snap.u, profile, grid);
}

double duhamel_residual(const DuhamelHistory& h, const RadialGrid& grid,
                        const ProblemParams& params, const HeatConfig& heat, int jobs,
                        DuhamelMethod method) {
  require_same_size(h.u0, grid);
  require_same_size(h.u_final, grid);
  if (h.times.size() != h.sources.size()) {
    throw std::invalid_argument("Duhamel history needs one source per quadrature time");
  }
  if (h.times.empty() || h.times.front() != 0.0) {
    throw std::invalid_argument("Duhamel quadrature must start at tau = 0");
  }
  const double t = h.times.back();
  if (t == 0.0) {
    return 0.0;
  }
  if (h.times.size() < kMinDuhamelNodes) {
    throw std::invalid_argument("Duhamel quadrature needs at least 16 nodes");
  }
  for (std::size_t j = 1; j < h.times.size(); ++j) {
    if (!(h.times[j] > h.times[j - 1])) {
      throw std::invalid_argument("Duhamel quadrature times must increase");
    }
  }
  for (const auto& s : h.sources) {
    require_same_size(s, grid);
  }
  const double norm = l2_norm(h.u_final, grid);
  if (norm == 0.0) {
    throw std::invalid_argument("Duhamel residual is undefined for a vanishing solution");
  }

  const std::size_t m = h.times.size();
  auto weight = [&](std::size_t j) {
    const double left = j > 0 ? h.times[j] - h.times[j - 1] : 0.0;
    const double right = j + 1 < m ? h.times[j + 1] - h.times[j] : 0.0;
    return 0.5 * (left + right);
  };

  if (method == DuhamelMethod::ProductTrapezoid) {
    heat.validate();
    HeatState state = init_heat(grid, params, h.u0, 0.0, heat);
    const double theta = heat.theta;
    std::vector<double> forcing(grid.n_points());
    std::shared_ptr<const ThetaStepper> stepper;
    for (std::size_t j = 0; j + 1 < m; ++j) {
      const double span = h.times[j + 1] - h.times[j];
      const auto count =
          static_cast<std::int64_t>(std::max(1.0, std::ceil(span / heat.dt - 1e-9)));
      const double step = span / static_cast<double>(count);
      if (!stepper || stepper->h() != step) {
        stepper = std::make_shared<const ThetaStepper>(state.laplacian, state.damping, theta, step);
      }
      const Field& s0 = h.sources[j];
      const Field& s1 = h.sources[j + 1];
      for (std::int64_t k = 0; k < count; ++k) {
        const double lo = static_cast<double>(k) / static_cast<double>(count);
        const double hi = static_cast<double>(k + 1) / static_cast<double>(count);
        const double c0 = theta * (1.0 - hi) + (1.0 - theta) * (1.0 - lo);
        const double c1 = theta * hi + (1.0 - theta) * lo;
        for (std::size_t i = 0; i < forcing.size(); ++i) {
          forcing[i] = -state.damping[i] * (c0 * s0[i] + c1 * s1[i]);
        }
        stepper->apply(state.laplacian, state.damping, state.v.span(), forcing);
      }
    }
    if (!state.v.all_finite()) {
      throw std::runtime_error("Duhamel heat evolution became non-finite");
    }
    return profile_difference(h.u_final, state.v, grid) / norm;
  }

  if (method == DuhamelMethod::TrapezoidSweep) {
    Field start = h.u0;
    for (std::size_t i = 0; i < start.size(); ++i) {
      start[i] -= weight(0) * h.sources[0][i];
    }
    HeatState state = init_heat(grid, params, start, 0.0, heat);
    for (std::size_t j = 1; j < m; ++j) {
      advance_heat_to(state, h.times[j]);
      const double wj = weight(j);
      for (std::size_t i = 0; i < state.v.size(); ++i) {
        state.v[i] -= wj * h.sources[j][i];
      }
    }
    return profile_difference(h.u_final, state.v, grid) / norm;
  }

  std::vector<Field> evolved(m);
  const auto threads = static_cast<std::size_t>(std::clamp(jobs, 1, static_cast<int>(m)));
  std::vector<std::exception_ptr> failures(threads);
  auto work = [&](std::size_t begin) {
    try {
      for (std::size_t j = begin; j < m; j += threads) {
        evolved[j] = apply_E(h.sources[j], h.times[j], t, grid, params, heat);
      }
    } catch (...) {
      failures[begin] = std::current_exception();
    }
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t k = 0; k < threads; ++k) {
      pool.emplace_back(work, k);
    }
  }
  for (const auto& f : failures) {
    if (f) {
      std::rethrow_exception(f);
    }
  }
  Field rhs = apply_E(h.u0, 0.0, t, grid, params, heat);
  for (std::size_t j = 0; j < m; ++j) {
    const double wj = weight(j);
    for (std::size_t i = 0; i < rhs.size(); ++i) {
      rhs[i] -= wj * evolved[j][i];
    }
  }
  return profile_difference(h.u_final, rhs, grid) / norm;
}

}  // namespace diffusim
