#include "diffusim/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace diffusim {

namespace {

std::string located(const std::string& source, int line, const std::string& message) {
  std::ostringstream os;
  os << source;
  if (line > 0) {
    os << ':' << line;
  }
  os << ": " << message;
  return os.str();
}

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) {
    ++b;
  }
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) {
    --e;
  }
  return s.substr(b, e - b);
}

// drops a trailing comment that is not inside a string
std::string strip_comment(const std::string& s) {
  bool quoted = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"' && (i == 0 || s[i - 1] != '\\')) {
      quoted = !quoted;
    } else if (s[i] == '#' && !quoted) {
      return s.substr(0, i);
    }
  }
  return s;
}

struct Entry {
  std::string raw;
  int line = 0;
  bool used = false;
};

class Table {
 public:
  explicit Table(std::string source) : source_(std::move(source)) {}

  void put(const std::string& key, std::string raw, int line) {
    auto [it, fresh] = entries_.try_emplace(key, Entry{std::move(raw), line, false});
    if (!fresh) {
      fail(line, "duplicate key '" + key + "' (first set on line " +
                     std::to_string(it->second.line) + ")");
    }
  }

  [[noreturn]] void fail(int line, const std::string& message) const {
    throw ScenarioError(source_, line, message);
  }

  Entry* find(const std::string& key) {
    auto it = entries_.find(key);
    if (it == entries_.end()) {
      return nullptr;
    }
    it->second.used = true;
    return &it->second;
  }

  void number(const std::string& key, double& out) {
    if (Entry* e = find(key)) {
      out = parse_number(*e, key);
    }
  }

  void integer(const std::string& key, int& out) {
    if (Entry* e = find(key)) {
      const double v = parse_number(*e, key);
      if (v != std::floor(v) || std::abs(v) > 1e9) {
        fail(e->line, "'" + key + "' must be an integer");
      }
      out = static_cast<int>(v);
    }
  }

  void text(const std::string& key, std::string& out) {
    if (Entry* e = find(key)) {
      out = parse_string(e->raw, e->line, key);
    }
  }

  void list(const std::string& key, std::vector<std::string>& out) {
    Entry* e = find(key);
    if (!e) {
      return;
    }
    const std::string& raw = e->raw;
    if (raw.size() < 2 || raw.front() != '[' || raw.back() != ']') {
      fail(e->line, "'" + key + "' must be an array of strings, e.g. [\"verify-heat\"]");
    }
    out.clear();
    const std::string body = trim(raw.substr(1, raw.size() - 2));
    if (body.empty()) {
      return;
    }
    std::string item;
    bool quoted = false;
    for (char c : body) {
      if (c == '"') {
        quoted = !quoted;
      }
      if (c == ',' && !quoted) {
        out.push_back(parse_string(trim(item), e->line, key));
        item.clear();
      } else {
        item += c;
      }
    }
    if (!trim(item).empty()) {
      out.push_back(parse_string(trim(item), e->line, key));
    }
  }

  int line_of(const std::string& key) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? 0 : it->second.line;
  }

  void reject_unused() const {
    for (const auto& [key, e] : entries_) {
      if (!e.used) {
        fail(e.line, "unknown key '" + key + "'");
      }
    }
  }

 private:
  double parse_number(const Entry& e, const std::string& key) const {
    const char* begin = e.raw.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0' || !std::isfinite(v)) {
      fail(e.line, "'" + key + "' expects a number, got '" + e.raw + "'");
    }
    return v;
  }

  std::string parse_string(const std::string& raw, int line, const std::string& key) const {
    if (raw.size() < 2 || raw.front() != '"' || raw.back() != '"') {
      fail(line, "'" + key + "' expects a quoted string, got '" + raw + "'");
    }
    std::string out;
    for (std::size_t i = 1; i + 1 < raw.size(); ++i) {
      if (raw[i] == '\\' && i + 2 < raw.size()) {
        ++i;
      }
      out += raw[i];
    }
    return out;
  }

  std::string source_;
  std::map<std::string, Entry> entries_;
};

const std::vector<std::string>& known_sections() {
  static const std::vector<std::string> names = {
      "problem", "weights",  "grid",    "wave",        "heat",        "time",
      "fit",     "profile",  "lem3",    "duhamel",     "convergence", "experiments",
      "output",
  };
  return names;
}

}  // namespace

ScenarioError::ScenarioError(const std::string& source, int line, const std::string& message)
    : std::runtime_error(located(source, line, message)), line_(line) {}

WeightParams Scenario::weights() const { return WeightParams(problem.alpha, delta, epsilon); }

HeatConfig Scenario::heat() const { return HeatConfig{heat_dt, heat_theta, boundary}; }

HeatConfig Scenario::duhamel_heat() const {
  return HeatConfig{duhamel_heat_dt, duhamel_theta, boundary};
}

bool Scenario::wants(const std::string& experiment) const {
  return std::find(experiments.begin(), experiments.end(), experiment) != experiments.end();
}

double Scenario::r_max_for(double t_end) const {
  const double wave = t_end + problem.support_radius + wave_margin;
  return std::max(wave, heat_outer_radius(problem, t_end, heat_margin));
}

void Scenario::validate() const {
  auto bad = [&](const std::string& message) { throw ScenarioError(name, 0, message); };
  try {
    problem.validate();
    (void)weights();
    heat().validate();
    duhamel_heat().validate();
  } catch (const std::invalid_argument& e) {
    bad(e.what());
  }
  if (problem.n_dim > RadialLaplacian::kMaxDim) {
    bad("the radial solvers support n = 1, 2, 3");
  }
  if (!(delta < 1.0)) {
    bad("weights.delta must lie in (0, 1)");
  }
  if (!(dr > 0.0) || !(wave_margin >= 0.0) || !(heat_margin > 0.0)) {
    bad("grid.dr and grid.heat_margin must be positive, grid.wave_margin nonnegative");
  }
  if (!(cfl_factor > 0.0 && cfl_factor <= 1.0)) {
    bad("wave.cfl_factor must lie in (0, 1]");
  }
  if (!(t_max > 10.0)) {
    bad("time.t_max must exceed 10 so that rate fits span a decade");
  }
  if (samples < 2 || !(t_first > 0.0) || !(t_first < t_max)) {
    bad("time.samples must be >= 2 and 0 < time.t_first < time.t_max");
  }
  if (!(fit_t_lo > 0.0) || !(fit_t_lo < fit_hi()) || fit_hi() > t_max ||
      !(heat_fit_t_lo > 0.0 && heat_fit_t_lo < fit_hi())) {
    bad("fit window must satisfy 0 < t_lo < t_hi <= time.t_max");
  }
  if (!(profile_t_lo > 0.0 && profile_t_lo < profile_t_hi)) {
    bad("profile window must satisfy 0 < t_lo < t_hi");
  }
  if (!(lem3_rho > 0.0 && lem3_rho < 1.0 - problem.alpha)) {
    bad("lem3.rho must lie in (0, 1 - alpha)");
  }
  if (!(mu() > 0.0 && mu() < 2.0 * weights().A())) {
    bad("lem3.mu must lie in (0, 2A)");
  }
  if (!(lem3_t_lo > 0.0 && lem3_t_lo < fit_hi())) {
    bad("lem3.t_lo must lie in (0, fit t_hi)");
  }
  if (!(duhamel_t > 0.0 && duhamel_t <= t_max) || duhamel_nodes < 16) {
    bad("duhamel.t must lie in (0, t_max] and duhamel.nodes must be >= 16");
  }
  if (!(conv_t_final > 0.0) || conv_levels < 3 || conv_max_nodes < RadialGrid::kMinPoints) {
    bad("convergence needs t_final > 0, levels >= 3 and a usable node cap");
  }
  if (!conv_check.empty() && !(conv_order_min <= conv_order_max)) {
    bad("convergence.order_min must not exceed convergence.order_max");
  }
  if (initial == InitialKind::Constant && boundary != Boundary::Neumann) {
    bad("constant initial data needs grid.boundary = \"neumann\"");
  }
  if (!(u0_amplitude != 0.0 || u1_amplitude != 0.0)) {
    bad("initial data vanish identically");
  }
  for (std::size_t i = 0; i < experiments.size(); ++i) {
    const auto& known = known_experiments();
    if (std::find(known.begin(), known.end(), experiments[i]) == known.end()) {
      bad("unknown experiment '" + experiments[i] + "'");
    }
    if (std::find(experiments.begin(), experiments.begin() + static_cast<long>(i),
                  experiments[i]) != experiments.begin() + static_cast<long>(i)) {
      bad("experiment '" + experiments[i] + "' listed twice");
    }
  }
}

Scenario parse_scenario(const std::string& text, const std::string& source) {
  Table table(source);
  std::istringstream in(text);
  std::string raw_line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, raw_line)) {
    ++line_no;
    const std::string line = trim(strip_comment(raw_line));
    if (line.empty()) {
      continue;
    }
    if (line.front() == '[') {
      if (line.back() != ']') {
        table.fail(line_no, "unterminated section header");
      }
      section = trim(line.substr(1, line.size() - 2));
      const auto& known = known_sections();
      if (std::find(known.begin(), known.end(), section) == known.end()) {
        table.fail(line_no, "unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      table.fail(line_no, "expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      table.fail(line_no, "expected 'key = value'");
    }
    if (section.empty()) {
      table.fail(line_no, "key '" + key + "' appears before any section header");
    }
    table.put(section + "." + key, value, line_no);
  }

  Scenario s;
  s.name = source;
  table.text("problem.name", s.name);
  int n = s.problem.n_dim;
  double alpha = s.problem.alpha;
  double L = s.problem.support_radius;
  table.integer("problem.n", n);
  table.number("problem.alpha", alpha);
  table.number("problem.L", L);
  try {
    s.problem = ProblemParams(n, alpha, L);
  } catch (const std::invalid_argument& e) {
    table.fail(table.line_of("problem.alpha"), e.what());
  }
  std::string initial = "bump";
  table.text("problem.initial", initial);
  if (initial == "bump") {
    s.initial = InitialKind::Bump;
  } else if (initial == "constant") {
    s.initial = InitialKind::Constant;
  } else {
    table.fail(table.line_of("problem.initial"), "problem.initial must be \"bump\" or \"constant\"");
  }
  table.number("problem.u0_amplitude", s.u0_amplitude);
  table.number("problem.u1_amplitude", s.u1_amplitude);

  table.number("weights.delta", s.delta);
  table.number("weights.epsilon", s.epsilon);

  table.number("grid.dr", s.dr);
  table.number("grid.wave_margin", s.wave_margin);
  table.number("grid.heat_margin", s.heat_margin);
  std::string boundary = "dirichlet";
  table.text("grid.boundary", boundary);
  if (boundary == "dirichlet") {
    s.boundary = Boundary::Dirichlet;
  } else if (boundary == "neumann") {
    s.boundary = Boundary::Neumann;
  } else {
    table.fail(table.line_of("grid.boundary"), "grid.boundary must be \"dirichlet\" or \"neumann\"");
  }

  table.number("wave.cfl_factor", s.cfl_factor);
  table.number("wave.energy_t0", s.energy_t0);
  table.number("wave.energy_nu", s.energy_nu);

  table.number("heat.dt", s.heat_dt);
  table.number("heat.theta", s.heat_theta);

  table.number("time.t_max", s.t_max);
  table.integer("time.samples", s.samples);
  table.number("time.t_first", s.t_first);

  table.number("fit.t_lo", s.fit_t_lo);
  table.number("fit.t_hi", s.fit_t_hi);
  table.number("fit.heat_t_lo", s.heat_fit_t_lo);

  table.number("profile.t_lo", s.profile_t_lo);
  table.number("profile.t_hi", s.profile_t_hi);

  table.number("lem3.rho", s.lem3_rho);
  table.number("lem3.mu", s.lem3_mu);
  table.number("lem3.t_lo", s.lem3_t_lo);

  table.number("duhamel.t", s.duhamel_t);
  table.integer("duhamel.nodes", s.duhamel_nodes);
  table.number("duhamel.theta", s.duhamel_theta);
  table.number("duhamel.heat_dt", s.duhamel_heat_dt);

  table.number("convergence.t_final", s.conv_t_final);
  table.integer("convergence.levels", s.conv_levels);
  int max_nodes = static_cast<int>(s.conv_max_nodes);
  table.integer("convergence.max_nodes", max_nodes);
  if (max_nodes < 0) {
    table.fail(table.line_of("convergence.max_nodes"), "convergence.max_nodes must be positive");
  }
  s.conv_max_nodes = static_cast<std::size_t>(max_nodes);
  std::string refine = "space";
  table.text("convergence.refine", refine);
  if (refine == "space") {
    s.conv_refine = RefineMode::Space;
  } else if (refine == "time") {
    s.conv_refine = RefineMode::Time;
  } else {
    table.fail(table.line_of("convergence.refine"),
               "convergence.refine must be \"space\" or \"time\"");
  }
  table.text("convergence.check", s.conv_check);
  table.number("convergence.order_min", s.conv_order_min);
  table.number("convergence.order_max", s.conv_order_max);

  table.list("experiments.run", s.experiments);
  table.text("output.dir", s.output_dir);

  table.reject_unused();
  s.validate();
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ScenarioError(path, 0, "cannot open scenario file");
  }
  std::ostringstream text;
  text << in.rdbuf();
  return parse_scenario(text.str(), path);
}

}  // namespace diffusim
