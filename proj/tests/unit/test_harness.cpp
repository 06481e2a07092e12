#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

#include "doctest.h"
#include "diffusim/harness.hpp"

using namespace diffusim;

namespace {

const char* kSmall = R"(
[problem]
n = 1
alpha = 0.5
[grid]
dr = 0.05
[wave]
cfl_factor = 1.0
[heat]
dt = 0.1
[time]
t_max = 40.0
samples = 40
[fit]
t_lo = 10.0
heat_t_lo = 10.0
[duhamel]
t = 2.0
nodes = 17
)";

std::string csv_of(const VerificationReport& r) {
  std::ostringstream os;
  r.write_csv(os);
  return os.str();
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("sample schedule") {
  const Scenario s = parse_scenario(kSmall);
  const auto t = sample_schedule(s);
  REQUIRE(t.size() == 40);
  CHECK(t.front() == doctest::Approx(1.0));
  CHECK(t.back() == doctest::Approx(40.0));
  for (std::size_t i = 1; i < t.size(); ++i) {
    CHECK(t[i] > t[i - 1]);
  }
}

TEST_CASE("wave step divides the quadrature spacing") {
  const Scenario s = parse_scenario(kSmall);
  const RadialGrid grid = scenario_grid(s);
  const double dt = aligned_wave_dt(grid, s, s.duhamel_t, s.duhamel_nodes);
  const double ratio = (s.duhamel_t / (s.duhamel_nodes - 1)) / dt;
  CHECK(std::abs(ratio - std::round(ratio)) < 1e-9);
  CHECK(dt <= s.cfl_factor * max_stable_dt(grid) * (1.0 + 1e-12));
}

TEST_CASE("missing trajectories are a programming error") {
  const Scenario s = parse_scenario(kSmall);
  VerificationReport rep;
  CHECK_THROWS_AS(experiment_verify_dp(s, nullptr, nullptr, rep, nullptr), std::logic_error);
  CHECK_THROWS_AS(experiment_verify_heat(s, nullptr, rep, nullptr), std::logic_error);
  CHECK_THROWS_AS(experiment_verify_wave(s, nullptr, rep, nullptr), std::logic_error);
  CHECK_THROWS_AS(experiment_duhamel(s, nullptr, rep, 1), std::logic_error);
}

TEST_CASE("failed trajectories give failed records") {
  const Scenario s = parse_scenario(kSmall);
  WaveTrajectory wave{.grid = scenario_grid(s), .failure = "diverged"};
  VerificationReport rep;
  experiment_verify_wave(s, &wave, rep, nullptr);
  REQUIRE_FALSE(rep.records.empty());
  for (const auto& r : rep.records) {
    CHECK_FALSE(r.pass);
  }
}

TEST_CASE("no experiments") {
  const Scenario s = parse_scenario(kSmall);
  const auto rep = run_scenario(s, nullptr);
  CHECK(rep.records.empty());
  CHECK(rep.all_pass());
}

TEST_CASE("profile check for n = 3, alpha = 0.5") {
  Scenario s = parse_scenario("[problem]\nn = 3\nalpha = 0.5\n");
  VerificationReport rep;
  MemorySink sink;
  experiment_profile_check(s, rep, &sink);
  REQUIRE_FALSE(rep.records.empty());
  for (const auto& r : rep.records) {
    CAPTURE(r.claim_id);
    CAPTURE(r.measured);
    CHECK(r.pass);
  }
  CHECK_FALSE(sink.series().empty());
}

TEST_CASE("heat claims for n = 1, alpha = 0") {
  std::string text = kSmall;
  text.replace(text.find("alpha = 0.5"), 11, "alpha = 0.0");
  Scenario s = parse_scenario(text);
  const RadialGrid grid = scenario_grid(s);
  const auto heat = run_heat_trajectory(s, grid, sample_schedule(s));
  REQUIRE(heat.ok());
  VerificationReport rep;
  experiment_verify_heat(s, &heat, rep, nullptr);
  REQUIRE(rep.records.size() >= 3);
  for (const auto& r : rep.records) {
    CAPTURE(r.claim_id);
    CAPTURE(r.measured);
    CHECK(r.pass);
  }
}

TEST_CASE("runs are deterministic across thread counts") {
  std::string text = kSmall;
  text += "[experiments]\nrun = [\"verify-heat\", \"verify-wave\", \"verify-dp\", \"duhamel\"]\n";
  const Scenario s = parse_scenario(text);
  MemorySink a;
  MemorySink b;
  const auto r1 = run_scenario(s, &a, {.jobs = 1});
  const auto r3 = run_scenario(s, &b, {.jobs = 3});
  CHECK(csv_of(r1) == csv_of(r3));
  CHECK(a.series().size() == b.series().size());
}

TEST_CASE("stationary convergence reproduces constants") {
  Scenario s = parse_scenario(R"(
[problem]
n = 3
alpha = 0.25
initial = "constant"
[grid]
dr = 0.1
boundary = "neumann"
[convergence]
t_final = 1.0
levels = 3
)");
  const auto table = convergence_study(s, 3);
  CHECK(table.levels.size() == 3);
  for (const auto& q : table.quantities) {
    CAPTURE(q.name);
    for (double e : q.errors) {
      CHECK(e <= 1e-12);
    }
  }
  CHECK(convergence_check_passes(s, table));
  CHECK_THROWS(table.quantity("missing"));
}

TEST_CASE("convergence limits") {
  Scenario s = parse_scenario("[convergence]\nmax_nodes = 1000\n");
  CHECK_THROWS_AS(convergence_study(s, 4), std::length_error);
  CHECK_THROWS_AS(convergence_study(s, 2), std::invalid_argument);
}

TEST_CASE("space refinement of the wave flow is second order") {
  Scenario s = parse_scenario(R"(
[problem]
n = 1
alpha = 0.0
[grid]
dr = 0.04
[convergence]
t_final = 2.0
levels = 4
check = "wave_l2"
order_min = 1.7
order_max = 2.3
)");
  const auto table = convergence_study(s, 4);
  const auto& q = table.quantity("wave_l2");
  CHECK(q.orders.size() == 2);
  CHECK(convergence_check_passes(s, table));
  std::ostringstream os;
  table.write(os);
  CHECK(os.str().find("wave_l2") != std::string::npos);
}

}
