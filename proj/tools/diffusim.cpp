// diffusim command line: scenario runs, convergence studies, rate tables.

#include <CLI11.hpp>

#include <iomanip>
#include <iostream>

#include "diffusim/harness.hpp"

namespace {

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;

int print_rates(int n, double alpha, int k_max) {
  diffusim::ProblemParams p(n, alpha, 1.0);
  std::cout << "n = " << n << ", alpha = " << alpha << "\n";
  std::cout << std::left << std::setw(4) << "k" << std::setw(22) << "||u||_L2 exponent"
            << std::setw(26) << "weighted a|d_t^k u|^2" << "weighted |grad d_t^k u|^2\n";
  for (int k = 0; k <= k_max; ++k) {
    const auto r = diffusim::theoretical_rates(p, k);
    std::cout << std::left << std::setw(4) << k << std::setw(22) << diffusim::format_double(r.l2_rate)
              << std::setw(26) << diffusim::format_double(r.weighted_sq_rate)
              << diffusim::format_double(r.weighted_grad_sq_rate) << '\n';
  }
  return kExitPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Damped wave / heat flow verification harness"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string out_dir;
  int jobs = 1;
  auto* run = app.add_subcommand("run", "run the experiments of a scenario");
  run->add_option("scenario", scenario_path, "scenario file")->required();
  run->add_option("--out", out_dir, "output directory (default: output.dir of the scenario)");
  run->add_option("--jobs", jobs, "worker threads")->check(CLI::Range(1, 256));

  int levels = 0;
  auto* conv = app.add_subcommand("convergence", "grid refinement study of a scenario");
  conv->add_option("scenario", scenario_path, "scenario file")->required();
  conv->add_option("--levels", levels, "number of refinement levels (>= 3)")
      ->required()
      ->check(CLI::Range(3, 12));

  int n = 1;
  double alpha = 0.0;
  int k_max = 0;
  auto* rates = app.add_subcommand("rates", "print the predicted decay exponents");
  rates->add_option("--n", n, "space dimension")->required()->check(CLI::Range(1, 64));
  rates->add_option("--alpha", alpha, "damping exponent in [0, 1)")->required();
  rates->add_option("--k", k_max, "highest time derivative order")->check(CLI::Range(0, 16));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitUsage;
  }

  try {
    if (*rates) {
      return print_rates(n, alpha, k_max);
    }
    if (*run) {
      diffusim::RunOptions options{.jobs = jobs, .log = &std::cerr};
      const auto report = diffusim::run_scenario_file(scenario_path, out_dir, options);
      report.write_table(std::cout);
      return report.all_pass() ? kExitPass : kExitFail;
    }
    if (*conv) {
      const auto s = diffusim::load_scenario(scenario_path);
      const auto table = diffusim::convergence_study(s, levels);
      table.write(std::cout);
      if (!s.conv_check.empty()) {
        const bool ok = diffusim::convergence_check_passes(s, table);
        std::cout << "\n" << s.conv_check << " orders in [" << s.conv_order_min << ", "
                  << s.conv_order_max << "]: " << (ok ? "PASS" : "FAIL") << '\n';
        return ok ? kExitPass : kExitFail;
      }
      return kExitPass;
    }
  } catch (const diffusim::ScenarioError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::length_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFail;
  }
  return kExitUsage;
}
