// Command-line front end: solves a Gaussian unbalanced-transport problem from
// a JSON file and emits a deterministic report.
//
// Exit codes: 0 success, 2 input validation error, 3 computation error,
// 4 certificate out of bounds (the report is still emitted).

#include <chrono>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "guot/guot.hpp"

namespace {

constexpr int kExitSuccess = 0;
constexpr int kExitValidation = 2;
constexpr int kExitComputation = 3;
constexpr int kExitCertificate = 4;

struct CommonArgs {
  std::string input;
  std::string output;
  bool timings = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--input", args.input, "Problem file (JSON)")->required();
  cmd->add_option("--output", args.output, "Write the report here instead of stdout");
  cmd->add_flag("--timings", args.timings,
                "Embed wall-clock timings in the report (breaks byte-for-byte "
                "reproducibility across runs)");
}

int emit(const guot::JsonValue& doc, const std::string& output) {
  const std::string text = doc.to_string();
  if (output.empty()) {
    std::cout << text;
    return kExitSuccess;
  }
  std::ofstream out(output, std::ios::binary);
  if (!out) {
    std::cerr << "error: cannot open output file '" << output << "'\n";
    return kExitValidation;
  }
  out << text;
  return kExitSuccess;
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
      .count();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Closed-form KL-relaxed optimal transport between Gaussian measures"};
  app.require_subcommand(1);

  CommonArgs solve_args;
  CLI::App* cmd_solve = app.add_subcommand("solve", "Compute the closed-form solution");
  add_common(cmd_solve, solve_args);

  CommonArgs certify_args;
  std::int64_t samples = 0;
  std::int64_t seed = 0;
  CLI::App* cmd_certify =
      app.add_subcommand("certify", "Solve and verify the dual optimality certificate");
  add_common(cmd_certify, certify_args);
  CLI::Option* samples_opt = cmd_certify->add_option("--samples", samples,
                                                     "Sample pairs for the slack and "
                                                     "marginal checks (default from file "
                                                     "or 100000)")
                                 ->check(CLI::PositiveNumber);
  CLI::Option* seed_opt =
      cmd_certify->add_option("--seed", seed, "Sampling seed (default from file or 42)");

  CommonArgs grid_args;
  std::vector<int> sizes;
  CLI::App* cmd_grid = app.add_subcommand(
      "grid-bench", "Compare against a finite-grid discrete dual (1-D problems)");
  add_common(cmd_grid, grid_args);
  CLI::Option* sizes_opt = cmd_grid
                               ->add_option("--sizes", sizes,
                                            "Comma-separated grid sizes (default from "
                                            "file or 21,31,41,51)")
                               ->delimiter(',')
                               ->check(CLI::Range(2, 100000));

  CommonArgs sweep_args;
  std::vector<double> lambdas;
  double bar_tau0 = 0.0;
  double bar_tau1 = 0.0;
  CLI::App* cmd_sweep = app.add_subcommand(
      "limit-sweep", "Scale both penalties by each lambda and report the expansion residual");
  add_common(cmd_sweep, sweep_args);
  CLI::Option* lambdas_opt = cmd_sweep
                                 ->add_option("--lambdas", lambdas,
                                              "Comma-separated scale factors (default "
                                              "from file or 1,10,100,1000)")
                                 ->delimiter(',')
                                 ->check(CLI::PositiveNumber);
  CLI::Option* bt0_opt = cmd_sweep->add_option("--bar-tau0", bar_tau0,
                                               "Base source penalty (default: problem tau0)")
                             ->check(CLI::PositiveNumber);
  CLI::Option* bt1_opt = cmd_sweep->add_option("--bar-tau1", bar_tau1,
                                               "Base target penalty (default: problem tau1)")
                             ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitSuccess : kExitValidation;
  }

  CLI::App* cmd = app.get_subcommands().front();
  const std::string command = cmd->get_name();
  CommonArgs* args = nullptr;
  if (cmd == cmd_solve) args = &solve_args;
  if (cmd == cmd_certify) args = &certify_args;
  if (cmd == cmd_grid) args = &grid_args;
  if (cmd == cmd_sweep) args = &sweep_args;

  const auto t_start = std::chrono::steady_clock::now();
  try {
    guot::ProblemFile pf = guot::parse_problem(args->input);

    if (*samples_opt) pf.certify.samples = samples;
    if (*seed_opt) pf.certify.seed = seed;
    if (*sizes_opt) pf.grid.sizes = sizes;
    if (*lambdas_opt) {
      for (std::size_t i = 1; i < lambdas.size(); ++i) {
        if (lambdas[i] <= lambdas[i - 1]) {
          std::cerr << "error: --lambdas must be strictly increasing\n";
          return kExitValidation;
        }
      }
      pf.sweep.lambdas = lambdas;
    }
    if (*bt0_opt) pf.sweep.bar_tau0 = bar_tau0;
    if (*bt1_opt) pf.sweep.bar_tau1 = bar_tau1;
    const double parse_ms = elapsed_ms(t_start);

    const auto t_run = std::chrono::steady_clock::now();
    guot::CertificateReport certificate{};
    double value = 0.0;
    guot::JsonValue doc = guot::build_report(pf, command, &certificate, &value);
    const double run_ms = elapsed_ms(t_run);

    if (args->timings) {
      guot::JsonValue timings = guot::JsonValue::object();
      timings.add("parse_ms", parse_ms);
      timings.add("run_ms", run_ms);
      doc.add("timings", std::move(timings));
    }
    std::cerr << command << ": parse " << parse_ms << " ms, run " << run_ms << " ms\n";

    const int emit_code = emit(doc, args->output);
    if (emit_code != kExitSuccess) return emit_code;

    if (command == "certify") {
      const auto violations = guot::certificate_violations(certificate, value);
      if (!violations.empty()) {
        std::cerr << "certificate failed:\n";
        for (const std::string& v : violations) std::cerr << "  " << v << "\n";
        return kExitCertificate;
      }
    }
    return kExitSuccess;
  } catch (const guot::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitComputation;
  }
}
