// Command-line front end for the MJLS finite-horizon LQR solver.
//
//   mjls_lqr solve <file>      analytic solution and optimal cost
//   mjls_lqr validate <file>   adds moment-propagation and Monte Carlo costs
//   mjls_lqr visited <file>    visited / non-visited / absorbing modes
//   mjls_lqr reproduce <id>    bundled example vs reference values (ex1, ex3, ex4)
//
// Exit codes: 0 success, 1 reproduction mismatch, 2 invalid input,
// 3 numerical failure.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mjls/commands.h"
#include "mjls/problem_io.h"
#include "mjls/report.h"

namespace {

constexpr int kExitMismatch = 1;
constexpr int kExitInvalid = 2;
constexpr int kExitNumerical = 3;

struct Flags {
  std::string file;
  std::string method;
  int steps = 0;
  int paths = 0;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out;
  std::string format;
  std::string checkpoints;
  bool timing = false;
};

std::vector<double> ParseCheckpoints(const std::string& text) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw mjls::ValidationError("--checkpoints",
                                  "not a number: '" + item + "'");
    }
  }
  return out;
}

mjls::RunOptions ToRunOptions(const Flags& flags) {
  mjls::RunOptions options;
  if (!flags.method.empty()) options.method = mjls::ParseMethod(flags.method);
  if (flags.steps > 0) options.num_steps = flags.steps;
  if (flags.paths > 0) options.num_paths = flags.paths;
  if (flags.seed_set) options.seed = flags.seed;
  options.checkpoints = ParseCheckpoints(flags.checkpoints);
  options.timing = flags.timing;
  return options;
}

void Emit(const mjls::Report& report, const Flags& flags) {
  const std::string format =
      flags.format.empty() ? (flags.out.empty() ? "text" : "json")
                           : flags.format;
  auto render = [&](const std::string& f) {
    if (f == "json") return mjls::ReportToJson(report).dump(2) + "\n";
    if (f == "csv") return mjls::ReportToCsv(report);
    return mjls::ReportToText(report);
  };
  if (flags.out.empty()) {
    std::cout << render(format);
    return;
  }
  std::cout << mjls::ReportToText(report);
  std::ofstream out(flags.out, std::ios::binary);
  if (!out) throw mjls::ValidationError("--out", "cannot write " + flags.out);
  out << render(format);
}

void AddRunFlags(CLI::App* cmd, Flags& flags) {
  cmd->add_option("file", flags.file, "Problem file (JSON)")->required();
  cmd->add_option("--method", flags.method, "rk4 (default) or backward_euler")
      ->check(CLI::IsMember({"rk4", "euler", "backward_euler"}));
  cmd->add_option("--steps", flags.steps, "Grid steps (default T / 1e-3)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--out", flags.out, "Write the report to this path");
  cmd->add_option("--format", flags.format, "json, csv or text")
      ->check(CLI::IsMember({"json", "csv", "text"}));
  cmd->add_option("--checkpoints", flags.checkpoints,
                  "Comma-separated times for mode probabilities (default T)");
  cmd->add_flag("--timing", flags.timing, "Include stage timings");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite-horizon LQR for Markov jump linear systems"};
  app.require_subcommand(1);
  Flags flags;

  CLI::App* solve = app.add_subcommand("solve", "Solve the coupled Riccati "
                                                "equations and report J*");
  AddRunFlags(solve, flags);

  CLI::App* validate = app.add_subcommand(
      "validate", "Cross-check J* by moment propagation and Monte Carlo");
  AddRunFlags(validate, flags);
  validate->add_option("--paths", flags.paths, "Monte Carlo paths (10000)")
      ->check(CLI::Range(2, std::numeric_limits<int>::max()));
  validate
      ->add_option_function<std::uint64_t>(
          "--seed",
          [&](const std::uint64_t& s) {
            flags.seed = s;
            flags.seed_set = true;
          },
          "Master seed (42)");

  CLI::App* visited = app.add_subcommand("visited", "List visited modes");
  visited->add_option("file", flags.file, "Problem file (JSON)")->required();

  std::string example;
  std::string data_dir = MJLS_DATA_DIR;
  CLI::App* reproduce =
      app.add_subcommand("reproduce", "Compare a bundled example with its "
                                      "reference values");
  reproduce->add_option("example", example, "ex1, ex3 or ex4")
      ->required()
      ->check(CLI::IsMember({"ex1", "ex3", "ex4"}));
  reproduce->add_option("--data-dir", data_dir, "Bundled problem files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInvalid;
  }

  try {
    if (*solve || *validate) {
      const mjls::ProblemFile file = mjls::LoadProblemFile(flags.file);
      const mjls::RunOptions options = ToRunOptions(flags);
      Emit(*solve ? mjls::RunSolve(file, options)
                  : mjls::RunValidate(file, options),
           flags);
    } else if (*visited) {
      std::cout << mjls::VisitedToText(
          mjls::RunVisited(mjls::LoadProblemFile(flags.file)));
    } else if (*reproduce) {
      const mjls::ReproductionTable table =
          mjls::RunReproduce(example, data_dir);
      std::cout << mjls::ReproductionToText(table);
      return table.all_passed() ? 0 : kExitMismatch;
    }
  } catch (const mjls::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const mjls::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  }
  return 0;
}
