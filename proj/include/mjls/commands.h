#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mjls/montecarlo.h"
#include "mjls/problem_io.h"
#include "mjls/riccati.h"

namespace mjls {

inline constexpr double kDefaultStep = 1e-3;
inline constexpr int kDefaultNumPaths = 10000;
inline constexpr std::uint64_t kDefaultSeed = 42;
inline constexpr int kReportSchemaVersion = 1;

/// Command-line overrides. Precedence: flag, then problem file, then default.
struct RunOptions {
  std::optional<Method> method;
  std::optional<int> num_steps;
  std::optional<int> num_paths;
  std::optional<std::uint64_t> seed;
  /// Times at which mode probabilities are reported; empty means {T}.
  std::vector<double> checkpoints;
  bool timing = false;
  int max_threads = 0;
};

struct ModeMatrix {
  int mode;  // 0-based
  Matrix value;
};

struct Report {
  std::string command;
  std::string description;
  std::string method;
  int num_steps = 0;
  double horizon = 0.0;
  VisitedSet visited;
  std::vector<int> absorbing;
  std::vector<ModeMatrix> cost_to_go0;
  std::vector<ModeMatrix> gains0;
  double cost_analytic = 0.0;
  std::optional<double> cost_moment;
  std::optional<CostEstimate> cost_mc;
  std::optional<std::uint64_t> mc_seed;
  std::optional<double> rho;    // MC / analytic
  std::optional<double> delta;  // |MC - analytic| / |analytic|
  std::vector<double> checkpoints;
  std::vector<Vector> mode_probs;
  std::vector<std::string> warnings;
  /// Stage timings in milliseconds, only when requested.
  std::optional<std::vector<std::pair<std::string, double>>> timing_ms;
};

/// visited set, Riccati solve, initial moments and the analytic cost.
Report RunSolve(const ProblemFile& file, const RunOptions& options);

/// RunSolve plus moment-propagation cost and a Monte Carlo estimate.
Report RunValidate(const ProblemFile& file, const RunOptions& options);

struct VisitedListing {
  VisitedSet visited;
  std::vector<int> not_visited;
  std::vector<int> absorbing;
};

VisitedListing RunVisited(const ProblemFile& file);

struct ReproductionRow {
  std::string label;
  double computed = 0.0;
  std::optional<double> expected;
  double tolerance = 0.0;
  bool relative = false;
  /// Shown for context; never counts toward pass/fail.
  bool informational = false;
  bool pass = true;
  std::string note;
};

struct ReproductionTable {
  std::string id;
  std::string title;
  std::vector<ReproductionRow> rows;

  bool all_passed() const;
};

/// Runs the bundled example `id` (ex1, ex3 or ex4) for every horizon of its
/// reference table. Throws std::invalid_argument for an unknown id.
ReproductionTable RunReproduce(std::string_view id,
                               const std::filesystem::path& data_dir);

}  // namespace mjls
