#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mjls/chain.h"
#include "mjls/model.h"
#include "mjls/riccati.h"

namespace mjls {

struct CostEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  int num_paths = 0;
  double ci_low = 0.0;   // mean - 1.96 std_error
  double ci_high = 0.0;  // mean + 1.96 std_error
};

/// Mean and standard error of a sample, reduced in index order.
CostEstimate Summarize(std::span<const double> samples);

struct PathOutcome {
  double cost = 0.0;
  /// State at each requested checkpoint node.
  std::vector<Vector> checkpoint_states;
  /// Mode occupied at each requested checkpoint node.
  std::vector<int> checkpoint_modes;
  JumpPath path;
};

/// Closed-loop simulator of x' = (A_i + B_i L_i(t)) x under a fixed gain
/// schedule. Jumps are snapped to the last grid node not after the jump
/// time, and each grid step is an RK4 step with the node's gain held.
class ClosedLoopSimulator {
 public:
  ClosedLoopSimulator(const ProblemInstance& problem,
                      const RiccatiSolution& solution);

  /// Fully determined by path_seed. Throws NumericalError if the state
  /// becomes non-finite.
  PathOutcome Simulate(std::uint64_t path_seed,
                       std::span<const int> checkpoint_nodes = {}) const;

  const TimeGrid& grid() const { return grid_; }

 private:
  // Column-major n x n blocks indexed by (step, mode).
  const double* transition(int k, int mode) const;
  // Q + L_k' R L_k over step k, evaluated at its start (end = 0) or end.
  const double* running_weight(int k, int mode, int end) const;

  const ProblemInstance& problem_;
  TimeGrid grid_;
  int num_modes_;
  int n_;
  std::vector<double> transitions_;
  std::vector<double> running_weights_;
  std::vector<Matrix> covariance_roots_;
};

PathOutcome SimulatePath(const ProblemInstance& problem,
                         const RiccatiSolution& solution,
                         std::uint64_t path_seed,
                         std::span<const int> checkpoint_nodes = {});

struct MonteCarloOptions {
  int num_paths = 10000;
  std::uint64_t master_seed = 42;
  /// 0 uses MJLS_LQR_THREADS or the hardware concurrency.
  int max_threads = 0;
  std::vector<int> checkpoint_nodes;
};

struct MonteCarloResult {
  CostEstimate cost;
  /// Per checkpoint: sample mean and standard error of |x(t)|^2.
  std::vector<CostEstimate> mean_square_norm;
  /// Per checkpoint: fraction of paths in each mode.
  std::vector<Vector> mode_frequency;
  /// Modes occupied by any sampled path at any time.
  std::vector<bool> modes_seen;
};

MonteCarloResult RunMonteCarlo(const ProblemInstance& problem,
                               const RiccatiSolution& solution,
                               const MonteCarloOptions& options);

CostEstimate EstimateCost(const ProblemInstance& problem,
                          const RiccatiSolution& solution, int num_paths,
                          std::uint64_t master_seed);

/// Worker count: `requested` if positive, else MJLS_LQR_THREADS if set, else
/// the hardware concurrency; never more than `work_items`.
int ResolveThreadCount(int requested, int work_items);

}  // namespace mjls
