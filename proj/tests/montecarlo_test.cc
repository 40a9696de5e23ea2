#include "mjls/montecarlo.h"

#include <cmath>
#include <cstdlib>

#include <gtest/gtest.h>

#include "mjls/moments.h"
#include "test_support.h"

namespace mjls {
namespace {

using testing::Gen;
using testing::LoadExample;

// Lambda = 0, A = 0, B = 0, Q = 0, Q(T) = I, x0 = e_1.
ProblemInstance TerminalOnly(int modes) {
  ProblemInstance p;
  for (int i = 0; i < modes; ++i) {
    p.dynamics.emplace_back(Matrix::Zero(2, 2));
    p.input.emplace_back(Matrix::Zero(2, 1));
    p.state_weight.emplace_back(Matrix::Zero(2, 2));
    p.input_weight.emplace_back(Matrix::Identity(1, 1));
    p.terminal_weight.push_back(Matrix::Identity(2, 2));
  }
  p.generator = Matrix::Zero(modes, modes);
  p.phi = Vector::Constant(modes, 1.0 / modes);
  p.horizon = 1.0;
  p.initial_state.mean = Vector::Unit(2, 0);
  return p;
}

TEST(SummarizeTest, MeanStdErrorAndInterval) {
  const std::vector<double> xs = {1, 2, 3, 4};
  const CostEstimate est = Summarize(xs);
  EXPECT_DOUBLE_EQ(est.mean, 2.5);
  EXPECT_DOUBLE_EQ(est.std_error, std::sqrt((5.0 / 3.0) / 4.0));
  EXPECT_DOUBLE_EQ(est.ci_low, est.mean - 1.96 * est.std_error);
  EXPECT_DOUBLE_EQ(est.ci_high, est.mean + 1.96 * est.std_error);
  EXPECT_EQ(est.num_paths, 4);
}

TEST(SimulatePathTest, TerminalOnlyCostIsOne) {
  const ProblemInstance p = TerminalOnly(2);
  const RiccatiSolution sol = SolveRiccati(p, TimeGrid(1.0, 100));
  for (std::uint64_t s = 0; s < 10; ++s) {
    EXPECT_DOUBLE_EQ(SimulatePath(p, sol, s).cost, 1.0);
  }
}

TEST(SimulatePathTest, ZeroWeightsCostNothing) {
  ProblemInstance p = Gen(1).Problem(3, 2, 1, 1.0);
  for (int i = 0; i < 3; ++i) {
    p.state_weight[i] = MatrixSchedule(Matrix::Zero(2, 2));
    p.terminal_weight[i] = Matrix::Zero(2, 2);
  }
  const RiccatiSolution sol = SolveRiccati(p, TimeGrid(1.0, 200));
  for (std::uint64_t s = 0; s < 10; ++s) {
    EXPECT_EQ(SimulatePath(p, sol, s).cost, 0.0);
  }
}

TEST(SimulatePathTest, SingleModeMatchesDeterministicCost) {
  Gen gen(2);
  for (int trial = 0; trial < 10; ++trial) {
    const ProblemInstance p = gen.Problem(1, gen.Int(1, 3), 1, 1.0);
    const TimeGrid grid = TimeGrid::WithStep(1.0, 1e-3);
    const RiccatiSolution sol = SolveRiccati(p, grid);
    const double moment =
        DeterministicCost(PropagateMoments(p, sol.gains, grid), sol.gains, p);
    const double path = SimulatePath(p, sol, 7).cost;
    EXPECT_NEAR(path, moment, 1e-10 * (1 + moment)) << "trial " << trial;
  }
}

TEST(SimulatePathTest, DeterministicInSeed) {
  const ProblemInstance p = LoadExample("ex1.json").problem;
  const RiccatiSolution sol = SolveRiccati(p, TimeGrid(p.horizon, 1000));
  const std::vector<int> nodes = {0, 500, 1000};
  const PathOutcome a = SimulatePath(p, sol, 99, nodes);
  const PathOutcome b = SimulatePath(p, sol, 99, nodes);
  EXPECT_EQ(a.cost, b.cost);
  ASSERT_EQ(a.checkpoint_states.size(), 3u);
  for (int c = 0; c < 3; ++c) {
    EXPECT_EQ(a.checkpoint_states[c], b.checkpoint_states[c]);
    EXPECT_EQ(a.checkpoint_modes[c], b.checkpoint_modes[c]);
  }
  EXPECT_EQ(a.checkpoint_states[0], p.initial_state.mean);
}

TEST(SimulatePathTest, GaussianInitialStateMatchesMoments) {
  ProblemInstance p = TerminalOnly(2);
  p.phi << 0.25, 0.75;
  Matrix cov(2, 2);
  cov << 2.0, 0.5, 0.5, 1.0;
  p.initial_state.mean << 1.0, -1.0;
  p.initial_state.covariances = {cov, Matrix::Zero(2, 2)};
  const RiccatiSolution sol = SolveRiccati(p, TimeGrid(1.0, 10));
  MonteCarloOptions options;
  options.num_paths = 20000;
  options.checkpoint_nodes = {0};
  const MonteCarloResult mc = RunMonteCarlo(p, sol, options);
  const double oracle = 0.25 * (cov.trace() + 2.0) + 0.75 * 2.0;
  EXPECT_NEAR(mc.mean_square_norm[0].mean, oracle,
              3 * mc.mean_square_norm[0].std_error);
}

TEST(EstimateCostTest, DeterministicInstanceHasNoSpread) {
  const ProblemInstance p = TerminalOnly(1);
  const RiccatiSolution sol = SolveRiccati(p, TimeGrid(1.0, 100));
  const CostEstimate est = EstimateCost(p, sol, 50, 3);
  EXPECT_EQ(est.std_error, 0.0);
  EXPECT_EQ(est.mean, SimulatePath(p, sol, 0).cost);
  EXPECT_THROW(EstimateCost(p, sol, 1, 3), ValidationError);
}

TEST(RunMonteCarloTest, BitIdenticalAcrossThreadCounts) {
  const ProblemInstance p = LoadExample("ex1.json").problem;
  const RiccatiSolution sol = SolveRiccati(p, TimeGrid(p.horizon, 1000));
  MonteCarloOptions options;
  options.num_paths = 600;
  options.checkpoint_nodes = {0, 250, 1000};
  options.max_threads = 1;
  const MonteCarloResult serial = RunMonteCarlo(p, sol, options);
  for (int threads : {2, 3, 8}) {
    options.max_threads = threads;
    const MonteCarloResult parallel = RunMonteCarlo(p, sol, options);
    EXPECT_EQ(parallel.cost.mean, serial.cost.mean);
    EXPECT_EQ(parallel.cost.std_error, serial.cost.std_error);
    for (int c = 0; c < 3; ++c) {
      EXPECT_EQ(parallel.mean_square_norm[c].mean, serial.mean_square_norm[c].mean);
      EXPECT_EQ(parallel.mode_frequency[c], serial.mode_frequency[c]);
    }
  }
}

TEST(RunMonteCarloTest, ThreadCountResolution) {
  EXPECT_EQ(ResolveThreadCount(3, 100), 3);
  EXPECT_EQ(ResolveThreadCount(8, 2), 2);
  ::setenv("MJLS_LQR_THREADS", "2", 1);
  EXPECT_EQ(ResolveThreadCount(0, 100), 2);
  ::unsetenv("MJLS_LQR_THREADS");
  EXPECT_GE(ResolveThreadCount(0, 100), 1);
}

TEST(RunMonteCarloTest, ModesSeenStayInVisitedSet) {
  const ProblemInstance p = LoadExample("ex3_phi1.json").problem;
  const RiccatiSolution sol = SolveRiccati(p, TimeGrid(p.horizon, 500));
  MonteCarloOptions options;
  options.num_paths = 2000;
  const MonteCarloResult mc = RunMonteCarlo(p, sol, options);
  for (int i = 0; i < p.num_modes(); ++i) {
    if (mc.modes_seen[i]) EXPECT_TRUE(sol.visited.contains(i));
  }
  EXPECT_TRUE(mc.modes_seen[0]);
  EXPECT_TRUE(mc.modes_seen[1]);
}

TEST(RunMonteCarloTest, StdErrorHalvesWithFourTimesThePaths) {
  // The two-class example gives identical paths (zero spread), so the
  // satellite example carries this check.
  const ProblemInstance p = LoadExample("ex4.json").problem;
  const RiccatiSolution sol = SolveRiccati(p, TimeGrid::WithStep(p.horizon, 1e-3));
  const CostEstimate small = EstimateCost(p, sol, 2500, 42);
  const CostEstimate large = EstimateCost(p, sol, 10000, 42);
  EXPECT_NEAR(small.std_error / large.std_error, 2.0, 0.4);
}

struct Reference {
  ProblemInstance problem;
  RiccatiSolution solution;
  MomentTrajectory moments;
  double analytic;
};

Reference Solve(const char* name) {
  const ProblemInstance p = LoadExample(name).problem;
  const TimeGrid grid = TimeGrid::WithStep(p.horizon, 1e-3);
  RiccatiSolution sol = SolveRiccati(p, grid);
  MomentTrajectory traj = PropagateMoments(p, sol.gains, grid);
  const double analytic = OptimalCost(sol, InitialMoments(p, sol.visited));
  return {p, std::move(sol), std::move(traj), analytic};
}

// |a - b| <= 3 se, plus the O(step^2) discretization bias of the held-gain
// closed loop, which is all that is left when every path is identical.
void ExpectWithinThreeSe(double estimate, double se, double target,
                         const std::string& what) {
  const double bias = 10 * 1e-3 * 1e-3 * std::abs(target);
  EXPECT_LE(std::abs(estimate - target), 3 * se + bias)
      << what << ": " << estimate << " +/- " << se << " vs " << target;
}

TEST(UnbiasednessTest, MatchesAnalyticCostAndMoments) {
  for (const char* name : {"ex3_phi1.json", "ex3_phi2.json", "ex4.json"}) {
    const Reference ref = Solve(name);
    const TimeGrid& grid = ref.solution.grid;
    MonteCarloOptions options;
    options.num_paths = 10000;
    for (int c = 0; c < 5; ++c) {
      options.checkpoint_nodes.push_back(c * grid.num_steps() / 4);
    }
    const MonteCarloResult mc = RunMonteCarlo(ref.problem, ref.solution, options);
    ExpectWithinThreeSe(mc.cost.mean, mc.cost.std_error, ref.analytic, name);
    for (int c = 0; c < 5; ++c) {
      const int k = options.checkpoint_nodes[c];
      ExpectWithinThreeSe(mc.mean_square_norm[c].mean,
                          mc.mean_square_norm[c].std_error,
                          ref.moments.MeanSquareNorm(k),
                          std::string(name) + " E|x|^2 at node " +
                              std::to_string(k));
    }
  }
}

TEST(UnbiasednessTest, SatelliteCostAtReferencePrecision) {
  const Reference ref = Solve("ex4.json");
  const CostEstimate est = EstimateCost(ref.problem, ref.solution, 10000, 42);
  EXPECT_NEAR(est.mean, 0.07, 0.005);
  ExpectWithinThreeSe(est.mean, est.std_error, ref.analytic, "ex4");
}

}  // namespace
}  // namespace mjls
