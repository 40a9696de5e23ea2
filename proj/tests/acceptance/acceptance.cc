// Acceptance suite. Prints one PASS/FAIL line per criterion.
//
//   acceptance            run every criterion
//   acceptance 3 7        run criteria 3 and 7
//
// Exit status is 0 only if every selected criterion passes.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mjls/chain.h"
#include "mjls/moments.h"
#include "mjls/montecarlo.h"
#include "mjls/problem_io.h"
#include "mjls/riccati.h"

namespace mjls {
namespace {

// Tolerances, fixed here and nowhere else.
constexpr double kStep = 1e-3;
constexpr double kTwoDecimals = 0.005;
constexpr double kSeconds1 = 1.0;
constexpr double kSeconds2 = 5.0;
constexpr double kEulerMatrixRel = 0.01;
constexpr double kRk4MatrixRel = 0.005;
constexpr double kMcRel = 0.06;
constexpr std::uint64_t kMcSeed = 42;
constexpr int kMcPaths = 10000;
constexpr double kSeconds4 = 60.0;
constexpr double kCostIdentityRel = 1e-3;
constexpr double kReducedFullMax = 1e-8;
constexpr int kOperatorInstances = 1000;
constexpr double kAdjointRel = 1e-10;
constexpr double kLongHorizonRel = 1e-3;
constexpr double kOrderBand = 0.3;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void Check(bool ok) { pass = pass && ok; }
};

struct Criterion {
  int id;
  const char* title;
  std::function<void(Outcome&)> run;
};

ProblemFile Load(const std::string& name) {
  return LoadProblemFile(std::string(MJLS_DATA_DIR) + "/" + name);
}

double Seconds(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

double AnalyticCost(const ProblemInstance& p, Method method = Method::kRk4,
                    double step = kStep) {
  const RiccatiSolution sol =
      SolveRiccati(p, TimeGrid::WithStep(p.horizon, step), method);
  return OptimalCost(sol, InitialMoments(p, sol.visited));
}

void TwoClassCosts(Outcome& out) {
  struct Row {
    const char* file;
    double horizon;
    double expected;
  };
  const Row rows[] = {{"ex3_phi1.json", 0.5, 0.40}, {"ex3_phi2.json", 0.5, 2.45},
                      {"ex3_phi1.json", 1.0, 0.33}, {"ex3_phi2.json", 1.0, 1.95}};
  for (const Row& row : rows) {
    ProblemInstance p = Load(row.file).problem;
    p.horizon = row.horizon;
    const auto start = std::chrono::steady_clock::now();
    const double cost = AnalyticCost(p);
    const double elapsed = Seconds(start);
    const bool ok = std::abs(cost - row.expected) <= kTwoDecimals &&
                    elapsed < kSeconds1;
    out.Check(ok);
    out.detail << "  " << row.file << " T=" << row.horizon << ": J*="
               << std::setprecision(6) << cost << " expected " << row.expected
               << " +/-" << kTwoDecimals << " (" << std::setprecision(3)
               << elapsed << " s)" << (ok ? "" : "  <-- miss") << "\n";
  }
}

void SatelliteCosts(Outcome& out) {
  struct Row {
    double horizon;
    double cost;
    double failure;
  };
  for (const Row& row : {Row{5, 0.07, 0.94}, Row{10, 0.12, 1.00},
                         Row{30, 0.32, 1.00}}) {
    ProblemInstance p = Load("ex4.json").problem;
    p.horizon = row.horizon;
    const auto start = std::chrono::steady_clock::now();
    const TimeGrid grid = TimeGrid::WithStep(p.horizon, kStep);
    const RiccatiSolution sol = SolveRiccati(p, grid);
    const double cost = OptimalCost(sol, InitialMoments(p, sol.visited));
    const double failure =
        ComputeModeProbabilities(p.generator, p.phi, grid).values.back()(3);
    const double elapsed = Seconds(start);
    const bool ok = std::abs(cost - row.cost) <= kTwoDecimals &&
                    std::abs(failure - row.failure) <= kTwoDecimals &&
                    elapsed < kSeconds2;
    out.Check(ok);
    out.detail << "  T=" << row.horizon << ": J*=" << std::setprecision(6)
               << cost << " (expected " << row.cost << "), p_4(T)=" << failure
               << " (expected " << row.failure << "), " << std::setprecision(3)
               << elapsed << " s" << (ok ? "" : "  <-- miss") << "\n";
  }
}

void ThreeModeMatrices(Outcome& out) {
  // Reference Y_i(0) entries (1,1), (1,2), (2,2).
  const double reference[3][3] = {{29.5611, 7.0576, 6.4574},
                                  {44.0284, -11.3418, 22.4609},
                                  {22.0084, -4.8804, 7.5243}};
  const ProblemInstance p = Load("ex1.json").problem;
  for (auto [method, tolerance] :
       {std::pair{Method::kBackwardEuler, kEulerMatrixRel},
        std::pair{Method::kRk4, kRk4MatrixRel}}) {
    const RiccatiSolution sol =
        SolveRiccati(p, TimeGrid::WithStep(p.horizon, kStep), method);
    double worst = 0.0;
    int within = 0;
    for (int i = 0; i < 3; ++i) {
      const Matrix& y = sol.initial()[i];
      const double computed[3] = {y(0, 0), y(0, 1), y(1, 1)};
      for (int e = 0; e < 3; ++e) {
        const double rel =
            std::abs(computed[e] - reference[i][e]) / std::abs(reference[i][e]);
        worst = std::max(worst, rel);
        if (rel <= tolerance) ++within;
      }
    }
    out.Check(within == 9);
    out.detail << "  " << MethodName(method) << ": " << within
               << "/9 entries within " << tolerance * 100
               << "%, worst relative error " << std::setprecision(3) << worst
               << "; Y_1(0) = [" << std::setprecision(6) << sol.initial()[0](0, 0)
               << ", " << sol.initial()[0](0, 1) << "; " << sol.initial()[0](1, 1)
               << "]\n";
  }
}

void ThreeModeMonteCarlo(Outcome& out) {
  for (double horizon : {5.0, 10.0}) {
    ProblemInstance p = Load("ex1.json").problem;
    p.phi = Vector::Constant(3, 1.0 / 3.0);
    p.horizon = horizon;
    const auto start = std::chrono::steady_clock::now();
    const RiccatiSolution sol =
        SolveRiccati(p, TimeGrid::WithStep(horizon, kStep));
    const double analytic = OptimalCost(sol, InitialMoments(p, sol.visited));
    const CostEstimate mc = EstimateCost(p, sol, kMcPaths, kMcSeed);
    const double elapsed = Seconds(start);
    const double delta = std::abs(mc.mean - analytic) / analytic;
    const bool ok = delta <= kMcRel && elapsed < kSeconds4;
    out.Check(ok);
    out.detail << "  T=" << horizon << ": analytic " << std::setprecision(6)
               << analytic << ", MC " << mc.mean << " +/- " << mc.std_error
               << ", delta " << std::setprecision(3) << delta << " (limit "
               << kMcRel << "), " << elapsed << " s"
               << (ok ? "" : "  <-- miss") << "\n";
  }
}

void CostIdentity(Outcome& out) {
  for (const char* name :
       {"ex1.json", "ex3_phi1.json", "ex3_phi2.json", "ex4.json"}) {
    const ProblemInstance p = Load(name).problem;
    const TimeGrid grid = TimeGrid::WithStep(p.horizon, kStep);
    const RiccatiSolution sol = SolveRiccati(p, grid);
    const double analytic = OptimalCost(sol, InitialMoments(p, sol.visited));
    const double moment =
        DeterministicCost(PropagateMoments(p, sol.gains, grid), sol.gains, p);
    const double rel = std::abs(moment - analytic) / std::max(analytic, 1e-12);
    out.Check(rel <= kCostIdentityRel);
    out.detail << "  " << name << ": analytic " << std::setprecision(9)
               << analytic << ", moments " << moment << ", relative gap "
               << std::setprecision(3) << rel << "\n";
  }
}

void ReducedFull(Outcome& out) {
  for (const char* name : {"ex3_phi1.json", "ex3_phi2.json", "ex4.json"}) {
    const ProblemInstance p = Load(name).problem;
    const TimeGrid grid = TimeGrid::WithStep(p.horizon, kStep);
    const VisitedSet all = VisitedSet::All(p.num_modes());
    const RiccatiSolution reduced = SolveRiccati(p, grid);
    const RiccatiSolution full = SolveRiccati(p, grid, Method::kRk4, all);
    const MomentTrajectory reduced_x = PropagateMoments(p, reduced.gains, grid);
    const MomentTrajectory full_x =
        PropagateMoments(p, full.gains, grid, Method::kRk4, all);
    double y_gap = 0.0;
    double x_gap = 0.0;
    for (int k = 0; k < grid.num_nodes(); ++k) {
      y_gap = std::max(y_gap, Project(full.cost_to_go[k], reduced.visited)
                                  .MaxAbsDiff(reduced.cost_to_go[k]));
      x_gap = std::max(x_gap, Project(full_x.second_moments[k], reduced.visited)
                                  .MaxAbsDiff(reduced_x.second_moments[k]));
    }
    out.Check(y_gap <= kReducedFullMax && x_gap <= kReducedFullMax);
    out.detail << "  " << name << ": max |Y gap| " << std::setprecision(3)
               << y_gap << ", max |X gap| " << x_gap << "\n";
  }
}

void OperatorSuite(Outcome& out) {
  std::mt19937_64 rng(20240607);
  auto uniform = [&](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };
  auto integer = [&](int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
  };
  auto collection = [&](int modes, int n) {
    std::vector<Matrix> m(modes, Matrix(n, n));
    for (Matrix& x : m) x = x.unaryExpr([&](double) { return uniform(-1, 1); });
    return MatrixCollection(m);
  };
  double worst_adjoint = 0.0;
  int projection_failures = 0;
  int subspace_failures = 0;
  for (int trial = 0; trial < kOperatorInstances; ++trial) {
    const int modes = integer(1, 6);
    const int n = integer(1, 5);
    Matrix g = Matrix::Zero(modes, modes);
    for (int i = 0; i < modes; ++i) {
      for (int j = 0; j < modes; ++j) {
        if (i != j && uniform(0, 1) < 0.6) g(i, j) = uniform(0, 3);
      }
      g(i, i) = -g.row(i).sum();
    }
    const MatrixCollection u = collection(modes, n);
    const MatrixCollection q = collection(modes, n);
    const MatrixCollection p = collection(modes, n);
    const double lhs = InnerProduct(ApplyK(u, q, g), p);
    const double rhs = InnerProduct(q, ApplyH(u, p, g));
    worst_adjoint = std::max(
        worst_adjoint,
        std::abs(lhs - rhs) / std::max({1.0, std::abs(lhs), std::abs(rhs)}));

    std::vector<int> members;
    for (int i = 0; i < modes; ++i) {
      if (uniform(0, 1) < 0.5) members.push_back(i);
    }
    const VisitedSet z(modes, members);
    const MatrixCollection pu = Project(u, z);
    if (Project(pu, z).MaxAbsDiff(pu) != 0.0 ||
        InnerProduct(Project(u, z), p) != InnerProduct(u, Project(p, z))) {
      ++projection_failures;
    }
    const MatrixCollection k =
        ApplyKRestricted(u, Project(q, z), g, z);
    const MatrixCollection h =
        ApplyHRestricted(u, Project(p, z), g, z);
    for (int i : z.Complement()) {
      if (k[i].cwiseAbs().maxCoeff() != 0.0 || h[i].cwiseAbs().maxCoeff() != 0.0) {
        ++subspace_failures;
      }
    }
  }
  out.Check(worst_adjoint <= kAdjointRel && projection_failures == 0 &&
            subspace_failures == 0);
  out.detail << "  " << kOperatorInstances
             << " instances: worst adjointness gap " << std::setprecision(3)
             << worst_adjoint << ", projection failures " << projection_failures
             << ", nonzero off-subspace outputs " << subspace_failures << "\n";
}

// Single-mode system: the third mode of the three-mode example with unit
// weights.
ProblemInstance SingleModeSystem(double horizon) {
  ProblemInstance p;
  Matrix a(2, 2), b(2, 1);
  a << 0, -1.7, 1.4, -0.5;
  b << 0, -0.5;
  p.dynamics = {MatrixSchedule(a)};
  p.input = {MatrixSchedule(b)};
  p.state_weight = {MatrixSchedule(Matrix::Identity(2, 2))};
  p.input_weight = {MatrixSchedule(Matrix::Identity(1, 1))};
  p.terminal_weight = {Matrix::Zero(2, 2)};
  p.generator = Matrix::Zero(1, 1);
  p.phi = Vector::Ones(1);
  p.horizon = horizon;
  p.initial_state.mean = Vector(2);
  p.initial_state.mean << 1, -1;
  return p;
}

void LongHorizon(Outcome& out) {
  const double j20 = AnalyticCost(SingleModeSystem(20.0));
  const double j40 = AnalyticCost(SingleModeSystem(40.0));
  const double rel = std::abs(j20 - j40) / j40;
  out.Check(rel <= kLongHorizonRel);
  out.detail << "  J*(T=20) = " << std::setprecision(10) << j20
             << ", J*(T=40) = " << j40 << ", relative gap "
             << std::setprecision(3) << rel << "\n";
}

void IntegratorOrder(Outcome& out) {
  const ProblemInstance p = Load("ex3_phi2.json").problem;
  const double coarse = 0.05;
  auto y0 = [&](Method m, double step) {
    return SolveRiccati(p, TimeGrid::WithStep(p.horizon, step), m).initial();
  };
  for (auto [method, expected] : {std::pair{Method::kBackwardEuler, 2.0},
                                  std::pair{Method::kRk4, 16.0}}) {
    const MatrixCollection reference = y0(method, coarse / 100);
    const double e1 = y0(method, coarse).MaxAbsDiff(reference);
    const double e2 = y0(method, coarse / 2).MaxAbsDiff(reference);
    const double ratio = e1 / e2;
    out.Check(std::abs(ratio - expected) <= kOrderBand * expected);
    out.detail << "  " << MethodName(method) << ": errors " << std::setprecision(3)
               << e1 << " -> " << e2 << ", ratio " << ratio << " (expected "
               << expected << " +/-" << kOrderBand * 100 << "%)\n";
  }
}

std::string Capture(const std::string& command, int& status) {
  FILE* pipe = ::popen(command.c_str(), "r");
  std::string text;
  if (!pipe) {
    status = -1;
    return text;
  }
  char buffer[4096];
  std::size_t got;
  while ((got = std::fread(buffer, 1, sizeof buffer, pipe)) > 0) {
    text.append(buffer, got);
  }
  status = ::pclose(pipe);
  return text;
}

void Determinism(Outcome& out) {
  const std::string base = "'" + std::string(MJLS_CLI_PATH) + "' validate '" +
                           std::string(MJLS_DATA_DIR) +
                           "/ex1.json' --seed 42 --format json";
  int s1 = 0;
  int s2 = 0;
  const std::string one = Capture("MJLS_LQR_THREADS=1 " + base, s1);
  const std::string four = Capture("MJLS_LQR_THREADS=4 " + base, s2);
  const bool ok = s1 == 0 && s2 == 0 && !one.empty() && one == four;
  out.Check(ok);
  out.detail << "  1 thread vs 4 threads: " << one.size() << " and "
             << four.size() << " bytes, " << (one == four ? "identical" : "DIFFERENT")
             << "\n";
}

const std::vector<Criterion>& Criteria() {
  static const std::vector<Criterion> all = {
      {1, "two-class example costs at 2 d.p.", TwoClassCosts},
      {2, "satellite example costs and failure probabilities", SatelliteCosts},
      {3, "three-mode example Y_i(0) entries", ThreeModeMatrices},
      {4, "three-mode Monte Carlo within 6% of J* (uniform phi)",
       ThreeModeMonteCarlo},
      {5, "moment cost equals <Y(0);X(0)> on bundled examples", CostIdentity},
      {6, "reduced and full-order systems coincide", ReducedFull},
      {7, "operator adjointness, projection and subspace properties",
       OperatorSuite},
      {8, "single-mode cost converges with the horizon", LongHorizon},
      {9, "integrator convergence order by grid halving", IntegratorOrder},
      {10, "validate reports are byte-identical across thread counts",
       Determinism},
  };
  return all;
}

}  // namespace
}  // namespace mjls

int main(int argc, char** argv) {
  std::vector<int> selected;
  for (int a = 1; a < argc; ++a) selected.push_back(std::atoi(argv[a]));
  int failures = 0;
  for (const auto& c : mjls::Criteria()) {
    if (!selected.empty() &&
        std::find(selected.begin(), selected.end(), c.id) == selected.end()) {
      continue;
    }
    mjls::Outcome out;
    try {
      c.run(out);
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail << "  exception: " << e.what() << "\n";
    }
    if (!out.pass) ++failures;
    std::cout << (out.pass ? "PASS" : "FAIL") << "  AC" << c.id << "  "
              << c.title << "\n"
              << out.detail.str() << std::flush;
  }
  return failures == 0 ? 0 : 1;
}
