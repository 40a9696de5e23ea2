#include "mjls/riccati.h"

#include <cmath>
#include <optional>
#include <sstream>

#include "mjls/chain.h"
#include "mjls/coefficients.h"

namespace mjls {

std::string_view MethodName(Method method) {
  return method == Method::kRk4 ? "rk4" : "backward_euler";
}

Method ParseMethod(std::string_view name) {
  if (name == "rk4") return Method::kRk4;
  if (name == "euler" || name == "backward_euler") {
    return Method::kBackwardEuler;
  }
  throw ValidationError("/solver/method",
                        "unknown method '" + std::string(name) +
                            "' (expected rk4 or backward_euler)");
}

namespace {

MatrixCollection Rhs(const Coefficients& coeffs, const Matrix& generator,
                     const MatrixCollection& y, const VisitedSet& z) {
  const int modes = y.num_modes();
  std::vector<Matrix> dynamics(modes);
  for (int i = 0; i < modes; ++i) dynamics[i] = coeffs.mode(i).a;
  MatrixCollection out =
      ApplyHRestricted(MatrixCollection(std::move(dynamics)), y, generator, z);
  for (int i : z.members()) {
    const ModeCoefficients& c = coeffs.mode(i);
    out[i] += c.q - y[i] * c.s * y[i];
  }
  return out;
}

GainCollection ComputeGains(const Coefficients& coeffs,
                            const MatrixCollection& y, const VisitedSet& z,
                            int input_dim) {
  const Matrix zero = Matrix::Zero(input_dim, y.dim());
  std::vector<Matrix> gains(y.num_modes(), zero);
  for (int i : z.members()) {
    // Subtracting from +0 keeps structurally zero entries at +0, not -0.
    gains[i] = zero - coeffs.mode(i).r_inv_bt * y[i];
  }
  return GainCollection(std::move(gains));
}

bool AllFinite(const MatrixCollection& y) {
  for (const Matrix& m : y.entries()) {
    if (!m.allFinite()) return false;
  }
  return true;
}

}  // namespace

MatrixCollection RiccatiRightHandSide(const ProblemInstance& problem, double t,
                                      const MatrixCollection& y,
                                      const VisitedSet& z) {
  CoefficientCache cache(problem);
  return Rhs(cache.At(t), problem.generator, y, z);
}

RiccatiSolution SolveRiccati(const ProblemInstance& problem,
                             const TimeGrid& grid, Method method) {
  return SolveRiccati(problem, grid, method,
                      VisitedStates(problem.generator, problem.phi));
}

RiccatiSolution SolveRiccati(const ProblemInstance& problem,
                             const TimeGrid& grid, Method method,
                             const VisitedSet& modes) {
  const int num_modes = problem.num_modes();
  const int n = problem.state_dim();
  if (modes.num_modes() != num_modes) {
    throw ShapeError("SolveRiccati: mode set is over " +
                     std::to_string(modes.num_modes()) + " modes, problem has " +
                     std::to_string(num_modes));
  }
  if (std::abs(grid.horizon() - problem.horizon) >
      1e-12 * std::max(1.0, problem.horizon)) {
    throw ShapeError("SolveRiccati: grid horizon differs from problem horizon");
  }
  CoefficientCache cache(problem);

  RiccatiSolution solution;
  solution.grid = grid;
  solution.visited = modes;
  solution.cost_to_go.resize(grid.num_nodes());
  solution.gains.resize(grid.num_nodes());

  MatrixCollection y = MatrixCollection::Zero(num_modes, n);
  for (int i : modes.members()) y[i] = problem.terminal_weight[i];
  y.Symmetrize();

  double min_eig = std::numeric_limits<double>::infinity();
  std::optional<double> first_violation;
  auto record = [&](int k) {
    const Coefficients& at_node = cache.At(grid.node(k));
    solution.gains[k] = ComputeGains(at_node, y, modes, problem.input_dim());
    for (int i : modes.members()) {
      const double lowest = MinSymmetricEigenvalue(y[i]);
      min_eig = std::min(min_eig, lowest);
      if (lowest < -tol::kPsd && !first_violation) {
        first_violation = grid.node(k);
        std::ostringstream msg;
        msg << "Y_" << i + 1 << "(" << grid.node(k)
            << ") has eigenvalue " << lowest << " below -" << tol::kPsd;
        solution.warnings.push_back(msg.str());
      }
    }
    solution.cost_to_go[k] = y;
  };

  const double h = grid.step();
  const Matrix& generator = problem.generator;
  record(grid.num_steps());
  for (int k = grid.num_steps() - 1; k >= 0; --k) {
    const double t_next = grid.node(k + 1);
    const double t = grid.node(k);
    if (method == Method::kBackwardEuler) {
      y += h * Rhs(cache.At(t_next), generator, y, modes);
    } else {
      const double t_mid = 0.5 * (t + t_next);
      const MatrixCollection k1 = Rhs(cache.At(t_next), generator, y, modes);
      const MatrixCollection k2 =
          Rhs(cache.At(t_mid), generator, y + (0.5 * h) * k1, modes);
      const MatrixCollection k3 =
          Rhs(cache.At(t_mid), generator, y + (0.5 * h) * k2, modes);
      const MatrixCollection k4 =
          Rhs(cache.At(t), generator, y + h * k3, modes);
      y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    y.Symmetrize();
    if (!AllFinite(y)) {
      std::ostringstream msg;
      msg << "Riccati integration diverged at t = " << t;
      throw NumericalError(msg.str(), t);
    }
    record(k);
  }
  solution.min_eigenvalue = modes.empty() ? 0.0 : min_eig;
  return solution;
}

Matrix GainAt(const RiccatiSolution& solution, double t, int mode) {
  if (mode < 0 || mode >= solution.visited.num_modes()) {
    throw std::out_of_range("mode " + std::to_string(mode + 1) +
                            " is not a mode of this problem");
  }
  const int k = solution.grid.NodeAtOrBefore(t);
  return solution.gains[k][mode];
}

double OptimalCost(const RiccatiSolution& solution,
                   const MatrixCollection& initial_moments) {
  CheckInSubspace(initial_moments, solution.visited, "OptimalCost");
  const MatrixCollection& y0 = solution.initial();
  double cost = 0.0;
  for (int i : solution.visited.members()) {
    cost += (y0[i] * initial_moments[i]).trace();
  }
  return cost;
}

}  // namespace mjls
