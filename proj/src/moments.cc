#include "mjls/moments.h"

#include <cmath>
#include <sstream>

#include "mjls/chain.h"
#include "mjls/coefficients.h"

namespace mjls {

namespace {

void CheckGains(std::span<const GainCollection> gains, const TimeGrid& grid,
                const ProblemInstance& problem, const char* op) {
  if (static_cast<int>(gains.size()) != grid.num_nodes()) {
    std::ostringstream msg;
    msg << op << ": " << gains.size() << " gain collections for a grid of "
        << grid.num_nodes() << " nodes";
    throw ShapeError(msg.str());
  }
  for (const GainCollection& g : gains) {
    if (g.num_modes() != problem.num_modes() ||
        g.rows() != problem.input_dim() || g.cols() != problem.state_dim()) {
      throw ShapeError(std::string(op) + ": gain collection has wrong shape");
    }
  }
}

MatrixCollection ClosedLoop(const Coefficients& coeffs,
                            const GainCollection& gains) {
  std::vector<Matrix> closed(coeffs.num_modes());
  for (int i = 0; i < coeffs.num_modes(); ++i) {
    closed[i] = coeffs.mode(i).a + coeffs.mode(i).b * gains[i];
  }
  return MatrixCollection(std::move(closed));
}

}  // namespace

double MomentTrajectory::MeanSquareNorm(int k) const {
  double total = 0.0;
  for (const Matrix& m : second_moments[k].entries()) total += m.trace();
  return total;
}

MatrixCollection InitialMoments(const ProblemInstance& problem) {
  return InitialMoments(problem,
                        VisitedStates(problem.generator, problem.phi));
}

MatrixCollection InitialMoments(const ProblemInstance& problem,
                                const VisitedSet& modes) {
  const int n = problem.state_dim();
  const InitialState& init = problem.initial_state;
  const Matrix outer = init.mean * init.mean.transpose();
  MatrixCollection x0 = MatrixCollection::Zero(problem.num_modes(), n);
  for (int i : modes.members()) {
    Matrix second = outer;
    if (!init.is_deterministic() && init.covariances[i]) {
      const Matrix& cov = *init.covariances[i];
      if (MinSymmetricEigenvalue(cov) < -tol::kPsd) {
        throw ValidationError(
            "/initial_state/covariances/" + std::to_string(i),
            "not positive semidefinite");
      }
      second += cov;
    }
    x0[i] = problem.phi(i) * second;
  }
  return x0;
}

MomentTrajectory PropagateMoments(const ProblemInstance& problem,
                                  std::span<const GainCollection> gains,
                                  const TimeGrid& grid, Method method) {
  return PropagateMoments(problem, gains, grid, method,
                          VisitedStates(problem.generator, problem.phi));
}

MomentTrajectory PropagateMoments(const ProblemInstance& problem,
                                  std::span<const GainCollection> gains,
                                  const TimeGrid& grid, Method method,
                                  const VisitedSet& modes) {
  CheckGains(gains, grid, problem, "PropagateMoments");
  CoefficientCache cache(problem);
  const Matrix& generator = problem.generator;

  MomentTrajectory out;
  out.grid = grid;
  out.visited = modes;
  out.second_moments.reserve(grid.num_nodes());

  MatrixCollection x = InitialMoments(problem, modes);
  double min_eig = x.MinEigenvalue();
  out.second_moments.push_back(x);
  const double h = grid.step();
  for (int k = 0; k < grid.num_steps(); ++k) {
    const double t = grid.node(k);
    const double t_next = grid.node(k + 1);
    const GainCollection& gain = gains[k];
    auto rhs = [&](double s, const MatrixCollection& state) {
      return ApplyKRestricted(ClosedLoop(cache.At(s), gain), state, generator,
                              modes);
    };
    if (method == Method::kBackwardEuler) {
      x += h * rhs(t, x);
    } else {
      const double t_mid = 0.5 * (t + t_next);
      const MatrixCollection k1 = rhs(t, x);
      const MatrixCollection k2 = rhs(t_mid, x + (0.5 * h) * k1);
      const MatrixCollection k3 = rhs(t_mid, x + (0.5 * h) * k2);
      const MatrixCollection k4 = rhs(t_next, x + h * k3);
      x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    x.Symmetrize();
    for (const Matrix& m : x.entries()) {
      if (!m.allFinite()) {
        std::ostringstream msg;
        msg << "moment propagation diverged at t = " << t_next;
        throw NumericalError(msg.str(), t_next);
      }
    }
    min_eig = std::min(min_eig, x.MinEigenvalue());
    out.second_moments.push_back(x);
  }
  out.min_eigenvalue = min_eig;
  return out;
}

double DeterministicCost(const MomentTrajectory& trajectory,
                         std::span<const GainCollection> gains,
                         const ProblemInstance& problem) {
  const TimeGrid& grid = trajectory.grid;
  CheckGains(gains, grid, problem, "DeterministicCost");
  if (static_cast<int>(trajectory.second_moments.size()) != grid.num_nodes()) {
    throw ShapeError("DeterministicCost: trajectory does not cover its grid");
  }
  CoefficientCache cache(problem);
  // <Q + L' R L; X> at node `at` with the gain of node `held`. Over a step the
  // gain of its left node is held, so both trapezoid ends use that gain.
  auto running = [&](int at, int held) {
    const Coefficients& c = cache.At(grid.node(at));
    const MatrixCollection& x = trajectory.second_moments[at];
    double value = 0.0;
    for (int i : trajectory.visited.members()) {
      const Matrix& l = gains[held][i];
      const Matrix weight = c.mode(i).q + l.transpose() * c.mode(i).r * l;
      value += weight.cwiseProduct(x[i]).sum();
    }
    return value;
  };
  double integral = 0.0;
  for (int k = 0; k < grid.num_steps(); ++k) {
    integral += 0.5 * grid.step() * (running(k, k) + running(k + 1, k));
  }
  const MatrixCollection& terminal = trajectory.second_moments.back();
  double terminal_cost = 0.0;
  for (int i : trajectory.visited.members()) {
    terminal_cost += problem.terminal_weight[i].cwiseProduct(terminal[i]).sum();
  }
  return integral + terminal_cost;
}

}  // namespace mjls
