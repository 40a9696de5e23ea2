#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "mjls/model.h"

namespace mjls {

/// Time-stepping scheme for the matrix ODEs. Backward Euler here is the
/// explicit Euler step taken backward in time from the terminal condition.
enum class Method { kBackwardEuler, kRk4 };

std::string_view MethodName(Method method);
/// Accepts "rk4", "euler" and "backward_euler".
Method ParseMethod(std::string_view name);

/// Coupled Riccati trajectory Y(t) and gains L(t) sampled on a grid.
struct RiccatiSolution {
  TimeGrid grid{1.0, 1};
  VisitedSet visited;
  std::vector<MatrixCollection> cost_to_go;  // Y at each node
  std::vector<GainCollection> gains;         // L at each node
  /// Smallest eigenvalue of Y_i(t_k) over visited modes and all nodes.
  double min_eigenvalue = 0.0;
  /// PSD violations and similar non-fatal findings.
  std::vector<std::string> warnings;

  const MatrixCollection& initial() const { return cost_to_go.front(); }
};

/// Right-hand side F of -dY/dt = F(t, Y) for the modes in z:
///   F_i = A_i' Y_i + Y_i A_i + sum_{j in z} lambda_ij Y_j + Q_i
///         - Y_i B_i R_i^{-1} B_i' Y_i,
/// and zero for modes outside z.
MatrixCollection RiccatiRightHandSide(const ProblemInstance& problem, double t,
                                      const MatrixCollection& y,
                                      const VisitedSet& z);

/// Integrates the coupled Riccati equations backward from Y_i(T) = Q_i(T) on
/// the visited set of (generator, phi); Y and L vanish off that set.
/// Throws NumericalError if R_i is not positive definite or the integration
/// produces non-finite values.
RiccatiSolution SolveRiccati(const ProblemInstance& problem,
                             const TimeGrid& grid,
                             Method method = Method::kRk4);

/// Same, over an explicit mode set. VisitedSet::All gives the full-order
/// system.
RiccatiSolution SolveRiccati(const ProblemInstance& problem,
                             const TimeGrid& grid, Method method,
                             const VisitedSet& modes);

/// Gain of `mode` (0-based) at the last grid node not after t. Throws
/// std::out_of_range for t outside [0, T] or an unknown mode.
Matrix GainAt(const RiccatiSolution& solution, double t, int mode);

/// sum_{i in Z} tr(Y_i(0) X_i(0)). Throws SubspaceError if x0 does not
/// vanish off the visited set.
double OptimalCost(const RiccatiSolution& solution,
                   const MatrixCollection& initial_moments);

}  // namespace mjls
