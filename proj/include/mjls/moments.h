#pragma once

#include <span>
#include <vector>

#include "mjls/model.h"
#include "mjls/riccati.h"

namespace mjls {

/// Per-mode second moments X_i(t) = E[x(t) x(t)' 1{theta(t) = i}] on a grid.
struct MomentTrajectory {
  TimeGrid grid{1.0, 1};
  VisitedSet visited;
  std::vector<MatrixCollection> second_moments;
  double min_eigenvalue = 0.0;

  /// E|x(t_k)|^2 = sum_i tr X_i(t_k).
  double MeanSquareNorm(int k) const;
};

/// X_i(0) = phi_i x0 x0' for a deterministic x0, or phi_i (Sigma_i + m m')
/// for a Gaussian initial state; zero off the visited set.
MatrixCollection InitialMoments(const ProblemInstance& problem);
MatrixCollection InitialMoments(const ProblemInstance& problem,
                                const VisitedSet& modes);

/// Integrates dX/dt = K^Z_{A + B L}(X) forward from InitialMoments. The gain
/// at node k is held over [t_k, t_{k+1}]. `gains` must have one entry per
/// grid node.
MomentTrajectory PropagateMoments(const ProblemInstance& problem,
                                  std::span<const GainCollection> gains,
                                  const TimeGrid& grid,
                                  Method method = Method::kRk4);
MomentTrajectory PropagateMoments(const ProblemInstance& problem,
                                  std::span<const GainCollection> gains,
                                  const TimeGrid& grid, Method method,
                                  const VisitedSet& modes);

/// Trapezoidal integral of <Q + L' R L; X> over the grid plus <Q(T); X(T)>.
/// Each step uses its left-node gain at both ends, matching the held gain.
double DeterministicCost(const MomentTrajectory& trajectory,
                         std::span<const GainCollection> gains,
                         const ProblemInstance& problem);

}  // namespace mjls
