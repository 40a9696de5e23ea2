#pragma once

#include <vector>

#include "mjls/model.h"

namespace mjls {

/// Per-mode matrices evaluated at one time instant.
struct ModeCoefficients {
  Matrix a;         // A_i
  Matrix b;         // B_i
  Matrix q;         // Q_i
  Matrix r;         // R_i
  Matrix r_inv_bt;  // R_i^{-1} B_i'
  Matrix s;         // B_i R_i^{-1} B_i'
};

class Coefficients {
 public:
  Coefficients() = default;
  /// Throws NumericalError naming the mode if some R_i is not positive
  /// definite at t.
  Coefficients(const ProblemInstance& problem, double t);

  const ModeCoefficients& mode(int i) const { return modes_[i]; }
  int num_modes() const { return static_cast<int>(modes_.size()); }

 private:
  std::vector<ModeCoefficients> modes_;
};

/// Evaluates coefficients on demand; a time-invariant problem is factorized
/// once. The returned reference is valid until the next call to At.
class CoefficientCache {
 public:
  explicit CoefficientCache(const ProblemInstance& problem);

  const Coefficients& At(double t);

 private:
  const ProblemInstance* problem_;
  bool constant_;
  double last_time_ = -1.0;
  Coefficients current_;
};

}  // namespace mjls
