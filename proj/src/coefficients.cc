#include "mjls/coefficients.h"

#include <sstream>

namespace mjls {

Coefficients::Coefficients(const ProblemInstance& problem, double t) {
  modes_.resize(problem.num_modes());
  for (int i = 0; i < problem.num_modes(); ++i) {
    ModeCoefficients& c = modes_[i];
    c.a = problem.dynamics[i].At(t);
    c.b = problem.input[i].At(t);
    c.q = problem.state_weight[i].At(t);
    c.r = problem.input_weight[i].At(t);
    const Matrix r_sym = 0.5 * (c.r + c.r.transpose());
    Eigen::LLT<Matrix> llt(r_sym);
    if (llt.info() != Eigen::Success ||
        !(MinSymmetricEigenvalue(r_sym) > tol::kPd)) {
      std::ostringstream msg;
      msg << "input weight R_" << i + 1 << " is not positive definite at t = "
          << t;
      throw NumericalError(msg.str(), t);
    }
    c.r_inv_bt = llt.solve(c.b.transpose());
    c.s = c.b * c.r_inv_bt;
    c.s = 0.5 * (c.s + c.s.transpose()).eval();
  }
}

CoefficientCache::CoefficientCache(const ProblemInstance& problem)
    : problem_(&problem), constant_(problem.is_time_invariant()) {
  if (constant_) {
    current_ = Coefficients(problem, 0.0);
    last_time_ = 0.0;
  }
}

const Coefficients& CoefficientCache::At(double t) {
  if (!constant_ && t != last_time_) {
    current_ = Coefficients(*problem_, t);
    last_time_ = t;
  }
  return current_;
}

}  // namespace mjls
