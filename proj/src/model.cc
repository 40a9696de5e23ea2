#include "mjls/model.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mjls/chain.h"

namespace mjls {

namespace {

std::string DimString(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void CheckSameShape(const MatrixCollection& a, const MatrixCollection& b,
                    const char* op) {
  if (a.num_modes() != b.num_modes() || a.dim() != b.dim()) {
    std::ostringstream msg;
    msg << op << ": collections differ in shape (" << a.num_modes() << " x "
        << a.dim() << " vs " << b.num_modes() << " x " << b.dim() << ")";
    throw ShapeError(msg.str());
  }
}

void CheckGenerator(const MatrixCollection& q, const Matrix& generator,
                    const char* op) {
  if (generator.rows() != q.num_modes() || generator.cols() != q.num_modes()) {
    std::ostringstream msg;
    msg << op << ": generator is " << DimString(generator) << " but there are "
        << q.num_modes() << " modes";
    throw ShapeError(msg.str());
  }
}

enum class Coupling { kTransposed, kDirect };

// Shared kernel for K (transposed rates, U Q + Q U') and H (direct rates,
// U' Q + Q U). Components outside `active` are zero and the coupling sum runs
// over `active` only, in ascending order, so that a full active set gives
// bitwise the same result as the unrestricted operator.
MatrixCollection CoupledOperator(const MatrixCollection& u,
                                 const MatrixCollection& q,
                                 const Matrix& generator,
                                 const std::vector<int>& active, Coupling kind) {
  const int num_modes = q.num_modes();
  MatrixCollection out = MatrixCollection::Zero(num_modes, q.dim());
  for (int i : active) {
    Matrix& component = out[i];
    if (kind == Coupling::kTransposed) {
      component = u[i] * q[i] + q[i] * u[i].transpose();
    } else {
      component = u[i].transpose() * q[i] + q[i] * u[i];
    }
    for (int j : active) {
      const double rate =
          kind == Coupling::kTransposed ? generator(j, i) : generator(i, j);
      component += rate * q[j];
    }
  }
  return out;
}

std::vector<int> AllModes(int n) {
  std::vector<int> modes(n);
  for (int i = 0; i < n; ++i) modes[i] = i;
  return modes;
}

}  // namespace

TimeGrid::TimeGrid(double horizon, int num_steps)
    : horizon_(horizon), num_steps_(num_steps) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw ValidationError("/horizon", "horizon must be positive and finite");
  }
  if (num_steps < 1) {
    throw ValidationError("/solver/num_steps", "need at least one step");
  }
  step_ = horizon / num_steps;
}

TimeGrid TimeGrid::WithStep(double horizon, double step) {
  if (!(step > 0.0)) throw ValidationError("/solver/step", "step must be > 0");
  const int steps = std::max(1, static_cast<int>(std::lround(horizon / step)));
  return TimeGrid(horizon, steps);
}

double TimeGrid::node(int k) const {
  return k == num_steps_ ? horizon_ : k * step_;
}

int TimeGrid::NodeAtOrBefore(double t) const {
  if (t < 0.0 || t > horizon_) {
    throw std::out_of_range("time " + std::to_string(t) + " outside [0, " +
                            std::to_string(horizon_) + "]");
  }
  if (t == horizon_) return num_steps_;
  int k = static_cast<int>(std::floor(t / step_));
  // Guard against t/step rounding just past an integer.
  if (k > 0 && node(k) > t) --k;
  if (k < num_steps_ && node(k + 1) <= t) ++k;
  return std::clamp(k, 0, num_steps_);
}

MatrixCollection::MatrixCollection(std::vector<Matrix> entries)
    : entries_(std::move(entries)) {
  for (const Matrix& m : entries_) {
    if (m.rows() != m.cols()) {
      throw ShapeError("collection entry is not square: " + DimString(m));
    }
    if (m.rows() != entries_.front().rows()) {
      throw ShapeError("collection entries differ in dimension");
    }
  }
}

MatrixCollection MatrixCollection::Zero(int num_modes, int dim) {
  return MatrixCollection(
      std::vector<Matrix>(num_modes, Matrix::Zero(dim, dim)));
}

bool MatrixCollection::IsSymmetric(double tolerance) const {
  return std::all_of(entries_.begin(), entries_.end(), [&](const Matrix& m) {
    return (m - m.transpose()).cwiseAbs().maxCoeff() <= tolerance;
  });
}

bool MatrixCollection::IsPsd(double tolerance) const {
  return entries_.empty() || MinEigenvalue() >= -tolerance;
}

double MatrixCollection::MinEigenvalue() const {
  double lowest = std::numeric_limits<double>::infinity();
  for (const Matrix& m : entries_) {
    lowest = std::min(lowest, MinSymmetricEigenvalue(m));
  }
  return lowest;
}

double MatrixCollection::MaxAbsDiff(const MatrixCollection& other) const {
  CheckSameShape(*this, other, "MaxAbsDiff");
  double worst = 0.0;
  for (int i = 0; i < num_modes(); ++i) {
    if (dim() > 0) {
      worst = std::max(worst, (entries_[i] - other[i]).cwiseAbs().maxCoeff());
    }
  }
  return worst;
}

void MatrixCollection::Symmetrize() {
  for (Matrix& m : entries_) {
    m = 0.5 * (m + m.transpose()).eval();
  }
}

MatrixCollection& MatrixCollection::operator+=(const MatrixCollection& other) {
  CheckSameShape(*this, other, "operator+=");
  for (int i = 0; i < num_modes(); ++i) entries_[i] += other[i];
  return *this;
}

MatrixCollection& MatrixCollection::operator*=(double scale) {
  for (Matrix& m : entries_) m *= scale;
  return *this;
}

GainCollection::GainCollection(std::vector<Matrix> entries)
    : entries_(std::move(entries)) {
  for (const Matrix& m : entries_) {
    if (m.rows() != entries_.front().rows() ||
        m.cols() != entries_.front().cols()) {
      throw ShapeError("gain entries differ in dimension");
    }
  }
}

VisitedSet::VisitedSet(int num_modes, std::vector<int> members)
    : mask_(num_modes, false) {
  for (int i : members) {
    if (i < 0 || i >= num_modes) {
      throw std::out_of_range("mode index " + std::to_string(i + 1) +
                              " outside 1.." + std::to_string(num_modes));
    }
    mask_[i] = true;
  }
  for (int i = 0; i < num_modes; ++i) {
    if (mask_[i]) members_.push_back(i);
  }
}

VisitedSet VisitedSet::All(int num_modes) {
  return VisitedSet(num_modes, AllModes(num_modes));
}

std::vector<int> VisitedSet::Complement() const {
  std::vector<int> rest;
  for (int i = 0; i < num_modes(); ++i) {
    if (!mask_[i]) rest.push_back(i);
  }
  return rest;
}

MatrixSchedule::MatrixSchedule(Matrix constant) : samples_{std::move(constant)} {}

MatrixSchedule::MatrixSchedule(std::vector<Matrix> samples, double horizon)
    : samples_(std::move(samples)), horizon_(horizon) {
  if (samples_.empty()) throw ShapeError("schedule needs at least one sample");
  for (const Matrix& m : samples_) {
    if (m.rows() != samples_.front().rows() ||
        m.cols() != samples_.front().cols()) {
      throw ShapeError("schedule samples differ in dimension");
    }
  }
  if (samples_.size() > 1 && !(horizon > 0.0)) {
    throw ShapeError("sampled schedule needs a positive horizon");
  }
}

Matrix MatrixSchedule::At(double t) const {
  if (is_constant()) return samples_.front();
  const int intervals = static_cast<int>(samples_.size()) - 1;
  const double position = std::clamp(t / horizon_, 0.0, 1.0) * intervals;
  const int k = std::min(static_cast<int>(std::floor(position)), intervals - 1);
  const double w = position - k;
  return (1.0 - w) * samples_[k] + w * samples_[k + 1];
}

int ProblemInstance::state_dim() const {
  return dynamics.empty() ? 0 : dynamics.front().rows();
}

int ProblemInstance::input_dim() const {
  return input.empty() ? 0 : input.front().cols();
}

bool ProblemInstance::is_time_invariant() const {
  auto constant = [](const std::vector<MatrixSchedule>& s) {
    return std::all_of(s.begin(), s.end(),
                       [](const MatrixSchedule& m) { return m.is_constant(); });
  };
  return constant(dynamics) && constant(input) && constant(state_weight) &&
         constant(input_weight);
}

void ProblemInstance::Validate() const {
  const int modes = num_modes();
  if (modes < 1) throw ValidationError("/A", "need at least one mode");
  const int n = state_dim();
  const int m = input_dim();
  if (n < 1) throw ValidationError("/A/0", "state dimension must be >= 1");
  if (m < 1) throw ValidationError("/B/0", "input dimension must be >= 1");

  auto check_count = [&](std::size_t count, const char* field) {
    if (static_cast<int>(count) != modes) {
      throw ValidationError(field, "expected " + std::to_string(modes) +
                                       " per-mode entries, got " +
                                       std::to_string(count));
    }
  };
  check_count(input.size(), "/B");
  check_count(state_weight.size(), "/Q");
  check_count(input_weight.size(), "/R");
  check_count(terminal_weight.size(), "/Q_terminal");

  auto field = [](const char* name, int i) {
    return std::string(name) + "/" + std::to_string(i);
  };
  auto check_shape = [&](const MatrixSchedule& s, int rows, int cols,
                         const std::string& where) {
    if (s.rows() != rows || s.cols() != cols) {
      throw ValidationError(where, "expected " + std::to_string(rows) + "x" +
                                       std::to_string(cols) + ", got " +
                                       std::to_string(s.rows()) + "x" +
                                       std::to_string(s.cols()));
    }
    for (const Matrix& sample : s.samples()) {
      if (!sample.allFinite()) throw ValidationError(where, "non-finite entry");
    }
  };
  auto check_symmetric = [&](const Matrix& w, const std::string& where) {
    if ((w - w.transpose()).cwiseAbs().maxCoeff() > tol::kSymmetry) {
      throw ValidationError(where, "matrix is not symmetric");
    }
  };

  for (int i = 0; i < modes; ++i) {
    check_shape(dynamics[i], n, n, field("/A", i));
    check_shape(input[i], n, m, field("/B", i));
    check_shape(state_weight[i], n, n, field("/Q", i));
    check_shape(input_weight[i], m, m, field("/R", i));
    check_shape(MatrixSchedule(terminal_weight[i]), n, n,
                field("/Q_terminal", i));
    for (const Matrix& q : state_weight[i].samples()) {
      check_symmetric(q, field("/Q", i));
      if (MinSymmetricEigenvalue(q) < -tol::kPsd) {
        throw ValidationError(field("/Q", i), "not positive semidefinite");
      }
    }
    for (const Matrix& r : input_weight[i].samples()) {
      check_symmetric(r, field("/R", i));
      if (!(MinSymmetricEigenvalue(r) > tol::kPd)) {
        throw ValidationError(field("/R", i), "not positive definite");
      }
    }
    check_symmetric(terminal_weight[i], field("/Q_terminal", i));
    if (MinSymmetricEigenvalue(terminal_weight[i]) < -tol::kPsd) {
      throw ValidationError(field("/Q_terminal", i),
                            "not positive semidefinite");
    }
  }

  if (generator.rows() != modes || generator.cols() != modes) {
    throw ValidationError("/generator", "expected " + std::to_string(modes) +
                                            "x" + std::to_string(modes));
  }
  const GeneratorReport report = ValidateGenerator(generator);
  if (!report.ok()) {
    const GeneratorIssue& first = report.issues.front();
    throw ValidationError(
        "/generator/" + std::to_string(first.row) +
            (first.col >= 0 ? "/" + std::to_string(first.col) : ""),
        first.message);
  }

  if (phi.size() != modes) {
    throw ValidationError("/phi", "expected " + std::to_string(modes) +
                                      " probabilities");
  }
  for (int i = 0; i < modes; ++i) {
    if (!std::isfinite(phi(i)) || phi(i) < 0.0) {
      throw ValidationError(field("/phi", i), "probability must be >= 0");
    }
  }
  if (std::abs(phi.sum() - 1.0) > tol::kProbability) {
    throw ValidationError("/phi", "probabilities sum to " +
                                      std::to_string(phi.sum()) + ", not 1");
  }

  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw ValidationError("/horizon", "horizon must be positive and finite");
  }

  if (initial_state.mean.size() != n) {
    throw ValidationError(initial_state.is_deterministic()
                              ? "/initial_state/x0"
                              : "/initial_state/mean",
                          "expected " + std::to_string(n) + " entries");
  }
  if (!initial_state.mean.allFinite()) {
    throw ValidationError("/initial_state", "non-finite entry");
  }
  if (!initial_state.is_deterministic()) {
    if (static_cast<int>(initial_state.covariances.size()) != modes) {
      throw ValidationError("/initial_state/covariances",
                            "expected one entry per mode");
    }
    for (int i = 0; i < modes; ++i) {
      const auto& cov = initial_state.covariances[i];
      const std::string where = field("/initial_state/covariances", i);
      if (!cov) {
        if (phi(i) > tol::kProbability) {
          throw ValidationError(where,
                                "required for modes with positive phi");
        }
        continue;
      }
      if (cov->rows() != n || cov->cols() != n) {
        throw ValidationError(where, "expected " + std::to_string(n) + "x" +
                                         std::to_string(n));
      }
      check_symmetric(*cov, where);
      if (MinSymmetricEigenvalue(*cov) < -tol::kPsd) {
        throw ValidationError(where, "not positive semidefinite");
      }
    }
  }
}

double InnerProduct(const MatrixCollection& v, const MatrixCollection& w) {
  CheckSameShape(v, w, "InnerProduct");
  double sum = 0.0;
  for (int i = 0; i < v.num_modes(); ++i) {
    // tr(V' W) is the Frobenius product.
    sum += v[i].cwiseProduct(w[i]).sum();
  }
  return sum;
}

MatrixCollection ApplyK(const MatrixCollection& u, const MatrixCollection& q,
                        const Matrix& generator) {
  CheckSameShape(u, q, "ApplyK");
  CheckGenerator(q, generator, "ApplyK");
  return CoupledOperator(u, q, generator, AllModes(q.num_modes()),
                         Coupling::kTransposed);
}

MatrixCollection ApplyH(const MatrixCollection& u, const MatrixCollection& q,
                        const Matrix& generator) {
  CheckSameShape(u, q, "ApplyH");
  CheckGenerator(q, generator, "ApplyH");
  return CoupledOperator(u, q, generator, AllModes(q.num_modes()),
                         Coupling::kDirect);
}

MatrixCollection Project(const MatrixCollection& v, const VisitedSet& z) {
  if (z.num_modes() != v.num_modes()) {
    throw ShapeError("Project: visited set is over " +
                     std::to_string(z.num_modes()) + " modes, collection has " +
                     std::to_string(v.num_modes()));
  }
  MatrixCollection out = v;
  for (int i : z.Complement()) out[i].setZero();
  return out;
}

void CheckInSubspace(const MatrixCollection& v, const VisitedSet& z,
                     const char* what) {
  for (int i : z.Complement()) {
    if (v.dim() > 0 && v[i].cwiseAbs().maxCoeff() > tol::kZero) {
      throw SubspaceError(std::string(what) + ": component " +
                          std::to_string(i + 1) +
                          " is nonzero but the mode is not visited");
    }
  }
}

MatrixCollection ApplyKRestricted(const MatrixCollection& u,
                                  const MatrixCollection& q,
                                  const Matrix& generator,
                                  const VisitedSet& z) {
  CheckSameShape(u, q, "ApplyKRestricted");
  CheckGenerator(q, generator, "ApplyKRestricted");
  if (z.num_modes() != q.num_modes()) {
    throw ShapeError("ApplyKRestricted: visited set size mismatch");
  }
  CheckInSubspace(q, z, "ApplyKRestricted");
  return CoupledOperator(u, q, generator, z.members(), Coupling::kTransposed);
}

MatrixCollection ApplyHRestricted(const MatrixCollection& u,
                                  const MatrixCollection& q,
                                  const Matrix& generator,
                                  const VisitedSet& z) {
  CheckSameShape(u, q, "ApplyHRestricted");
  CheckGenerator(q, generator, "ApplyHRestricted");
  if (z.num_modes() != q.num_modes()) {
    throw ShapeError("ApplyHRestricted: visited set size mismatch");
  }
  CheckInSubspace(q, z, "ApplyHRestricted");
  return CoupledOperator(u, q, generator, z.members(), Coupling::kDirect);
}

double MinSymmetricEigenvalue(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  const Matrix sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

}  // namespace mjls
