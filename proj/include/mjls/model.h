#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mjls {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace tol {
inline constexpr double kSymmetry = 1e-10;
inline constexpr double kZero = 1e-10;
inline constexpr double kPsd = 1e-8;
inline constexpr double kPd = 1e-12;
inline constexpr double kGenerator = 1e-9;
inline constexpr double kProbability = 1e-9;
// Rates at or below this are structural zeros for reachability and absorption.
inline constexpr double kRate = 1e-12;
}  // namespace tol

/// Operands with incompatible dimensions.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A collection expected to vanish off the visited set does not.
class SubspaceError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Invalid problem data. `field()` is a JSON-pointer-like path to the
/// offending input, e.g. "/R/2" for the third mode's input weight.
class ValidationError : public std::invalid_argument {
 public:
  ValidationError(std::string field, const std::string& message)
      : std::invalid_argument(field.empty() ? message : field + ": " + message),
        field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// Integration produced non-finite values or hit a singular factorization.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& message, std::optional<double> time = {})
      : std::runtime_error(message), time_(time) {}
  std::optional<double> time() const { return time_; }

 private:
  std::optional<double> time_;
};

/// Uniform grid t_k = k * T / num_steps on [0, T].
class TimeGrid {
 public:
  TimeGrid(double horizon, int num_steps);

  /// Grid with step as close as possible to `step` (at least one step).
  static TimeGrid WithStep(double horizon, double step);

  double horizon() const { return horizon_; }
  int num_steps() const { return num_steps_; }
  int num_nodes() const { return num_steps_ + 1; }
  double step() const { return step_; }
  double node(int k) const;

  /// Index of the last node not exceeding t. Requires 0 <= t <= T.
  int NodeAtOrBefore(double t) const;

  bool operator==(const TimeGrid& other) const {
    return horizon_ == other.horizon_ && num_steps_ == other.num_steps_;
  }

 private:
  double horizon_;
  int num_steps_;
  double step_;
};

/// An ordered list of N real n x n matrices, one per Markov mode.
class MatrixCollection {
 public:
  MatrixCollection() = default;
  explicit MatrixCollection(std::vector<Matrix> entries);

  static MatrixCollection Zero(int num_modes, int dim);

  int num_modes() const { return static_cast<int>(entries_.size()); }
  int dim() const { return entries_.empty() ? 0 : entries_.front().rows(); }

  const Matrix& operator[](int i) const { return entries_[i]; }
  Matrix& operator[](int i) { return entries_[i]; }
  const std::vector<Matrix>& entries() const { return entries_; }

  bool IsSymmetric(double tolerance = tol::kSymmetry) const;
  bool IsPsd(double tolerance = tol::kPsd) const;
  /// Smallest eigenvalue over all (symmetrized) entries.
  double MinEigenvalue() const;
  /// Largest absolute entrywise difference.
  double MaxAbsDiff(const MatrixCollection& other) const;
  void Symmetrize();

  MatrixCollection& operator+=(const MatrixCollection& other);
  MatrixCollection& operator*=(double scale);
  friend MatrixCollection operator+(MatrixCollection a,
                                    const MatrixCollection& b) {
    return a += b;
  }
  friend MatrixCollection operator*(double s, MatrixCollection a) {
    return a *= s;
  }

 private:
  std::vector<Matrix> entries_;
};

/// An ordered list of N real m x n feedback gains.
class GainCollection {
 public:
  GainCollection() = default;
  explicit GainCollection(std::vector<Matrix> entries);

  int num_modes() const { return static_cast<int>(entries_.size()); }
  int rows() const { return entries_.empty() ? 0 : entries_.front().rows(); }
  int cols() const { return entries_.empty() ? 0 : entries_.front().cols(); }
  const Matrix& operator[](int i) const { return entries_[i]; }
  const std::vector<Matrix>& entries() const { return entries_; }

 private:
  std::vector<Matrix> entries_;
};

/// Subset of mode indices (0-based), kept in ascending order.
class VisitedSet {
 public:
  VisitedSet() = default;
  VisitedSet(int num_modes, std::vector<int> members);

  static VisitedSet All(int num_modes);

  int num_modes() const { return static_cast<int>(mask_.size()); }
  const std::vector<int>& members() const { return members_; }
  int size() const { return static_cast<int>(members_.size()); }
  bool empty() const { return members_.empty(); }
  bool contains(int mode) const {
    return mode >= 0 && mode < num_modes() && mask_[mode];
  }
  bool is_full() const { return size() == num_modes(); }
  std::vector<int> Complement() const;

  bool operator==(const VisitedSet& other) const {
    return members_ == other.members_ && mask_ == other.mask_;
  }

 private:
  std::vector<int> members_;
  std::vector<bool> mask_;
};

/// A matrix that is either constant or sampled at uniformly spaced nodes
/// over [0, T]. Sampled schedules are linearly interpolated.
class MatrixSchedule {
 public:
  MatrixSchedule() = default;
  MatrixSchedule(Matrix constant);  // NOLINT(runtime/explicit)
  MatrixSchedule(std::vector<Matrix> samples, double horizon);

  bool is_constant() const { return samples_.size() == 1; }
  int rows() const { return samples_.front().rows(); }
  int cols() const { return samples_.front().cols(); }
  const std::vector<Matrix>& samples() const { return samples_; }

  Matrix At(double t) const;

 private:
  std::vector<Matrix> samples_;
  double horizon_ = 0.0;
};

/// Initial state: deterministic (no covariances) or Gaussian with mean and a
/// covariance conditional on each initial mode. Covariances of modes with
/// zero initial probability may be absent.
struct InitialState {
  Vector mean;
  std::vector<std::optional<Matrix>> covariances;

  bool is_deterministic() const { return covariances.empty(); }
};

/// A finite-horizon LQR problem on a continuous-time Markov jump linear
/// system with N modes, state dimension n, input dimension m.
struct ProblemInstance {
  std::vector<MatrixSchedule> dynamics;       // A_i, n x n
  std::vector<MatrixSchedule> input;          // B_i, n x m
  std::vector<MatrixSchedule> state_weight;   // Q_i, n x n
  std::vector<MatrixSchedule> input_weight;   // R_i, m x m
  std::vector<Matrix> terminal_weight;        // Q_i(T), n x n
  Matrix generator;                           // lambda_ij, N x N
  Vector phi;                                 // Pr(theta(0) = i)
  double horizon = 0.0;
  InitialState initial_state;

  int num_modes() const { return static_cast<int>(dynamics.size()); }
  int state_dim() const;
  int input_dim() const;
  bool is_time_invariant() const;

  /// Checks dimensions and the weight, generator and distribution invariants.
  /// Throws ValidationError naming the offending field.
  void Validate() const;
};

/// Sum over modes of tr(V_i' W_i).
double InnerProduct(const MatrixCollection& v, const MatrixCollection& w);

/// Component i: U_i Q_i + Q_i U_i' + sum_j lambda_ji Q_j.
MatrixCollection ApplyK(const MatrixCollection& u, const MatrixCollection& q,
                        const Matrix& generator);

/// Component i: U_i' Q_i + Q_i U_i + sum_j lambda_ij Q_j. Adjoint of ApplyK.
MatrixCollection ApplyH(const MatrixCollection& u, const MatrixCollection& q,
                        const Matrix& generator);

/// Keeps components in `z`, zeroes the rest.
MatrixCollection Project(const MatrixCollection& v, const VisitedSet& z);

/// ApplyK with the coupling sum restricted to z and output zero off z.
/// Throws SubspaceError if q does not vanish off z.
MatrixCollection ApplyKRestricted(const MatrixCollection& u,
                                  const MatrixCollection& q,
                                  const Matrix& generator, const VisitedSet& z);

MatrixCollection ApplyHRestricted(const MatrixCollection& u,
                                  const MatrixCollection& q,
                                  const Matrix& generator, const VisitedSet& z);

/// Throws SubspaceError unless every component off z is zero within tol::kZero.
void CheckInSubspace(const MatrixCollection& v, const VisitedSet& z,
                     const char* what);

/// Smallest eigenvalue of the symmetric part of m.
double MinSymmetricEigenvalue(const Matrix& m);

}  // namespace mjls
