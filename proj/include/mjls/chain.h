#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "mjls/model.h"

namespace mjls {

struct GeneratorIssue {
  enum class Kind { kNotSquare, kNonFinite, kNegativeRate, kRowSum };
  Kind kind;
  int row = -1;  // 0-based; -1 when not tied to an entry
  int col = -1;
  double value = 0.0;
  std::string message;
};

struct GeneratorReport {
  std::vector<GeneratorIssue> issues;
  /// Modes whose total outgoing rate is at most tol::kRate (0-based).
  std::vector<int> absorbing;

  bool ok() const { return issues.empty(); }
};

/// Checks off-diagonal rates are nonnegative and rows sum to zero within
/// tol::kGenerator. Never throws.
GeneratorReport ValidateGenerator(const Matrix& generator);

std::vector<int> AbsorbingModes(const Matrix& generator);

/// Modes reachable from supp(phi) along edges with rate above tol::kRate,
/// including supp(phi) itself. A mode is in supp(phi) when phi_i exceeds
/// tol::kProbability. Throws ValidationError if the support is empty.
VisitedSet VisitedStates(const Matrix& generator, const Vector& phi);

/// pi(t) = Pr(theta(t) = i) on every grid node.
struct ModeProbabilities {
  TimeGrid grid;
  std::vector<Vector> values;

  const Vector& at_node(int k) const { return values[k]; }
  /// Linear interpolation between nodes.
  Vector At(double t) const;
};

/// RK4 on the forward Kolmogorov equation d pi / dt = pi * Lambda, with the
/// distribution renormalized after each step.
ModeProbabilities ComputeModeProbabilities(const Matrix& generator,
                                           const Vector& phi,
                                           const TimeGrid& grid);

/// One chain realization on [0, T]: piecewise-constant mode with segment
/// start times strictly increasing from 0.
struct JumpPath {
  struct Segment {
    double start;
    int mode;  // 0-based
  };
  std::vector<Segment> segments;
  double horizon = 0.0;

  int ModeAt(double t) const;
  int num_jumps() const { return static_cast<int>(segments.size()) - 1; }
  int final_mode() const { return segments.back().mode; }
};

/// Per-path seed from (master_seed, path_index); stateless so paths can be
/// generated in any order.
std::uint64_t DerivePathSeed(std::uint64_t master_seed, std::uint64_t index);

using PathRng = std::mt19937_64;

/// Draws an initial mode from phi, then exponential holding times with rate
/// -lambda_ii and jumps with probability lambda_ij / -lambda_ii until T.
JumpPath SamplePath(const Matrix& generator, const Vector& phi, double horizon,
                    PathRng& rng);
JumpPath SamplePath(const Matrix& generator, const Vector& phi, double horizon,
                    std::uint64_t path_seed);

}  // namespace mjls
