#include "mjls/chain.h"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>

namespace mjls {

GeneratorReport ValidateGenerator(const Matrix& generator) {
  GeneratorReport report;
  if (generator.rows() != generator.cols()) {
    std::ostringstream msg;
    msg << "generator must be square, got " << generator.rows() << "x"
        << generator.cols();
    report.issues.push_back({GeneratorIssue::Kind::kNotSquare, -1, -1, 0.0,
                             msg.str()});
    return report;
  }
  const int n = generator.rows();
  for (int i = 0; i < n; ++i) {
    bool finite_row = true;
    for (int j = 0; j < n; ++j) {
      const double rate = generator(i, j);
      if (!std::isfinite(rate)) {
        finite_row = false;
        report.issues.push_back({GeneratorIssue::Kind::kNonFinite, i, j, rate,
                                 "rate is not finite"});
      } else if (i != j && rate < 0.0) {
        std::ostringstream msg;
        msg << "off-diagonal rate (" << i + 1 << "," << j + 1 << ") = " << rate
            << " is negative";
        report.issues.push_back(
            {GeneratorIssue::Kind::kNegativeRate, i, j, rate, msg.str()});
      }
    }
    if (!finite_row) continue;
    const double row_sum = generator.row(i).sum();
    if (std::abs(row_sum) > tol::kGenerator) {
      std::ostringstream msg;
      msg << "row " << i + 1 << " sums to " << row_sum << ", not 0";
      report.issues.push_back(
          {GeneratorIssue::Kind::kRowSum, i, -1, row_sum, msg.str()});
    }
  }
  report.absorbing = AbsorbingModes(generator);
  return report;
}

std::vector<int> AbsorbingModes(const Matrix& generator) {
  std::vector<int> absorbing;
  for (int i = 0; i < generator.rows() && i < generator.cols(); ++i) {
    double outgoing = 0.0;
    for (int j = 0; j < generator.cols(); ++j) {
      if (j != i && generator(i, j) > 0.0) outgoing += generator(i, j);
    }
    if (outgoing <= tol::kRate) absorbing.push_back(i);
  }
  return absorbing;
}

VisitedSet VisitedStates(const Matrix& generator, const Vector& phi) {
  const int n = generator.rows();
  if (generator.cols() != n || phi.size() != n) {
    throw ShapeError("VisitedStates: generator and phi disagree on mode count");
  }
  std::vector<bool> seen(n, false);
  std::deque<int> frontier;
  for (int i = 0; i < n; ++i) {
    if (phi(i) > tol::kProbability) {
      seen[i] = true;
      frontier.push_back(i);
    }
  }
  if (frontier.empty()) {
    throw ValidationError("/phi", "initial distribution has empty support");
  }
  while (!frontier.empty()) {
    const int i = frontier.front();
    frontier.pop_front();
    for (int j = 0; j < n; ++j) {
      if (j != i && !seen[j] && generator(i, j) > tol::kRate) {
        seen[j] = true;
        frontier.push_back(j);
      }
    }
  }
  std::vector<int> members;
  for (int i = 0; i < n; ++i) {
    if (seen[i]) members.push_back(i);
  }
  return VisitedSet(n, std::move(members));
}

Vector ModeProbabilities::At(double t) const {
  const int k = grid.NodeAtOrBefore(t);
  if (k == grid.num_steps()) return values[k];
  const double w = (t - grid.node(k)) / grid.step();
  return (1.0 - w) * values[k] + w * values[k + 1];
}

ModeProbabilities ComputeModeProbabilities(const Matrix& generator,
                                           const Vector& phi,
                                           const TimeGrid& grid) {
  if (generator.rows() != phi.size() || generator.cols() != phi.size()) {
    throw ShapeError("ComputeModeProbabilities: dimension mismatch");
  }
  // Row-vector form: d pi' / dt = Lambda' pi'.
  const Matrix rates = generator.transpose();
  const double h = grid.step();
  ModeProbabilities out{grid, {}};
  out.values.reserve(grid.num_nodes());
  Vector pi = phi;
  out.values.push_back(pi);
  for (int k = 0; k < grid.num_steps(); ++k) {
    const Vector k1 = rates * pi;
    const Vector k2 = rates * (pi + 0.5 * h * k1);
    const Vector k3 = rates * (pi + 0.5 * h * k2);
    const Vector k4 = rates * (pi + h * k3);
    pi += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    pi = pi.cwiseMax(0.0);
    pi /= pi.sum();
    out.values.push_back(pi);
  }
  return out;
}

int JumpPath::ModeAt(double t) const {
  auto it = std::upper_bound(
      segments.begin(), segments.end(), t,
      [](double value, const Segment& s) { return value < s.start; });
  return std::prev(it)->mode;
}

std::uint64_t DerivePathSeed(std::uint64_t master_seed, std::uint64_t index) {
  // splitmix64 finalizer over the combined key.
  std::uint64_t z = master_seed * 0x9E3779B97F4A7C15ULL + index + 1;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

JumpPath SamplePath(const Matrix& generator, const Vector& phi, double horizon,
                    PathRng& rng) {
  const int n = generator.rows();
  // Same support thresholds as VisitedStates so paths never leave it.
  std::vector<double> weights(n);
  for (int i = 0; i < n; ++i) {
    weights[i] = phi(i) > tol::kProbability ? phi(i) : 0.0;
  }
  std::discrete_distribution<int> initial(weights.begin(), weights.end());
  JumpPath path;
  path.horizon = horizon;
  int mode = initial(rng);
  double t = 0.0;
  path.segments.push_back({0.0, mode});
  while (true) {
    const double exit_rate = -generator(mode, mode);
    if (exit_rate <= tol::kRate) break;
    t += std::exponential_distribution<double>(exit_rate)(rng);
    if (t >= horizon) break;
    for (int j = 0; j < n; ++j) {
      const double rate = generator(mode, j);
      weights[j] = j != mode && rate > tol::kRate ? rate : 0.0;
    }
    if (std::all_of(weights.begin(), weights.end(),
                    [](double w) { return w == 0.0; })) {
      break;
    }
    mode = std::discrete_distribution<int>(weights.begin(), weights.end())(rng);
    path.segments.push_back({t, mode});
  }
  return path;
}

JumpPath SamplePath(const Matrix& generator, const Vector& phi, double horizon,
                    std::uint64_t path_seed) {
  PathRng rng(path_seed);
  return SamplePath(generator, phi, horizon, rng);
}

}  // namespace mjls
