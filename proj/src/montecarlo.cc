#include "mjls/montecarlo.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <sstream>
#include <string>
#include <thread>

#include "mjls/coefficients.h"

namespace mjls {

namespace {

Matrix PsdSquareRoot(const Matrix& m) {
  const Matrix sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  const Vector roots = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * roots.asDiagonal() *
         eig.eigenvectors().transpose();
}

// One RK4 step of x' = M(s) x applied to the identity, with M sampled at the
// step start, midpoint and end.
Matrix Rk4Transition(const Matrix& m_start, const Matrix& m_mid,
                     const Matrix& m_end, double h) {
  const int n = m_start.rows();
  const Matrix eye = Matrix::Identity(n, n);
  const Matrix k1 = m_start;
  const Matrix k2 = m_mid * (eye + 0.5 * h * k1);
  const Matrix k3 = m_mid * (eye + 0.5 * h * k2);
  const Matrix k4 = m_end * (eye + h * k3);
  return eye + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace

CostEstimate Summarize(std::span<const double> samples) {
  CostEstimate est;
  est.num_paths = static_cast<int>(samples.size());
  if (samples.empty()) return est;
  double sum = 0.0;
  for (double v : samples) sum += v;
  est.mean = sum / samples.size();
  if (samples.size() > 1) {
    double squares = 0.0;
    for (double v : samples) squares += (v - est.mean) * (v - est.mean);
    const double variance = squares / (samples.size() - 1);
    est.std_error = std::sqrt(variance / samples.size());
  }
  est.ci_low = est.mean - 1.96 * est.std_error;
  est.ci_high = est.mean + 1.96 * est.std_error;
  return est;
}

ClosedLoopSimulator::ClosedLoopSimulator(const ProblemInstance& problem,
                                         const RiccatiSolution& solution)
    : problem_(problem),
      grid_(solution.grid),
      num_modes_(problem.num_modes()),
      n_(problem.state_dim()) {
  if (static_cast<int>(solution.gains.size()) != grid_.num_nodes()) {
    throw ShapeError("ClosedLoopSimulator: solution does not cover its grid");
  }
  const int block = n_ * n_;
  const int steps = grid_.num_steps();
  transitions_.assign(static_cast<std::size_t>(steps) * num_modes_ * block,
                      0.0);
  running_weights_.assign(
      static_cast<std::size_t>(steps) * num_modes_ * 2 * block, 0.0);

  CoefficientCache cache(problem);
  const double h = grid_.step();
  for (int k = 0; k < grid_.num_nodes(); ++k) {
    const double t = grid_.node(k);
    if (k == steps) break;
    const double t_next = grid_.node(k + 1);
    // Q + L_k' R L_k at both ends of the step: the gain is held, the weights
    // are evaluated at each end.
    auto store_weight = [&](double at, int end) {
      const Coefficients& c = cache.At(at);
      for (int i = 0; i < num_modes_; ++i) {
        const Matrix& l = solution.gains[k][i];
        const Matrix weight = c.mode(i).q + l.transpose() * c.mode(i).r * l;
        std::copy(weight.data(), weight.data() + block,
                  running_weights_.begin() +
                      ((static_cast<std::size_t>(k) * num_modes_ + i) * 2 +
                       end) * block);
      }
    };
    store_weight(t, 0);
    store_weight(t_next, 1);
    std::vector<Matrix> closed_start(num_modes_);
    {
      const Coefficients& c = cache.At(t);
      for (int i = 0; i < num_modes_; ++i) {
        closed_start[i] = c.mode(i).a + c.mode(i).b * solution.gains[k][i];
      }
    }
    std::vector<Matrix> closed_mid(num_modes_);
    std::vector<Matrix> closed_end(num_modes_);
    if (problem.is_time_invariant()) {
      closed_mid = closed_start;
      closed_end = closed_start;
    } else {
      {
        const Coefficients& c = cache.At(0.5 * (t + t_next));
        for (int i = 0; i < num_modes_; ++i) {
          closed_mid[i] = c.mode(i).a + c.mode(i).b * solution.gains[k][i];
        }
      }
      {
        const Coefficients& c = cache.At(t_next);
        for (int i = 0; i < num_modes_; ++i) {
          closed_end[i] = c.mode(i).a + c.mode(i).b * solution.gains[k][i];
        }
      }
    }
    for (int i = 0; i < num_modes_; ++i) {
      const Matrix phi =
          Rk4Transition(closed_start[i], closed_mid[i], closed_end[i], h);
      std::copy(phi.data(), phi.data() + block,
                transitions_.begin() +
                    (static_cast<std::size_t>(k) * num_modes_ + i) * block);
    }
  }

  const InitialState& init = problem.initial_state;
  if (!init.is_deterministic()) {
    covariance_roots_.resize(num_modes_);
    for (int i = 0; i < num_modes_; ++i) {
      covariance_roots_[i] = init.covariances[i]
                                 ? PsdSquareRoot(*init.covariances[i])
                                 : Matrix::Zero(n_, n_);
    }
  }
}

const double* ClosedLoopSimulator::transition(int k, int mode) const {
  return transitions_.data() +
         (static_cast<std::size_t>(k) * num_modes_ + mode) * n_ * n_;
}

const double* ClosedLoopSimulator::running_weight(int k, int mode,
                                                  int end) const {
  return running_weights_.data() +
         ((static_cast<std::size_t>(k) * num_modes_ + mode) * 2 + end) * n_ *
             n_;
}

PathOutcome ClosedLoopSimulator::Simulate(
    std::uint64_t path_seed, std::span<const int> checkpoint_nodes) const {
  PathRng rng(path_seed);
  PathOutcome out;
  out.path = SamplePath(problem_.generator, problem_.phi, grid_.horizon(), rng);
  const auto& segments = out.path.segments;

  Vector x = problem_.initial_state.mean;
  if (!covariance_roots_.empty()) {
    std::normal_distribution<double> normal;
    Vector z(n_);
    for (int j = 0; j < n_; ++j) z(j) = normal(rng);
    x += covariance_roots_[segments.front().mode] * z;
  }

  // Node from which each segment's mode applies.
  std::vector<int> first_node(segments.size());
  for (std::size_t s = 0; s < segments.size(); ++s) {
    first_node[s] = grid_.NodeAtOrBefore(segments[s].start);
  }
  std::size_t segment = 0;
  auto mode_at_node = [&](int k) {
    while (segment + 1 < segments.size() && first_node[segment + 1] <= k) {
      ++segment;
    }
    return segments[segment].mode;
  };

  const int n = n_;
  auto quadratic = [&](const double* w) {
    double value = 0.0;
    for (int c = 0; c < n; ++c) {
      double column = 0.0;
      for (int r = 0; r < n; ++r) column += w[c * n + r] * x(r);
      value += x(c) * column;
    }
    return value;
  };

  std::size_t next_checkpoint = 0;
  auto record_checkpoint = [&](int k, int mode) {
    while (next_checkpoint < checkpoint_nodes.size() &&
           checkpoint_nodes[next_checkpoint] == k) {
      out.checkpoint_states.push_back(x);
      out.checkpoint_modes.push_back(mode);
      ++next_checkpoint;
    }
  };

  const double h = grid_.step();
  int mode = mode_at_node(0);
  record_checkpoint(0, mode);
  double integral = 0.0;
  Vector next(n);
  for (int k = 0; k < grid_.num_steps(); ++k) {
    const double start = quadratic(running_weight(k, mode, 0));
    const double* phi = transition(k, mode);
    for (int r = 0; r < n; ++r) {
      double sum = 0.0;
      for (int c = 0; c < n; ++c) sum += phi[c * n + r] * x(c);
      next(r) = sum;
    }
    x.swap(next);
    integral += 0.5 * h * (start + quadratic(running_weight(k, mode, 1)));
    mode = mode_at_node(k + 1);
    record_checkpoint(k + 1, mode);
  }
  const double terminal =
      x.dot(problem_.terminal_weight[out.path.final_mode()] * x);
  out.cost = integral + terminal;
  if (!std::isfinite(out.cost) || !x.allFinite()) {
    std::ostringstream msg;
    msg << "closed-loop state diverged on path with seed " << path_seed
        << " (" << out.path.num_jumps() << " jumps, final mode "
        << out.path.final_mode() + 1 << ")";
    throw NumericalError(msg.str(), grid_.horizon());
  }
  return out;
}

PathOutcome SimulatePath(const ProblemInstance& problem,
                         const RiccatiSolution& solution,
                         std::uint64_t path_seed,
                         std::span<const int> checkpoint_nodes) {
  return ClosedLoopSimulator(problem, solution)
      .Simulate(path_seed, checkpoint_nodes);
}

int ResolveThreadCount(int requested, int work_items) {
  int threads = requested;
  if (threads <= 0) {
    if (const char* env = std::getenv("MJLS_LQR_THREADS")) {
      try {
        threads = std::stoi(env);
      } catch (const std::exception&) {
        threads = 0;
      }
    }
  }
  if (threads <= 0) {
    threads = static_cast<int>(std::thread::hardware_concurrency());
  }
  return std::clamp(threads, 1, std::max(1, work_items));
}

MonteCarloResult RunMonteCarlo(const ProblemInstance& problem,
                               const RiccatiSolution& solution,
                               const MonteCarloOptions& options) {
  if (options.num_paths < 1) {
    throw ValidationError("/monte_carlo/num_paths", "need at least one path");
  }
  std::vector<int> checkpoints = options.checkpoint_nodes;
  if (!std::is_sorted(checkpoints.begin(), checkpoints.end())) {
    throw std::invalid_argument("checkpoint nodes must be ascending");
  }
  const ClosedLoopSimulator simulator(problem, solution);
  const int num_paths = options.num_paths;
  const int num_checkpoints = static_cast<int>(checkpoints.size());
  const int num_modes = problem.num_modes();

  std::vector<double> costs(num_paths);
  std::vector<double> norms(static_cast<std::size_t>(num_paths) *
                            num_checkpoints);
  std::vector<int> modes_at(static_cast<std::size_t>(num_paths) *
                            num_checkpoints);
  std::vector<char> seen(static_cast<std::size_t>(num_paths) * num_modes, 0);
  std::vector<std::exception_ptr> errors(num_paths);

  auto run_path = [&](int p) {
    try {
      const PathOutcome outcome = simulator.Simulate(
          DerivePathSeed(options.master_seed, p), checkpoints);
      costs[p] = outcome.cost;
      for (int c = 0; c < num_checkpoints; ++c) {
        norms[static_cast<std::size_t>(p) * num_checkpoints + c] =
            outcome.checkpoint_states[c].squaredNorm();
        modes_at[static_cast<std::size_t>(p) * num_checkpoints + c] =
            outcome.checkpoint_modes[c];
      }
      for (const auto& segment : outcome.path.segments) {
        seen[static_cast<std::size_t>(p) * num_modes + segment.mode] = 1;
      }
    } catch (...) {
      errors[p] = std::current_exception();
    }
  };

  const int threads = ResolveThreadCount(options.max_threads, num_paths);
  if (threads == 1) {
    for (int p = 0; p < num_paths; ++p) run_path(p);
  } else {
    std::vector<std::jthread> workers;
    workers.reserve(threads);
    for (int w = 0; w < threads; ++w) {
      workers.emplace_back([&, w] {
        for (int p = w; p < num_paths; p += threads) run_path(p);
      });
    }
  }
  for (const auto& error : errors) {
    if (error) std::rethrow_exception(error);
  }

  MonteCarloResult result;
  result.cost = Summarize(costs);
  std::vector<double> column(num_paths);
  for (int c = 0; c < num_checkpoints; ++c) {
    Vector frequency = Vector::Zero(num_modes);
    for (int p = 0; p < num_paths; ++p) {
      const std::size_t idx = static_cast<std::size_t>(p) * num_checkpoints + c;
      column[p] = norms[idx];
      frequency(modes_at[idx]) += 1.0;
    }
    result.mean_square_norm.push_back(Summarize(column));
    result.mode_frequency.push_back(frequency / num_paths);
  }
  result.modes_seen.assign(num_modes, false);
  for (int p = 0; p < num_paths; ++p) {
    for (int i = 0; i < num_modes; ++i) {
      if (seen[static_cast<std::size_t>(p) * num_modes + i]) {
        result.modes_seen[i] = true;
      }
    }
  }
  return result;
}

CostEstimate EstimateCost(const ProblemInstance& problem,
                          const RiccatiSolution& solution, int num_paths,
                          std::uint64_t master_seed) {
  if (num_paths < 2) {
    throw ValidationError("/monte_carlo/num_paths",
                          "a standard error needs at least two paths");
  }
  MonteCarloOptions options;
  options.num_paths = num_paths;
  options.master_seed = master_seed;
  return RunMonteCarlo(problem, solution, options).cost;
}

}  // namespace mjls
