#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "mjls/model.h"
#include "mjls/problem_io.h"

namespace mjls::testing {

inline std::filesystem::path DataPath(const std::string& name) {
  return std::filesystem::path(MJLS_DATA_DIR) / name;
}

inline ProblemFile LoadExample(const std::string& name) {
  return LoadProblemFile(DataPath(name));
}

// Hand-rolled generators for property tests. Each draws from a caller-owned
// engine so a failing case can be replayed from its seed.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double Uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng_);
  }
  int Int(int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng_);
  }
  bool Coin(double p) { return std::bernoulli_distribution(p)(rng_); }

  Matrix Dense(int rows, int cols, double scale = 1.0) {
    Matrix m(rows, cols);
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) m(r, c) = Uniform(-scale, scale);
    }
    return m;
  }
  Matrix Symmetric(int n, double scale = 1.0) {
    const Matrix m = Dense(n, n, scale);
    return 0.5 * (m + m.transpose());
  }
  Matrix Psd(int n, double scale = 1.0) {
    const Matrix m = Dense(n, n, scale);
    return m * m.transpose();
  }
  Matrix Pd(int n, double floor = 0.5) {
    return Psd(n) + floor * Matrix::Identity(n, n);
  }

  MatrixCollection Collection(int modes, int n, double scale = 1.0) {
    std::vector<Matrix> out;
    for (int i = 0; i < modes; ++i) out.push_back(Dense(n, n, scale));
    return MatrixCollection(out);
  }
  MatrixCollection SymmetricCollection(int modes, int n) {
    std::vector<Matrix> out;
    for (int i = 0; i < modes; ++i) out.push_back(Symmetric(n));
    return MatrixCollection(out);
  }
  MatrixCollection PsdCollection(int modes, int n) {
    std::vector<Matrix> out;
    for (int i = 0; i < modes; ++i) out.push_back(Psd(n));
    return MatrixCollection(out);
  }

  // Valid generator; each off-diagonal rate is zero with probability
  // `sparsity`, so random instances have nontrivial reachability.
  Matrix Generator(int modes, double sparsity = 0.0, double max_rate = 2.0) {
    Matrix g = Matrix::Zero(modes, modes);
    for (int i = 0; i < modes; ++i) {
      for (int j = 0; j < modes; ++j) {
        if (i == j || Coin(sparsity)) continue;
        g(i, j) = Uniform(0.0, max_rate);
      }
      g(i, i) = -g.row(i).sum();
    }
    return g;
  }

  Vector Distribution(int modes, double sparsity = 0.0) {
    Vector p = Vector::Zero(modes);
    while (p.sum() <= 0.0) {
      for (int i = 0; i < modes; ++i) {
        p(i) = Coin(sparsity) ? 0.0 : Uniform(0.1, 1.0);
      }
    }
    return p / p.sum();
  }

  // Random well-posed time-invariant instance with deterministic x0.
  ProblemInstance Problem(int modes, int n, int m, double horizon,
                          double sparsity = 0.0) {
    ProblemInstance p;
    for (int i = 0; i < modes; ++i) {
      p.dynamics.emplace_back(Dense(n, n));
      p.input.emplace_back(Dense(n, m));
      p.state_weight.emplace_back(Psd(n, 0.7));
      p.input_weight.emplace_back(Pd(m));
      p.terminal_weight.push_back(Psd(n, 0.7));
    }
    p.generator = Generator(modes, sparsity);
    p.phi = Distribution(modes, sparsity);
    p.horizon = horizon;
    p.initial_state.mean = Dense(n, 1).col(0);
    return p;
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

}  // namespace mjls::testing
