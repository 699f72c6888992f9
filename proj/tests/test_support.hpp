#pragma once

// Shared helpers for the test suites: seeded random states, Hamiltonians,
// schedules and local unitaries.

#include "qdl/qdl.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace qdl::testing {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline CVector random_pure(Rng& rng, int num_qubits) {
  std::normal_distribution<double> g;
  CVector v(Eigen::Index{1} << num_qubits);
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = Complex(g(rng), g(rng));
  return v / v.norm();
}

// Full-rank mixed state from a random Ginibre matrix.
inline DensityMatrix random_mixed(Rng& rng, int num_qubits) {
  std::normal_distribution<double> g;
  const Eigen::Index dim = Eigen::Index{1} << num_qubits;
  CMatrix a(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i)
    for (Eigen::Index j = 0; j < dim; ++j) a(i, j) = Complex(g(rng), g(rng));
  CMatrix rho = a * a.adjoint();
  rho /= rho.trace();
  rho = 0.5 * (rho + rho.adjoint()).eval();
  return DensityMatrix(rho);
}

inline HamiltonianParams random_params(Rng& rng, int num_qubits, double scale) {
  auto p = HamiltonianParams::zeros(num_qubits);
  for (int i = 0; i < num_qubits; ++i) {
    p.tunneling[i] = uniform(rng, -scale, scale);
    p.bias[i] = uniform(rng, -scale, scale);
  }
  for (int i = 0; i < num_qubits; ++i)
    for (int j = i + 1; j < num_qubits; ++j)
      p.coupling(i, j) = p.coupling(j, i) = uniform(rng, -scale, scale);
  return p;
}

// Every coefficient drawn uniformly in [-scale, scale] (rad/ns).
inline void randomize(Schedule& s, Rng& rng, double scale) {
  for (ParamKind k : kAllKinds)
    for (int ch = 0; ch < s.channel_count(k); ++ch)
      for (double& v : s.channel(k, ch)) v = uniform(rng, -scale, scale);
}

inline CMatrix random_su2(Rng& rng) {
  const double a = uniform(rng, 0.0, 2 * std::numbers::pi);
  const double b = uniform(rng, 0.0, 2 * std::numbers::pi);
  const double c = uniform(rng, 0.0, 2 * std::numbers::pi);
  CMatrix u(2, 2);
  const Complex i(0.0, 1.0);
  u << std::exp(i * a) * std::cos(b), std::exp(i * c) * std::sin(b),
      -std::exp(-i * c) * std::sin(b), std::exp(-i * a) * std::cos(b);
  return u;
}

inline double unitarity_error(const CMatrix& u) {
  return max_abs(u * u.adjoint() - CMatrix::Identity(u.rows(), u.cols()));
}

}  // namespace qdl::testing
