#pragma once

// Entanglement ground truth, training sets and generalization checks for a
// learned witness.

#include "qdl/qcore.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace qdl {

struct TrainingPair {
  DensityMatrix input;
  double target = 0.0;
  std::string label;

  TrainingPair(DensityMatrix rho0, double d, std::string name = {})
      : input(std::move(rho0)), target(d), label(std::move(name)) {
    if (!(d >= 0.0 && d <= 1.0)) throw std::invalid_argument("target must lie in [0, 1]");
  }
};

// What is measured at the final time and on which grid: shared by every
// trainer and by evaluation.
struct WitnessTask {
  Observable observable;
  OutputMap map = OutputMap::square;
  TimeGrid grid;

  static WitnessTask standard(int num_qubits, TimeGrid grid, OutputMap map = OutputMap::square) {
    return {zz_observable(0, 1, num_qubits), map, grid};
  }
};

namespace states {

inline CVector basis(int num_qubits, Eigen::Index index) {
  CVector v = CVector::Zero(Eigen::Index{1} << num_qubits);
  v(index) = 1.0;
  return v;
}

inline CVector zeros(int num_qubits) { return basis(num_qubits, 0); }

// a|0...0> + b|1...1>
inline CVector ghz_family(int num_qubits, Complex a, Complex b) {
  CVector v = CVector::Zero(Eigen::Index{1} << num_qubits);
  v(0) = a;
  v(v.size() - 1) = b;
  return v;
}

inline CVector ghz(int num_qubits) {
  return ghz_family(num_qubits, std::sqrt(0.5), std::sqrt(0.5));
}

inline CVector theta(int num_qubits, double angle) {
  return ghz_family(num_qubits, std::cos(angle), std::sin(angle));
}

// |0> (x) |+>^(N-1): uniform superposition of every string with qubit 0
// fixed to 0. For N = 2 this is (|00> + |01>)/sqrt(2).
inline CVector product_plus(int num_qubits) {
  const Eigen::Index half = Eigen::Index{1} << (num_qubits - 1);
  CVector v = CVector::Zero(2 * half);
  v.head(half).setConstant(1.0 / std::sqrt(static_cast<double>(half)));
  return v;
}

}  // namespace states

// Wootters concurrence of a two-qubit state.
inline double concurrence(const DensityMatrix& rho) {
  if (rho.dim() != 4) throw std::invalid_argument("concurrence needs a two-qubit state");
  const CMatrix yy = kron(pauli(PauliAxis::y), pauli(PauliAxis::y));
  const CMatrix& r = rho.matrix();

  // rho = W W^dag with W = V sqrt(p); the square roots of the eigenvalues of
  // rho * rho~ are the singular values of W^T (Y(x)Y) W. Eigenvalues of rho
  // at round-off level are dropped: their square roots (~1e-8) would
  // otherwise leak into the result.
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (r + r.adjoint()));
  const Eigen::VectorXd& p = es.eigenvalues();
  const double cutoff = 16.0 * std::numeric_limits<double>::epsilon() * p.cwiseAbs().maxCoeff();
  CMatrix w = CMatrix::Zero(4, 4);
  for (Eigen::Index i = 0; i < 4; ++i)
    if (p(i) > cutoff) w.col(i) = es.eigenvectors().col(i) * std::sqrt(p(i));
  const CMatrix tau = w.transpose() * yy * w;
  Eigen::JacobiSVD<CMatrix> svd(tau);
  const Eigen::VectorXd& lambda = svd.singularValues();  // descending
  const double c = lambda(0) - lambda(1) - lambda(2) - lambda(3);
  return std::clamp(c, 0.0, 1.0);
}

// 2|ab| for states a|0..0> + b|1..1>; NaN for anything outside that family.
inline double ghz_class_entanglement(const CVector& psi) {
  const double norm = psi.norm();
  if (norm == 0.0) throw std::invalid_argument("zero state vector");
  const CVector v = psi / norm;
  double rest = 0.0;
  for (Eigen::Index i = 1; i + 1 < v.size(); ++i) rest += std::norm(v(i));
  if (rest > 1e-24) return std::numeric_limits<double>::quiet_NaN();
  return std::min(1.0, 2.0 * std::abs(v(0)) * std::abs(v(v.size() - 1)));
}

// Wootters concurrence of a pure two-qubit state, |<psi| Y(x)Y |psi*>| =
// 2|a00 a11 - a01 a10|; exact near product states where the eigenvalue
// route loses precision.
inline double pure_concurrence(const CVector& psi) {
  if (psi.size() != 4) throw std::invalid_argument("concurrence needs a two-qubit state");
  const double norm2 = psi.squaredNorm();
  if (norm2 == 0.0) throw std::invalid_argument("zero state vector");
  return std::min(1.0, 2.0 * std::abs(psi(0) * psi(3) - psi(1) * psi(2)) / norm2);
}

// Oracle value for a pure state: Wootters for two qubits, GHZ-class
// monotone otherwise.
inline double entanglement_oracle(const CVector& psi) {
  const int n = qubits_for_dim(psi.size());
  if (n == 2) return pure_concurrence(psi);
  return ghz_class_entanglement(psi);
}

inline double target_for(double entanglement, OutputMap map) {
  return apply_map(map, entanglement);
}

// Four pure states: separable |0..0>, maximally entangled GHZ/Bell,
// separable product superposition and partially entangled 0.6|0..0> + 0.8|1..1>.
inline std::vector<TrainingPair> build_training_set(int num_qubits,
                                                    OutputMap map = OutputMap::square,
                                                    double partial_a = 0.6) {
  if (num_qubits < 2 || num_qubits > kMaxQubits)
    throw std::invalid_argument("training set supports 2..6 qubits");
  const double partial_b = std::sqrt(1.0 - partial_a * partial_a);
  const bool two = num_qubits == 2;
  struct Entry {
    CVector psi;
    const char* label;
    bool product;  // separable by construction
  };
  const Entry entries[] = {
      {states::zeros(num_qubits), "zeros", true},
      {states::ghz(num_qubits), two ? "bell" : "ghz", false},
      {states::product_plus(num_qubits), "product_plus", true},
      {states::ghz_family(num_qubits, partial_a, partial_b), "partial", false},
  };
  std::vector<TrainingPair> out;
  for (const auto& e : entries) {
    // The GHZ-class monotone is undefined off the family; product states are 0.
    const double ent = (two || !e.product) ? entanglement_oracle(e.psi) : 0.0;
    out.emplace_back(DensityMatrix::pure(e.psi), target_for(ent, map), e.label);
  }
  return out;
}

// Ranks starting at 1, ties receive the average of their positions.
inline std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
    i = j + 1;
  }
  return ranks;
}

inline double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("correlation needs two equal-length samples");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

inline double spearman(std::span<const double> x, std::span<const double> y) {
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

struct WitnessReport {
  std::vector<double> outputs;  // one per requested state
  std::vector<double> sweep_theta;
  std::vector<double> sweep_oracle;
  std::vector<double> sweep_outputs;
  double spearman = 0.0;
};

template <HamiltonianSchedule S>
double witness_output(const S& schedule, const DensityMatrix& rho0, const WitnessTask& task) {
  return output_value(evolve_final(rho0, schedule, task.grid), task.observable, task.map);
}

// Outputs for the given states plus the rank correlation against the oracle
// over cos(theta)|0..0> + sin(theta)|1..1>, theta = 0, pi/(2(P-1)), ..., pi/2.
template <HamiltonianSchedule S>
WitnessReport evaluate_witness(const S& schedule, const std::vector<DensityMatrix>& inputs,
                               const WitnessTask& task, int sweep_points = 21) {
  WitnessReport r;
  for (const auto& rho : inputs) r.outputs.push_back(witness_output(schedule, rho, task));
  const int n = task.observable.num_qubits();
  for (int k = 0; k < sweep_points; ++k) {
    const double theta = sweep_points == 1 ? 0.0 : k * (std::numbers::pi / 2) / (sweep_points - 1);
    const CVector psi = states::theta(n, theta);
    r.sweep_theta.push_back(theta);
    // Quantized so that mirror angles theta, pi/2 - theta tie exactly.
    r.sweep_oracle.push_back(std::round(entanglement_oracle(psi) * 1e12) / 1e12);
    r.sweep_outputs.push_back(witness_output(schedule, DensityMatrix::pure(psi), task));
  }
  if (sweep_points >= 2) r.spearman = spearman(r.sweep_outputs, r.sweep_oracle);
  return r;
}

}  // namespace qdl
