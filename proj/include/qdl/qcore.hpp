#pragma once

// Dense linear algebra for small N-qubit systems: states, observables,
// the transverse-field Ising Hamiltonian family and stepwise unitary
// evolution of the density matrix. Units: hbar = 1, time in ns, every
// Hamiltonian coefficient is an angular frequency in rad/ns.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <concepts>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qdl {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;

inline constexpr int kMaxQubits = 6;

namespace tolerance {
inline constexpr double hermitian = 1e-12;
inline constexpr double trace = 1e-10;
inline constexpr double positivity = 1e-9;
inline constexpr double expectation_imag = 1e-10;
}  // namespace tolerance

inline int qubits_for_dim(Eigen::Index dim) {
  int n = 0;
  while ((Eigen::Index{1} << n) < dim) ++n;
  if ((Eigen::Index{1} << n) != dim || n < 1 || n > kMaxQubits)
    throw std::invalid_argument("dimension " + std::to_string(dim) +
                                " is not 2^N with 1 <= N <= 6");
  return n;
}

inline double max_abs(const CMatrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline double hermiticity_error(const CMatrix& m) {
  return max_abs(m - m.adjoint());
}

// ---------------------------------------------------------------------------
// Observable

class Observable {
 public:
  Observable() = default;
  explicit Observable(CMatrix matrix, std::string label = {})
      : matrix_(std::move(matrix)), label_(std::move(label)) {
    if (matrix_.rows() != matrix_.cols())
      throw std::invalid_argument("observable must be square");
    num_qubits_ = qubits_for_dim(matrix_.rows());
    if (hermiticity_error(matrix_) > tolerance::hermitian)
      throw std::invalid_argument("observable is not Hermitian");
  }

  const CMatrix& matrix() const { return matrix_; }
  const std::string& label() const { return label_; }
  Eigen::Index dim() const { return matrix_.rows(); }
  int num_qubits() const { return num_qubits_; }

 private:
  CMatrix matrix_;
  std::string label_;
  int num_qubits_ = 0;
};

// ---------------------------------------------------------------------------
// DensityMatrix

struct StateDiagnostics {
  double hermitian_error = 0.0;
  double trace_error = 0.0;
  double min_eigenvalue = 0.0;

  bool valid() const {
    return hermitian_error <= tolerance::hermitian &&
           trace_error <= tolerance::trace &&
           min_eigenvalue >= -tolerance::positivity;
  }
};

inline StateDiagnostics diagnose_state(const CMatrix& rho) {
  StateDiagnostics d;
  d.hermitian_error = hermiticity_error(rho);
  d.trace_error = std::abs(rho.trace() - Complex(1.0, 0.0));
  const CMatrix sym = 0.5 * (rho + rho.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> es(sym, Eigen::EigenvaluesOnly);
  d.min_eigenvalue = es.eigenvalues().minCoeff();
  return d;
}

class DensityMatrix {
 public:
  DensityMatrix() = default;

  // Validates every invariant; throws std::invalid_argument on violation.
  explicit DensityMatrix(CMatrix rho) : rho_(std::move(rho)) {
    if (rho_.rows() != rho_.cols())
      throw std::invalid_argument("density matrix must be square");
    num_qubits_ = qubits_for_dim(rho_.rows());
    const auto d = diagnose_state(rho_);
    if (d.hermitian_error > tolerance::hermitian)
      throw std::invalid_argument("density matrix is not Hermitian");
    if (d.trace_error > tolerance::trace)
      throw std::invalid_argument("density matrix trace is not 1");
    if (d.min_eigenvalue < -tolerance::positivity)
      throw std::invalid_argument("density matrix is not positive semidefinite");
  }

  // For matrices produced by unitary conjugation of a valid state.
  static DensityMatrix trusted(CMatrix rho) {
    DensityMatrix out;
    out.num_qubits_ = qubits_for_dim(rho.rows());
    out.rho_ = std::move(rho);
    return out;
  }

  // |psi><psi| for a (not necessarily normalized) amplitude vector.
  static DensityMatrix pure(const CVector& psi) {
    const double norm = psi.norm();
    if (norm == 0.0) throw std::invalid_argument("zero state vector");
    const CVector v = psi / norm;
    CMatrix rho = v * v.adjoint();
    rho = 0.5 * (rho + rho.adjoint()).eval();
    return DensityMatrix(std::move(rho));
  }

  static DensityMatrix maximally_mixed(int num_qubits) {
    const Eigen::Index dim = Eigen::Index{1} << num_qubits;
    return DensityMatrix(CMatrix::Identity(dim, dim) / static_cast<double>(dim));
  }

  const CMatrix& matrix() const { return rho_; }
  Eigen::Index dim() const { return rho_.rows(); }
  int num_qubits() const { return num_qubits_; }

 private:
  CMatrix rho_;
  int num_qubits_ = 0;
};

// ---------------------------------------------------------------------------
// Pauli operators. Qubit 0 is the leftmost Kronecker factor, i.e. the most
// significant bit of the computational-basis index.

enum class PauliAxis { x, y, z };

inline CMatrix pauli(PauliAxis axis) {
  CMatrix s(2, 2);
  switch (axis) {
    case PauliAxis::x: s << 0, 1, 1, 0; break;
    case PauliAxis::y: s << 0, Complex(0, -1), Complex(0, 1), 0; break;
    case PauliAxis::z: s << 1, 0, 0, -1; break;
  }
  return s;
}

inline CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline Observable pauli_embed(PauliAxis axis, int qubit, int num_qubits) {
  if (num_qubits < 1 || num_qubits > kMaxQubits)
    throw std::invalid_argument("num_qubits out of range");
  if (qubit < 0 || qubit >= num_qubits)
    throw std::out_of_range("qubit index " + std::to_string(qubit) +
                            " out of range");
  CMatrix out = CMatrix::Identity(1, 1);
  for (int q = 0; q < num_qubits; ++q)
    out = kron(out, q == qubit ? pauli(axis) : CMatrix::Identity(2, 2));
  const char* names = "XYZ";
  return Observable(std::move(out), std::string(1, names[static_cast<int>(axis)]) +
                                        std::to_string(qubit));
}

// sigma_z^(a) sigma_z^(b): the default witness measurement.
inline Observable zz_observable(int a, int b, int num_qubits) {
  if (a == b) throw std::invalid_argument("zz observable needs two distinct qubits");
  CMatrix m = pauli_embed(PauliAxis::z, a, num_qubits).matrix() *
              pauli_embed(PauliAxis::z, b, num_qubits).matrix();
  return Observable(std::move(m), "Z" + std::to_string(a) + "Z" + std::to_string(b));
}

// ---------------------------------------------------------------------------
// Hamiltonian family
//   H = sum_i K_i X_i + sum_i eps_i Z_i + sum_{i<j} zeta_ij Z_i Z_j

enum class ParamKind { tunneling = 0, bias = 1, coupling = 2 };

inline constexpr ParamKind kAllKinds[] = {ParamKind::tunneling, ParamKind::bias,
                                          ParamKind::coupling};

inline const char* kind_name(ParamKind kind) {
  switch (kind) {
    case ParamKind::tunneling: return "tunneling";
    case ParamKind::bias: return "bias";
    case ParamKind::coupling: return "coupling";
  }
  return "?";
}

inline int pair_count(int num_qubits) { return num_qubits * (num_qubits - 1) / 2; }

// Lexicographic (i<j) index of a qubit pair and its inverse.
inline int pair_index(int i, int j, int num_qubits) {
  if (i > j) std::swap(i, j);
  if (i == j || i < 0 || j >= num_qubits) throw std::out_of_range("bad qubit pair");
  return i * (2 * num_qubits - i - 1) / 2 + (j - i - 1);
}

inline std::pair<int, int> pair_qubits(int index, int num_qubits) {
  for (int i = 0; i < num_qubits; ++i)
    for (int j = i + 1; j < num_qubits; ++j)
      if (index-- == 0) return {i, j};
  throw std::out_of_range("pair index out of range");
}

inline int site_count(ParamKind kind, int num_qubits) {
  return kind == ParamKind::coupling ? pair_count(num_qubits) : num_qubits;
}

struct HamiltonianParams {
  std::vector<double> tunneling;  // K_i
  std::vector<double> bias;       // eps_i
  RMatrix coupling;               // zeta_ij, symmetric, zero diagonal

  static HamiltonianParams zeros(int num_qubits) {
    return {std::vector<double>(num_qubits, 0.0), std::vector<double>(num_qubits, 0.0),
            RMatrix::Zero(num_qubits, num_qubits)};
  }

  int num_qubits() const { return static_cast<int>(tunneling.size()); }

  void validate() const {
    const auto n = static_cast<Eigen::Index>(tunneling.size());
    if (n < 1 || n > kMaxQubits) throw std::invalid_argument("num_qubits out of range");
    if (static_cast<Eigen::Index>(bias.size()) != n || coupling.rows() != n ||
        coupling.cols() != n)
      throw std::invalid_argument("Hamiltonian parameter sizes disagree");
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!std::isfinite(tunneling[i]) || !std::isfinite(bias[i]))
        throw std::invalid_argument("non-finite Hamiltonian parameter");
      if (coupling(i, i) != 0.0) throw std::invalid_argument("self-coupling must be zero");
      for (Eigen::Index j = 0; j < n; ++j) {
        if (!std::isfinite(coupling(i, j)))
          throw std::invalid_argument("non-finite coupling");
        if (coupling(i, j) != coupling(j, i))
          throw std::invalid_argument("coupling matrix must be symmetric");
      }
    }
  }
};

namespace detail {
inline int bit_of(Eigen::Index basis, int qubit, int num_qubits) {
  return static_cast<int>((basis >> (num_qubits - 1 - qubit)) & 1);
}
inline double z_sign(Eigen::Index basis, int qubit, int num_qubits) {
  return bit_of(basis, qubit, num_qubits) ? -1.0 : 1.0;
}
}  // namespace detail

// The family is real symmetric; this is the fast path used by evolution.
inline RMatrix hamiltonian_real(const HamiltonianParams& p) {
  const int n = p.num_qubits();
  const Eigen::Index dim = Eigen::Index{1} << n;
  RMatrix h = RMatrix::Zero(dim, dim);
  for (Eigen::Index b = 0; b < dim; ++b) {
    double diag = 0.0;
    for (int i = 0; i < n; ++i) {
      h(b ^ (Eigen::Index{1} << (n - 1 - i)), b) += p.tunneling[i];
      diag += p.bias[i] * detail::z_sign(b, i, n);
      for (int j = i + 1; j < n; ++j)
        diag += p.coupling(i, j) * detail::z_sign(b, i, n) * detail::z_sign(b, j, n);
    }
    h(b, b) = diag;
  }
  return h;
}

inline Observable build_hamiltonian(const HamiltonianParams& p) {
  p.validate();
  return Observable(hamiltonian_real(p).cast<Complex>(), "H");
}

// dH/d(parameter) for one physical site: X_i, Z_i or Z_i Z_j.
inline RMatrix term_generator(ParamKind kind, int site, int num_qubits) {
  auto p = HamiltonianParams::zeros(num_qubits);
  switch (kind) {
    case ParamKind::tunneling: p.tunneling.at(site) = 1.0; break;
    case ParamKind::bias: p.bias.at(site) = 1.0; break;
    case ParamKind::coupling: {
      const auto [i, j] = pair_qubits(site, num_qubits);
      p.coupling(i, j) = p.coupling(j, i) = 1.0;
      break;
    }
  }
  return hamiltonian_real(p);
}

// ---------------------------------------------------------------------------
// Time grid and propagation

struct TimeGrid {
  double final_time = 1000.0;  // ns
  int steps = 200;

  void validate() const {
    if (!(final_time > 0.0) || !std::isfinite(final_time))
      throw std::invalid_argument("final time must be positive");
    if (steps < 1) throw std::invalid_argument("time grid needs at least one step");
  }
  double dt() const { return final_time / steps; }
  double time(int k) const { return k == steps ? final_time : k * dt(); }
  double midpoint(int k) const { return (k + 0.5) * dt(); }
};

// exp(-i H dt) for Hermitian H.
inline CMatrix unitary_exp(const CMatrix& h, double dt) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("eigendecomposition failed (non-Hermitian Hamiltonian?)");
  const CVector phases =
      (es.eigenvalues().cast<Complex>() * Complex(0.0, -dt)).array().exp().matrix();
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

inline CMatrix unitary_exp(const RMatrix& h, double dt) {
  Eigen::SelfAdjointEigenSolver<RMatrix> es(h);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("eigendecomposition failed (non-Hermitian Hamiltonian?)");
  const CVector phases =
      (es.eigenvalues().cast<Complex>() * Complex(0.0, -dt)).array().exp().matrix();
  const CMatrix v = es.eigenvectors().cast<Complex>();
  return v * phases.asDiagonal() * v.transpose();
}

template <class S>
concept HamiltonianSchedule = requires(const S& s, double t) {
  { s.eval(t) } -> std::convertible_to<HamiltonianParams>;
};

// One unitary per grid step, with H sampled at the step midpoint.
template <HamiltonianSchedule S>
std::vector<CMatrix> step_propagators(const S& schedule, const TimeGrid& grid) {
  grid.validate();
  std::vector<CMatrix> out;
  out.reserve(grid.steps);
  for (int k = 0; k < grid.steps; ++k)
    out.push_back(unitary_exp(hamiltonian_real(schedule.eval(grid.midpoint(k))), grid.dt()));
  return out;
}

inline CMatrix conjugate(const CMatrix& u, const CMatrix& m) {
  CMatrix out = u * m * u.adjoint();
  return out;
}

inline std::vector<DensityMatrix> evolve(const DensityMatrix& rho0,
                                         const std::vector<CMatrix>& propagators) {
  std::vector<DensityMatrix> traj;
  traj.reserve(propagators.size() + 1);
  traj.push_back(rho0);
  for (const auto& u : propagators) {
    if (u.rows() != rho0.dim()) throw std::invalid_argument("propagator dimension mismatch");
    traj.push_back(DensityMatrix::trusted(conjugate(u, traj.back().matrix())));
  }
  return traj;
}

// Full trajectory rho(t_k), k = 0..M.
template <HamiltonianSchedule S>
std::vector<DensityMatrix> evolve(const DensityMatrix& rho0, const S& schedule,
                                  const TimeGrid& grid) {
  return evolve(rho0, step_propagators(schedule, grid));
}

// rho(T) only; no trajectory storage.
template <HamiltonianSchedule S>
DensityMatrix evolve_final(const DensityMatrix& rho0, const S& schedule, const TimeGrid& grid) {
  grid.validate();
  CMatrix rho = rho0.matrix();
  for (int k = 0; k < grid.steps; ++k) {
    const auto h = hamiltonian_real(schedule.eval(grid.midpoint(k)));
    if (h.rows() != rho.rows()) throw std::invalid_argument("schedule/state dimension mismatch");
    rho = conjugate(unitary_exp(h, grid.dt()), rho);
  }
  return DensityMatrix::trusted(std::move(rho));
}

// ---------------------------------------------------------------------------
// Measurement

inline double expectation(const DensityMatrix& rho, const Observable& o) {
  if (rho.dim() != o.dim()) throw std::invalid_argument("state/observable dimension mismatch");
  const Complex v = (rho.matrix() * o.matrix()).trace();
  if (std::abs(v.imag()) > tolerance::expectation_imag)
    throw std::runtime_error("expectation value has an imaginary part");
  return v.real();
}

enum class OutputMap { identity, square };

inline double apply_map(OutputMap f, double x) { return f == OutputMap::square ? x * x : x; }
inline double map_derivative(OutputMap f, double x) {
  return f == OutputMap::square ? 2.0 * x : 1.0;
}

inline const char* map_name(OutputMap f) {
  return f == OutputMap::square ? "square" : "identity";
}

inline OutputMap parse_output_map(const std::string& name) {
  if (name == "square") return OutputMap::square;
  if (name == "identity") return OutputMap::identity;
  throw std::invalid_argument("unknown output map '" + name + "'");
}

inline double output_value(const DensityMatrix& rho, const Observable& o, OutputMap f) {
  return apply_map(f, expectation(rho, o));
}

}  // namespace qdl
