#pragma once

// Hardware-style mode: piecewise-constant weights compiled to one unitary per
// segment, computational-basis sampling with optional depolarizing and
// readout noise, and per-weight finite-difference training against the
// whole-set RMS error.

#include "qdl/backprop.hpp"
#include "qdl/qcore.hpp"
#include "qdl/rl.hpp"
#include "qdl/schedules.hpp"
#include "qdl/training.hpp"
#include "qdl/witness.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace qdl {

struct SegmentedCircuit {
  std::vector<CMatrix> unitaries;
  Schedule source;
};

inline SegmentedCircuit compile_segments(const Schedule& schedule) {
  if (schedule.mode() != ScheduleMode::piecewise)
    throw std::invalid_argument("circuit mode needs a piecewise schedule");
  const int segments = schedule.segments();
  const double tau = schedule.final_time() / segments;
  SegmentedCircuit c{{}, schedule};
  c.unitaries.reserve(segments);
  for (int s = 0; s < segments; ++s)
    c.unitaries.push_back(unitary_exp(hamiltonian_real(schedule.eval((s + 0.5) * tau)), tau));
  return c;
}

struct ShotBackend {
  std::optional<long> shots;  // empty: exact probabilities
  double p_dep = 0.0;         // depolarizing probability after each segment
  double p_ro = 0.0;          // independent per-qubit readout flip probability
  std::uint64_t seed = 1;

  bool exact() const { return !shots.has_value(); }

  void validate() const {
    if (!(p_dep >= 0.0 && p_dep <= 1.0)) throw std::invalid_argument("p_dep must lie in [0, 1]");
    if (!(p_ro >= 0.0 && p_ro <= 1.0)) throw std::invalid_argument("p_ro must lie in [0, 1]");
    if (shots && *shots < 1) throw std::invalid_argument("shots must be >= 1");
  }
};

// Outcome tallies indexed by basis state (qubit 0 = most significant bit).
// In exact mode `values` holds probabilities and `shots` is 0.
struct Counts {
  int num_qubits = 0;
  bool exact = false;
  long shots = 0;
  std::vector<double> values;

  std::string bitstring(std::size_t index) const {
    std::string s(num_qubits, '0');
    for (int q = 0; q < num_qubits; ++q)
      if ((index >> (num_qubits - 1 - q)) & 1) s[q] = '1';
    return s;
  }
};

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  // splitmix64 finalizer over a combined word
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline CMatrix apply_circuit(const SegmentedCircuit& circuit, const DensityMatrix& rho0,
                             double p_dep = 0.0) {
  CMatrix rho = rho0.matrix();
  const auto dim = rho.rows();
  for (const auto& u : circuit.unitaries) {
    if (u.rows() != dim) throw std::invalid_argument("circuit/state dimension mismatch");
    rho = conjugate(u, rho);
    if (p_dep > 0.0)
      rho = (1.0 - p_dep) * rho + (p_dep / static_cast<double>(dim)) * CMatrix::Identity(dim, dim);
  }
  return rho;
}

// Measurement distribution after independent per-qubit readout flips.
inline std::vector<double> readout_distribution(const CMatrix& rho, double p_ro) {
  const int n = qubits_for_dim(rho.rows());
  std::vector<double> p(rho.rows());
  for (Eigen::Index i = 0; i < rho.rows(); ++i) p[i] = std::max(rho(i, i).real(), 0.0);
  if (p_ro > 0.0) {
    for (int q = 0; q < n; ++q) {
      const std::size_t mask = std::size_t{1} << (n - 1 - q);
      std::vector<double> flipped(p.size());
      for (std::size_t i = 0; i < p.size(); ++i)
        flipped[i] = (1.0 - p_ro) * p[i] + p_ro * p[i ^ mask];
      p.swap(flipped);
    }
  }
  return p;
}

inline Counts run_shots(const SegmentedCircuit& circuit, const DensityMatrix& rho0,
                        const ShotBackend& backend) {
  backend.validate();
  const CMatrix rho = apply_circuit(circuit, rho0, backend.p_dep);
  auto probs = readout_distribution(rho, backend.p_ro);

  Counts c;
  c.num_qubits = rho0.num_qubits();
  if (backend.exact()) {
    c.exact = true;
    c.values = std::move(probs);
    return c;
  }

  // Inverse-CDF sampling: nearby distributions driven by the same seed give
  // nearly identical tallies.
  std::vector<double> cdf(probs.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) cdf[i] = (acc += probs[i]);
  c.shots = *backend.shots;
  c.values.assign(probs.size(), 0.0);
  std::mt19937_64 rng(backend.seed);
  for (long s = 0; s < c.shots; ++s) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53 * acc;
    std::size_t i = 0;
    while (i + 1 < cdf.size() && u >= cdf[i]) ++i;
    c.values[i] += 1.0;
  }
  return c;
}

// <Z_a Z_b> from tallies.
inline double estimate_zz(const Counts& counts, int a = 0, int b = 1) {
  double total = 0.0, signed_sum = 0.0;
  for (std::size_t i = 0; i < counts.values.size(); ++i) {
    const int parity = detail::bit_of(static_cast<Eigen::Index>(i), a, counts.num_qubits) ^
                       detail::bit_of(static_cast<Eigen::Index>(i), b, counts.num_qubits);
    total += counts.values[i];
    signed_sum += parity ? -counts.values[i] : counts.values[i];
  }
  if (!(total > 0.0)) throw std::invalid_argument("no shots recorded");
  return signed_sum / total;
}

inline double estimate_output(const Counts& counts, OutputMap map = OutputMap::square, int a = 0,
                              int b = 1) {
  return apply_map(map, estimate_zz(counts, a, b));
}

// Outputs for every training pair; `stream` selects the sampling seeds so
// that evaluations sharing a stream use common random numbers.
using SetEvaluator = std::function<std::vector<double>(const Schedule&, std::uint64_t stream)>;

inline SetEvaluator circuit_evaluator(const std::vector<TrainingPair>& pairs, ShotBackend backend,
                                      OutputMap map = OutputMap::square, int a = 0, int b = 1) {
  backend.validate();
  return [pairs, backend, map, a, b](const Schedule& s, std::uint64_t stream) {
    const auto circuit = compile_segments(s);
    std::vector<double> out;
    out.reserve(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      ShotBackend shot = backend;
      shot.seed = mix_seed(mix_seed(backend.seed, stream), i);
      out.push_back(estimate_output(run_shots(circuit, pairs[i].input, shot), map, a, b));
    }
    return out;
  };
}

// Continuum integrator on a grid aligned with the segment boundaries.
inline SetEvaluator continuum_evaluator(const std::vector<TrainingPair>& pairs,
                                        const WitnessTask& task) {
  return [pairs, task](const Schedule& s, std::uint64_t) {
    if (s.mode() == ScheduleMode::piecewise && task.grid.steps % s.segments() != 0)
      throw std::invalid_argument("grid steps must be a multiple of the segment count");
    return witness_outputs(s, pairs, task);
  };
}

inline constexpr std::uint64_t kReportStream = 0x8000000000000000ULL;

// Each epoch: E_nom = whole-set RMS, then for each weight in list_trainable
// order E_mod with that weight nudged, gradient quotient and update. All
// evaluations inside one epoch share a sampling stream.
inline TrainResult train_circuit_rl(const std::vector<TrainingPair>& pairs, Schedule schedule,
                                    const RLConfig& config, const SetEvaluator& evaluate,
                                    const EpochCallback& on_epoch = {}) {
  if (pairs.empty()) throw std::invalid_argument("training set is empty");
  if (schedule.mode() != ScheduleMode::piecewise)
    throw std::invalid_argument("circuit training needs a piecewise schedule");
  config.validate();
  const auto coeffs = list_trainable(schedule, config.learning_rates);
  const auto set_rms = [&](const Schedule& s, std::uint64_t stream) {
    return rms_error(pairs, evaluate(s, stream));
  };
  const long per_eval = static_cast<long>(pairs.size());
  WallClock clock(config.wall_clock);

  EpochLog log;
  log.initial_rms = set_rms(schedule, kReportStream);
  log.solves.reporting += per_eval;
  if (on_epoch) on_epoch(0, schedule);
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto stream = static_cast<std::uint64_t>(epoch);
    const auto error = [&](const Schedule& s) { return set_rms(s, stream); };
    const long evals = fd_sweep(schedule, coeffs, error, config);
    log.solves.training += evals * per_eval;
    log.training_solves_per_epoch.push_back(evals * per_eval);
    const double rms = set_rms(schedule, kReportStream | stream);
    log.solves.reporting += per_eval;
    log.epochs.push_back({epoch, rms, clock.seconds()});
    if (on_epoch) on_epoch(epoch, schedule);
    check_divergence(epoch, rms, log.initial_rms, config.divergence_factor);
  }
  return {std::move(schedule), std::move(log)};
}

inline TrainResult train_circuit_rl(const std::vector<TrainingPair>& pairs, Schedule schedule,
                                    const RLConfig& config, const ShotBackend& backend,
                                    OutputMap map = OutputMap::square,
                                    const EpochCallback& on_epoch = {}) {
  return train_circuit_rl(pairs, std::move(schedule), config,
                          circuit_evaluator(pairs, backend, map), on_epoch);
}

}  // namespace qdl
