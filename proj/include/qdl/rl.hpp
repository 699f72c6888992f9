#pragma once

// Hybrid finite-difference reinforcement learning: nudge one coefficient,
// re-run the system, take (E_mod - E_nom) / delta as the gradient and step
// that coefficient immediately.

#include "qdl/backprop.hpp"
#include "qdl/qcore.hpp"
#include "qdl/schedules.hpp"
#include "qdl/training.hpp"
#include "qdl/witness.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace qdl {

// When E_nom is measured. per_pair: once per pair (or per update cycle) on a
// snapshot, every E_mod perturbs that snapshot. per_coefficient: re-measured
// on the live schedule before each coefficient's perturbation.
enum class NominalPolicy { per_pair, per_coefficient };

struct RLConfig {
  double perturb_rel = 2e-4;
  PerKind<double> perturb_floor{2e-4 * 2.5e-3, 2e-4 * 1e-4, 2e-4 * 1e-4};
  PerKind<double> learning_rates{2e-7, 0.0, 4e-7};
  int epochs = 2000;
  std::uint64_t seed = 1;
  NominalPolicy nominal = NominalPolicy::per_pair;
  double divergence_factor = 10.0;
  bool wall_clock = true;

  void validate() const {
    if (!(perturb_rel > 0.0)) throw std::invalid_argument("perturb_rel must be > 0");
    for (ParamKind k : kAllKinds) {
      if (!(perturb_floor[k] > 0.0)) throw std::invalid_argument("perturb_floor must be > 0");
      if (!(learning_rates[k] >= 0.0)) throw std::invalid_argument("learning rates must be >= 0");
    }
    if (epochs < 0) throw std::invalid_argument("epochs must be >= 0");
    if (!(divergence_factor > 0.0)) throw std::invalid_argument("divergence factor must be > 0");
  }

  // Floors set to perturb_rel times each kind's initialization scale.
  static PerKind<double> floors_for(const PerKind<double>& init, double rel = 2e-4) {
    PerKind<double> f;
    for (ParamKind k : kAllKinds) f[k] = rel * (init[k] != 0.0 ? std::abs(init[k]) : 1e-4);
    return f;
  }
};

inline double perturbation(const RLConfig& config, ParamKind kind, double value) {
  return std::max(config.perturb_rel * std::abs(value), config.perturb_floor[kind]);
}

inline double pair_error(const TrainingPair& pair, const Schedule& schedule,
                         const WitnessTask& task) {
  const double e = pair.target - witness_output(schedule, pair.input, task);
  return 0.5 * e * e;
}

// One-sided difference quotient. The caller's schedule is never modified.
template <class ErrorFn>
double fd_quotient(const CoefficientId& coeff, const Schedule& schedule, double e_nom,
                   ErrorFn&& error, const RLConfig& config) {
  const double value = schedule.value(coeff);
  const double delta = perturbation(config, coeff.kind, value);
  Schedule modified = schedule;
  modified.set_value(coeff, value + delta);
  return (error(modified) - e_nom) / delta;
}

inline double fd_gradient(const CoefficientId& coeff, const TrainingPair& pair,
                          const Schedule& schedule, const WitnessTask& task,
                          const RLConfig& config) {
  const auto error = [&](const Schedule& s) { return pair_error(pair, s, task); };
  return fd_quotient(coeff, schedule, error(schedule), error, config);
}

// One update cycle over `coeffs` against a scalar error functional. Returns
// the number of error evaluations performed.
template <class ErrorFn>
long fd_sweep(Schedule& schedule, const std::vector<CoefficientId>& coeffs, ErrorFn&& error,
              const RLConfig& config) {
  long evaluations = 0;
  const auto counted = [&](const Schedule& s) {
    ++evaluations;
    return error(s);
  };
  if (config.nominal == NominalPolicy::per_pair) {
    const Schedule snapshot = schedule;
    const double e_nom = counted(snapshot);
    for (const auto& c : coeffs) {
      const double g = fd_quotient(c, snapshot, e_nom, counted, config);
      schedule.set_value(c, schedule.value(c) - config.learning_rates[c.kind] * g);
    }
  } else {
    for (const auto& c : coeffs) {
      const double g = fd_quotient(c, schedule, counted(schedule), counted, config);
      schedule.set_value(c, schedule.value(c) - config.learning_rates[c.kind] * g);
    }
  }
  return evaluations;
}

struct RLEpochResult {
  Schedule schedule;
  double rms = 0.0;
};

// Pairs in order; within each pair every trainable coefficient in
// list_trainable order. RMS is measured after all updates.
inline RLEpochResult train_rl_epoch(const std::vector<TrainingPair>& pairs, Schedule schedule,
                                    const WitnessTask& task, const RLConfig& config,
                                    SolveCounter* counter = nullptr) {
  if (pairs.empty()) throw std::invalid_argument("training set is empty");
  config.validate();
  const auto coeffs = list_trainable(schedule, config.learning_rates);
  for (const auto& pair : pairs) {
    const auto error = [&](const Schedule& s) { return pair_error(pair, s, task); };
    const long solves = fd_sweep(schedule, coeffs, error, config);
    if (counter) counter->training += solves;
  }
  const double rms = rms_error(pairs, witness_outputs(schedule, pairs, task));
  if (counter) counter->reporting += static_cast<long>(pairs.size());
  return {std::move(schedule), rms};
}

inline TrainResult train_rl(const std::vector<TrainingPair>& pairs, Schedule schedule,
                            const WitnessTask& task, const RLConfig& config,
                            const EpochCallback& on_epoch = {}) {
  if (pairs.empty()) throw std::invalid_argument("training set is empty");
  config.validate();
  WallClock clock(config.wall_clock);
  EpochLog log;
  log.initial_rms = rms_error(pairs, witness_outputs(schedule, pairs, task));
  log.solves.reporting += static_cast<long>(pairs.size());
  if (on_epoch) on_epoch(0, schedule);
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const long before = log.solves.training;
    auto step = train_rl_epoch(pairs, std::move(schedule), task, config, &log.solves);
    schedule = std::move(step.schedule);
    log.training_solves_per_epoch.push_back(log.solves.training - before);
    log.epochs.push_back({epoch, step.rms, clock.seconds()});
    if (on_epoch) on_epoch(epoch, schedule);
    check_divergence(epoch, step.rms, log.initial_rms, config.divergence_factor);
  }
  return {std::move(schedule), std::move(log)};
}

}  // namespace qdl
