#pragma once

// Bookkeeping shared by the trainers: per-epoch log, solve counters and the
// divergence guard.

#include "qdl/schedules.hpp"
#include "qdl/witness.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace qdl {

struct EpochRecord {
  int epoch = 0;
  double rms = 0.0;
  double wall_seconds = 0.0;
};

// A "solve" is one sweep of the time grid (forward evolution or backward
// adjoint propagation). Training solves feed parameter updates; reporting
// solves only compute the logged RMS.
struct SolveCounter {
  long training = 0;
  long reporting = 0;
};

struct EpochLog {
  double initial_rms = 0.0;
  std::vector<EpochRecord> epochs;
  SolveCounter solves;
  std::vector<long> training_solves_per_epoch;
};

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(int epoch, double rms, double limit)
      : std::runtime_error("training diverged at epoch " + std::to_string(epoch) + ": rms " +
                           std::to_string(rms) + " exceeds " + std::to_string(limit)),
        epoch_(epoch),
        rms_(rms) {}
  int epoch() const { return epoch_; }
  double rms() const { return rms_; }

 private:
  int epoch_;
  double rms_;
};

inline void check_divergence(int epoch, double rms, double initial_rms, double factor) {
  const double limit = factor * std::max(initial_rms, 1e-12);
  if (!std::isfinite(rms) || rms > limit) throw DivergenceError(epoch, rms, limit);
}

// Called after every epoch (epoch 0 = before training) with the current
// schedule; used for parameter traces.
using EpochCallback = std::function<void(int epoch, const Schedule&)>;

inline double rms_error(const std::vector<TrainingPair>& pairs,
                        const std::vector<double>& outputs) {
  if (pairs.empty() || pairs.size() != outputs.size())
    throw std::invalid_argument("rms needs one output per training pair");
  double acc = 0.0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const double e = pairs[i].target - outputs[i];
    acc += e * e;
  }
  return std::sqrt(acc / static_cast<double>(pairs.size()));
}

template <HamiltonianSchedule S>
std::vector<double> witness_outputs(const S& schedule, const std::vector<TrainingPair>& pairs,
                                    const WitnessTask& task) {
  std::vector<double> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(witness_output(schedule, p.input, task));
  return out;
}

class WallClock {
 public:
  explicit WallClock(bool enabled) : enabled_(enabled), start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    if (!enabled_) return 0.0;
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  bool enabled_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace qdl
