#pragma once

// Adjoint ("quantum backprop") gradients. The costate is carried as a single
// matrix A(t) (the outer product of the row/column multipliers). It starts at
//
//   A(T) = [d - f(<O>)] f'(<O>) O
//
// and is propagated backward by the same step unitaries as the state,
// A(t_k) = U_k^dag A(t_{k+1}) U_k. In the continuum the weight gradient is
//
//   dL/dw = i * integral tr( A(t) [dH/dw(t), rho(t)] ) dt;
//
// here it is taken as the exact derivative of the discretized evolution
// (see gradients_from_trajectories), which tends to the integral as dt -> 0
// and agrees with finite differences of the forward model to round-off.

#include "qdl/qcore.hpp"
#include "qdl/schedules.hpp"
#include "qdl/training.hpp"
#include "qdl/witness.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace qdl {

inline constexpr double kGradientImagTolerance = 1e-8;

inline CMatrix adjoint_boundary(const DensityMatrix& rho_final, const Observable& o,
                                double target, OutputMap map) {
  const double expval = expectation(rho_final, o);
  return ((target - apply_map(map, expval)) * map_derivative(map, expval)) * o.matrix();
}

struct AdjointField {
  std::vector<CMatrix> values;  // A(t_k), k = 0..M
};

inline AdjointField adjoint_evolve_backward(const CMatrix& boundary,
                                            const std::vector<CMatrix>& propagators) {
  AdjointField a;
  a.values.resize(propagators.size() + 1);
  a.values.back() = boundary;
  for (std::size_t k = propagators.size(); k-- > 0;) {
    const CMatrix& u = propagators[k];
    if (u.rows() != boundary.rows()) throw std::invalid_argument("adjoint dimension mismatch");
    a.values[k] = u.adjoint() * a.values[k + 1] * u;
  }
  return a;
}

template <HamiltonianSchedule S>
AdjointField adjoint_evolve_backward(const CMatrix& boundary, const S& schedule,
                                     const TimeGrid& grid) {
  return adjoint_evolve_backward(boundary, step_propagators(schedule, grid));
}

namespace detail {

inline void check_trajectories(const std::vector<DensityMatrix>& rho, const AdjointField& a,
                               const TimeGrid& grid) {
  const auto points = static_cast<std::size_t>(grid.steps) + 1;
  if (rho.size() != points || a.values.size() != points)
    throw std::invalid_argument("trajectories do not match the time grid");
}

// Eigenbasis of one step Hamiltonian plus the divided differences of
// lambda -> exp(-i lambda dt), which turn a generator G into the derivative
// of the step unitary: dU = V (Phi o (V^T G V)) V^T.
struct StepDerivative {
  CMatrix v;
  CVector phases;  // exp(-i lambda dt)
  CMatrix phi;

  StepDerivative(const RMatrix& h, double dt) {
    Eigen::SelfAdjointEigenSolver<RMatrix> es(h);
    if (es.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");
    v = es.eigenvectors().cast<Complex>();
    const Eigen::VectorXd& lambda = es.eigenvalues();
    const auto n = lambda.size();
    phi.resize(n, n);
    const Complex minus_i(0.0, -1.0);
    phases = (lambda.cast<Complex>() * Complex(0.0, -dt)).array().exp().matrix();
    for (Eigen::Index a = 0; a < n; ++a)
      for (Eigen::Index b = 0; b < n; ++b) {
        const double gap = lambda(a) - lambda(b);
        const Complex ea = phases(a);
        if (std::abs(gap * dt) < 1e-6) {
          // Series of the divided difference around coinciding eigenvalues.
          phi(a, b) = minus_i * dt * ea * (1.0 + 0.5 * Complex(0.0, 1.0) * gap * dt);
        } else {
          phi(a, b) = (ea - phases(b)) / gap;
        }
      }
  }
};

}  // namespace detail

struct GradientReport {
  std::vector<double> gradients;  // one per requested coefficient
  double output = 0.0;            // f(<O>) at the final time
  double output_error = 0.0;      // d - f(<O>)
  double imag_residual = 0.0;     // largest |Im| discarded across coefficients
};

// Gradients of L = 0.5 (d - f(<O>))^2 for every coefficient in `coeffs`,
// from one forward and one backward pass. Each step contributes
//
//   -tr(A_{k+1} [dU_k rho_k U_k^dag + U_k rho_k dU_k^dag]) b(t_k + dt/2)
//
// with dU_k the derivative of the step exponential along the channel
// generator, so the result is the exact gradient of the discretized model;
// as dt -> 0 it reduces to i * integral tr(A [dH/dw, rho]) dt.
inline GradientReport gradients_from_trajectories(const std::vector<CoefficientId>& coeffs,
                                                  const std::vector<DensityMatrix>& rho,
                                                  const AdjointField& a, const Schedule& schedule,
                                                  const TimeGrid& grid) {
  detail::check_trajectories(rho, a, grid);

  // Generators are per channel; cache them for the kinds in use.
  std::vector<std::vector<RMatrix>> generators(3);
  for (const auto& c : coeffs) {
    schedule.check(c);
    auto& g = generators[static_cast<int>(c.kind)];
    if (g.empty())
      for (int ch = 0; ch < schedule.channel_count(c.kind); ++ch)
        g.push_back(schedule.channel_generator(c.kind, ch));
  }

  const double dt = grid.dt();
  std::vector<Complex> acc(coeffs.size(), Complex(0.0, 0.0));
  std::vector<std::vector<Complex>> per_channel(3);
  for (int k = 0; k < grid.steps; ++k) {
    const double t = grid.midpoint(k);
    const detail::StepDerivative step(hamiltonian_real(schedule.eval(t)), dt);
    const CMatrix& v = step.v;
    const CVector phases = step.phases;
    // In the step eigenbasis: R = V^dag rho_k V, Ahat = V^dag A_{k+1} V.
    const CMatrix r = v.adjoint() * rho[k].matrix() * v;
    const CMatrix ahat = v.adjoint() * a.values[k + 1] * v;
    // tr(A dU rho U^dag)  = sum_ab D_ab Y_ba,        Y = R e^* Ahat
    // tr(A U rho dU^dag)  = sum_ab conj(D_ba) Z_ab,  Z = Ahat e R
    // with D = Phi o (V^dag G V) the eigenbasis derivative of the step.
    const CMatrix y = r * phases.conjugate().asDiagonal() * ahat;
    const CMatrix z = ahat * phases.asDiagonal() * r;
    for (int kind = 0; kind < 3; ++kind) {
      auto& out = per_channel[kind];
      out.assign(generators[kind].size(), Complex(0.0, 0.0));
      for (std::size_t ch = 0; ch < generators[kind].size(); ++ch) {
        const CMatrix d = step.phi.cwiseProduct(v.adjoint() * generators[kind][ch] * v);
        out[ch] = d.cwiseProduct(y.transpose()).sum() + d.conjugate().cwiseProduct(z).sum();
      }
    }
    for (std::size_t c = 0; c < coeffs.size(); ++c)
      acc[c] -= per_channel[static_cast<int>(coeffs[c].kind)][coeffs[c].channel] *
                schedule.basis_value(coeffs[c], t);
  }

  GradientReport report;
  report.gradients.reserve(coeffs.size());
  for (const auto& g : acc) {
    report.gradients.push_back(g.real());
    report.imag_residual = std::max(report.imag_residual, std::abs(g.imag()));
  }
  return report;
}

inline double weight_gradient(const CoefficientId& coeff, const std::vector<DensityMatrix>& rho,
                              const AdjointField& a, const Schedule& schedule,
                              const TimeGrid& grid) {
  return gradients_from_trajectories({coeff}, rho, a, schedule, grid).gradients.front();
}

// Full forward/backward pass for one training pair.
inline GradientReport pair_gradients(const std::vector<CoefficientId>& coeffs,
                                     const TrainingPair& pair, const Schedule& schedule,
                                     const WitnessTask& task, SolveCounter* counter = nullptr) {
  const auto props = step_propagators(schedule, task.grid);
  const auto rho = evolve(pair.input, props);
  const double expval = expectation(rho.back(), task.observable);
  const CMatrix boundary = adjoint_boundary(rho.back(), task.observable, pair.target, task.map);
  const auto a = adjoint_evolve_backward(boundary, props);
  if (counter) counter->training += 2;
  auto report = gradients_from_trajectories(coeffs, rho, a, schedule, task.grid);
  report.output = apply_map(task.map, expval);
  report.output_error = pair.target - report.output;
  return report;
}

enum class UpdatePolicy { per_pair, per_epoch };

struct BackpropConfig {
  PerKind<double> learning_rates{2e-7, 0.0, 4e-7};
  int epochs = 100;
  UpdatePolicy update = UpdatePolicy::per_pair;
  double divergence_factor = 10.0;
  bool wall_clock = true;

  void validate() const {
    for (ParamKind k : kAllKinds)
      if (!(learning_rates[k] >= 0.0)) throw std::invalid_argument("learning rates must be >= 0");
    if (epochs < 0) throw std::invalid_argument("epochs must be >= 0");
    if (!(divergence_factor > 0.0)) throw std::invalid_argument("divergence factor must be > 0");
  }
};

struct TrainResult {
  Schedule schedule;
  EpochLog log;
};

inline TrainResult train_backprop(const std::vector<TrainingPair>& pairs, Schedule schedule,
                                  const WitnessTask& task, const BackpropConfig& config,
                                  const EpochCallback& on_epoch = {}) {
  if (pairs.empty()) throw std::invalid_argument("training set is empty");
  config.validate();
  const auto coeffs = list_trainable(schedule, config.learning_rates);
  WallClock clock(config.wall_clock);

  EpochLog log;
  log.initial_rms = rms_error(pairs, witness_outputs(schedule, pairs, task));
  log.solves.reporting += static_cast<long>(pairs.size());
  if (on_epoch) on_epoch(0, schedule);

  const auto apply = [&](Schedule& s, const std::vector<double>& grad) {
    for (std::size_t c = 0; c < coeffs.size(); ++c)
      s.set_value(coeffs[c],
                  s.value(coeffs[c]) - config.learning_rates[coeffs[c].kind] * grad[c]);
  };

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const long before = log.solves.training;
    std::vector<double> accumulated(coeffs.size(), 0.0);
    for (const auto& pair : pairs) {
      const auto report = pair_gradients(coeffs, pair, schedule, task, &log.solves);
      if (config.update == UpdatePolicy::per_pair) {
        apply(schedule, report.gradients);
      } else {
        for (std::size_t c = 0; c < coeffs.size(); ++c) accumulated[c] += report.gradients[c];
      }
    }
    if (config.update == UpdatePolicy::per_epoch) apply(schedule, accumulated);
    log.training_solves_per_epoch.push_back(log.solves.training - before);

    const double rms = rms_error(pairs, witness_outputs(schedule, pairs, task));
    log.solves.reporting += static_cast<long>(pairs.size());
    log.epochs.push_back({epoch, rms, clock.seconds()});
    if (on_epoch) on_epoch(epoch, schedule);
    check_divergence(epoch, rms, log.initial_rms, config.divergence_factor);
  }
  return {std::move(schedule), std::move(log)};
}

}  // namespace qdl
