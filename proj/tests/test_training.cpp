#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace qdl;
using namespace qdl::testing;

namespace {

Schedule default_fourier(Tying tying = Tying::all()) {
  return Schedule::fourier(2, 1000.0, 3, tying, {2.5e-3, 1e-4, 1e-4});
}

WitnessTask task(int steps = 200) { return WitnessTask::standard(2, {1000.0, steps}); }

// Central difference of the pair loss with respect to one coefficient.
double central_difference(const CoefficientId& c, const TrainingPair& pair, const Schedule& s,
                          const WitnessTask& t, double h) {
  Schedule plus = s, minus = s;
  plus.set_value(c, s.value(c) + h);
  minus.set_value(c, s.value(c) - h);
  return (pair_error(pair, plus, t) - pair_error(pair, minus, t)) / (2 * h);
}

}  // namespace

// --- Adjoint boundary and field ----------------------------------------------

TEST(AdjointBoundary, KnownValues) {
  const auto zz = zz_observable(0, 1, 2);
  const auto bell = DensityMatrix::pure(states::ghz(2));
  EXPECT_LE(max_abs(adjoint_boundary(bell, zz, 1.0, OutputMap::square)), 1e-15);
  const CMatrix half = adjoint_boundary(bell, zz, 1.5, OutputMap::identity);
  EXPECT_LE(max_abs(half - 0.5 * zz.matrix()), 1e-15);
  const auto mixed = DensityMatrix::maximally_mixed(2);
  EXPECT_EQ(max_abs(adjoint_boundary(mixed, zz, 0.7, OutputMap::square)), 0.0);
}

TEST(AdjointField, ZeroHamiltonianKeepsFieldConstant) {
  const auto s = Schedule::fourier(2, 1000.0, 3, Tying::all(), {});
  const CMatrix b = zz_observable(0, 1, 2).matrix();
  for (const auto& a : adjoint_evolve_backward(b, s, {1000.0, 20}).values)
    EXPECT_LE(max_abs(a - b), 1e-15);
}

TEST(AdjointField, ZeroBoundaryGivesZeroField) {
  const auto s = default_fourier();
  for (const auto& a : adjoint_evolve_backward(CMatrix::Zero(4, 4), s, {1000.0, 20}).values)
    EXPECT_EQ(max_abs(a), 0.0);
}

TEST(WeightGradient, ZeroFieldGivesZero) {
  const auto s = default_fourier();
  const TimeGrid g{1000.0, 20};
  const auto rho = evolve(DensityMatrix::pure(states::ghz(2)), s, g);
  AdjointField a;
  a.values.assign(21, CMatrix::Zero(4, 4));
  for (const auto& c : list_trainable(s, {1, 1, 1}))
    EXPECT_EQ(weight_gradient(c, rho, a, s, g), 0.0);
}

TEST(WeightGradient, VanishingCommutatorGivesZero) {
  // Diagonal state under a diagonal Hamiltonian: [Z0Z1, rho(t)] = 0.
  const auto s = Schedule::fourier(2, 1000.0, 3, Tying::all(), {0.0, 1e-3, 2e-3});
  const TimeGrid g{1000.0, 20};
  const auto rho = evolve(DensityMatrix::pure(states::basis(2, 1)), s, g);
  const auto a = adjoint_evolve_backward(pauli_embed(PauliAxis::x, 0, 2).matrix(), s, g);
  EXPECT_NEAR(weight_gradient({ParamKind::coupling, 0, BasisTerm::sine(2)}, rho, a, s, g), 0.0,
              1e-15);
}

TEST(WeightGradient, RejectsMismatchedTrajectories) {
  const auto s = default_fourier();
  const auto rho = evolve(DensityMatrix::pure(states::ghz(2)), s, {1000.0, 20});
  const auto a = adjoint_evolve_backward(CMatrix::Zero(4, 4), s, {1000.0, 10});
  EXPECT_THROW(weight_gradient({ParamKind::tunneling, 0, BasisTerm::constant()}, rho, a, s,
                               {1000.0, 20}),
               std::invalid_argument);
}

// --- Adjoint properties --------------------------------------------------------

TEST(Property, PairingIsConservedAlongTrajectories) {
  Rng rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    auto s = Schedule::fourier(2, 1000.0, 3, Tying::none(), {});
    randomize(s, rng, 3e-3);
    const auto props = step_propagators(s, {1000.0, 100});
    const auto rho = evolve(random_mixed(rng, 2), props);
    const auto a = adjoint_evolve_backward(random_mixed(rng, 2).matrix(), props);
    const Complex first = (a.values[0] * rho[0].matrix()).trace();
    for (std::size_t k = 0; k < rho.size(); ++k)
      EXPECT_LE(std::abs((a.values[k] * rho[k].matrix()).trace() - first), 1e-10);
  }
}

TEST(Property, AdjointMatchesCentralDifference) {
  Rng rng(32);
  const auto pairs = build_training_set(2);
  const auto t = task(400);
  for (int trial = 0; trial < 4; ++trial) {
    auto s = Schedule::fourier(2, 1000.0, 2, Tying::none(), {});
    randomize(s, rng, 3e-3);
    const auto& pair = pairs[trial % pairs.size()];
    const auto coeffs = list_trainable(s, {1, 1, 1});
    const auto report = pair_gradients(coeffs, pair, s, t);
    EXPECT_LE(report.imag_residual, kGradientImagTolerance);
    for (std::size_t c = 0; c < coeffs.size(); ++c) {
      const double fd = central_difference(coeffs[c], pair, s, t, 1e-9);
      const double g = report.gradients[c];
      EXPECT_TRUE(std::abs(g - fd) <= 1e-4 * std::abs(fd) || std::abs(g - fd) <= 1e-10)
          << describe(s, coeffs[c]) << " adjoint " << g << " fd " << fd;
    }
  }
}

TEST(Property, BackpropUsesTwoSolvesPerPair) {
  BackpropConfig c;
  c.epochs = 2;
  c.wall_clock = false;
  const auto r = train_backprop(build_training_set(2), default_fourier(Tying::none()), task(50), c);
  EXPECT_EQ(r.log.training_solves_per_epoch, (std::vector<long>{8, 8}));
}

// --- Backprop training ---------------------------------------------------------

TEST(Backprop, ZeroRatesLeaveScheduleUnchanged) {
  BackpropConfig c;
  c.learning_rates = {0, 0, 0};
  c.epochs = 3;
  const auto s = default_fourier();
  const auto r = train_backprop(build_training_set(2), s, task(50), c);
  EXPECT_EQ(r.schedule, s);
  for (const auto& e : r.log.epochs) EXPECT_EQ(e.rms, r.log.initial_rms);
}

TEST(Backprop, ExactFitGivesNoUpdate) {
  const auto s = default_fourier();
  const auto t = task(50);
  const auto rho0 = DensityMatrix::pure(states::ghz_family(2, 0.6, 0.8));
  const double out = witness_output(s, rho0, t);
  BackpropConfig c;
  c.epochs = 1;
  const auto r = train_backprop({TrainingPair(rho0, out)}, s, t, c);
  for (const auto& coeff : list_trainable(s, c.learning_rates))
    EXPECT_NEAR(r.schedule.value(coeff), s.value(coeff), 1e-18);
}

TEST(Backprop, DefaultRatesReachReachTwoPercent) {
  BackpropConfig c;
  c.epochs = 600;
  c.wall_clock = false;
  const auto r = train_backprop(build_training_set(2), default_fourier(), task(), c);
  double best = r.log.initial_rms;
  for (const auto& e : r.log.epochs) best = std::min(best, e.rms);
  EXPECT_LE(best, 0.02);
  EXPECT_LT(r.log.epochs.back().rms, r.log.initial_rms);
}

TEST(Backprop, PerEpochAccumulationIsDistinct) {
  BackpropConfig a, b;
  a.epochs = b.epochs = 2;
  b.update = UpdatePolicy::per_epoch;
  const auto pairs = build_training_set(2);
  const auto ra = train_backprop(pairs, default_fourier(), task(50), a);
  const auto rb = train_backprop(pairs, default_fourier(), task(50), b);
  EXPECT_NE(ra.schedule, rb.schedule);
}

TEST(Backprop, DivergenceGuardTrips) {
  BackpropConfig c;
  c.learning_rates = {1e-2, 1e-2, 1e-2};
  c.epochs = 50;
  c.divergence_factor = 1.0;
  EXPECT_THROW(train_backprop(build_training_set(2), default_fourier(), task(50), c),
               DivergenceError);
}

// --- Finite-difference (RL) gradients ------------------------------------------

TEST(RL, PairErrorKnownValues) {
  const auto zero = Schedule::fourier(2, 1000.0, 3, Tying::all(), {});
  const auto bell = DensityMatrix::pure(states::ghz(2));
  EXPECT_NEAR(pair_error(TrainingPair(bell, 1.0), zero, task(20)), 0.0, 1e-15);
  // Output 0 for the maximally mixed state.
  EXPECT_NEAR(pair_error(TrainingPair(DensityMatrix::maximally_mixed(2), 1.0), zero, task(20)),
              0.5, 1e-15);
}

TEST(RL, QuotientArithmetic) {
  RLConfig c;
  c.perturb_rel = 1e-3;
  c.perturb_floor = {1e-9, 1e-9, 1e-9};
  auto s = Schedule::fourier(1, 10.0, 0, Tying::all(), {1.0, 0.0, 0.0});
  const CoefficientId id{ParamKind::tunneling, 0, BasisTerm::constant()};
  const auto error = [](const Schedule&) { return 0.51; };
  EXPECT_NEAR(fd_quotient(id, s, 0.50, error, c), 10.0, 1e-9);
  const auto same = [](const Schedule&) { return 0.5; };
  EXPECT_EQ(fd_quotient(id, s, 0.5, same, c), 0.0);
}

TEST(RL, PerturbationUsesFloorForZeroCoefficients) {
  RLConfig c;
  EXPECT_DOUBLE_EQ(perturbation(c, ParamKind::tunneling, 0.0), c.perturb_floor[ParamKind::tunneling]);
  EXPECT_DOUBLE_EQ(perturbation(c, ParamKind::tunneling, 1.0), 2e-4);
}

TEST(Property, FiniteDifferenceRestoresSchedule) {
  Rng rng(33);
  auto s = default_fourier(Tying::none());
  randomize(s, rng, 3e-3);
  const auto copy = s;
  const auto pair = build_training_set(2)[3];
  RLConfig c;
  for (const auto& coeff : list_trainable(s, {1, 1, 1})) {
    (void)fd_gradient(coeff, pair, s, task(50), c);
    ASSERT_EQ(s, copy);
  }
}

TEST(Property, FiniteDifferenceAgreesWithAdjoint) {
  Rng rng(34);
  auto s = default_fourier(Tying::none());
  randomize(s, rng, 3e-3);
  const auto pair = build_training_set(2)[3];
  const auto t = task(200);
  const auto coeffs = list_trainable(s, {1, 1, 1});
  const auto adj = pair_gradients(coeffs, pair, s, t).gradients;
  RLConfig c;
  c.perturb_floor = {1e-10, 1e-10, 1e-10};
  double scale = 0.0;
  for (double g : adj) scale = std::max(scale, std::abs(g));
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    const double fd = fd_gradient(coeffs[i], pair, s, t, c);
    EXPECT_LE(std::abs(fd - adj[i]), 1e-2 * std::max(std::abs(adj[i]), 1e-3 * scale))
        << describe(s, coeffs[i]);
  }
}

TEST(Property, FiniteDifferenceConvergesAtFirstOrder) {
  Rng rng(35);
  auto s = default_fourier(Tying::none());
  randomize(s, rng, 3e-3);
  const auto pair = build_training_set(2)[1];
  const auto t = task(200);
  const CoefficientId id{ParamKind::tunneling, 1, BasisTerm::constant()};
  const double exact = pair_gradients({id}, pair, s, t).gradients[0];
  std::vector<double> errors;
  for (double rel : {1e-1, 1e-2, 1e-3}) {
    RLConfig c;
    c.perturb_rel = rel;
    c.perturb_floor = {1e-12, 1e-12, 1e-12};
    errors.push_back(std::abs(fd_gradient(id, pair, s, t, c) - exact));
  }
  // Each tenfold step reduction shrinks the error roughly tenfold.
  EXPECT_GT(errors[0] / errors[1], 5.0);
  EXPECT_GT(errors[1] / errors[2], 5.0);
}

TEST(RL, ZeroRatesLeaveScheduleUnchanged) {
  RLConfig c;
  c.learning_rates = {0, 0, 0};
  const auto s = default_fourier();
  EXPECT_EQ(train_rl_epoch(build_training_set(2), s, task(50), c).schedule, s);
}

TEST(RL, SolveCountsFollowNominalPolicy) {
  const auto pairs = build_training_set(2);
  RLConfig c;
  SolveCounter per_pair, per_coeff;
  (void)train_rl_epoch(pairs, default_fourier(Tying::none()), task(20), c, &per_pair);
  c.nominal = NominalPolicy::per_coefficient;
  (void)train_rl_epoch(pairs, default_fourier(Tying::none()), task(20), c, &per_coeff);
  EXPECT_EQ(per_pair.training, 4 * (1 + 21));
  EXPECT_EQ(per_coeff.training, 4 * 2 * 21);
  EXPECT_EQ(per_pair.reporting, 4);
}

TEST(Property, RLTrainingIsDeterministic) {
  RLConfig c;
  c.epochs = 3;
  c.wall_clock = false;
  const auto pairs = build_training_set(2);
  const auto a = train_rl(pairs, default_fourier(), task(50), c);
  const auto b = train_rl(pairs, default_fourier(), task(50), c);
  EXPECT_EQ(a.schedule, b.schedule);
  ASSERT_EQ(a.log.epochs.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(a.log.epochs[i].rms, b.log.epochs[i].rms);
}

TEST(RL, TrainingReducesErrorOnDefaultRatesReach) {
  RLConfig c;
  c.epochs = 40;
  c.wall_clock = false;
  const auto r = train_rl(build_training_set(2), default_fourier(), task(), c);
  EXPECT_LT(r.log.epochs.back().rms, r.log.initial_rms);
}

TEST(RL, EpochCallbackSeesEveryEpoch) {
  RLConfig c;
  c.epochs = 3;
  std::vector<int> seen;
  (void)train_rl(build_training_set(2), default_fourier(), task(20), c,
                 [&](int e, const Schedule&) { seen.push_back(e); });
  EXPECT_EQ(seen, (std::vector<int>{0, 1, 2, 3}));
}

TEST(RL, RejectsBadConfig) {
  RLConfig c;
  c.perturb_rel = 0.0;
  EXPECT_THROW(train_rl(build_training_set(2), default_fourier(), task(20), c),
               std::invalid_argument);
  EXPECT_THROW(train_rl({}, default_fourier(), task(20), RLConfig{}), std::invalid_argument);
}
