#include "test_support.hpp"

#include <gtest/gtest.h>

#include <numbers>

using namespace qdl;
using namespace qdl::testing;

namespace {

CMatrix diag4(double a, double b, double c, double d) {
  CMatrix m = CMatrix::Zero(4, 4);
  m(0, 0) = a;
  m(1, 1) = b;
  m(2, 2) = c;
  m(3, 3) = d;
  return m;
}

struct ZeroSchedule {
  int n;
  HamiltonianParams eval(double) const { return HamiltonianParams::zeros(n); }
};

struct ConstantSchedule {
  HamiltonianParams p;
  HamiltonianParams eval(double) const { return p; }
};

}  // namespace

// --- Known values -----------------------------------------------------------

TEST(Pauli, SingleQubitZ) {
  const auto z = pauli_embed(PauliAxis::z, 0, 1);
  CMatrix expected(2, 2);
  expected << 1, 0, 0, -1;
  EXPECT_LE(max_abs(z.matrix() - expected), 0.0);
}

TEST(Pauli, XOnSecondOfTwoSwapsSecondQubit) {
  const auto x = pauli_embed(PauliAxis::x, 1, 2);
  CMatrix expected = CMatrix::Zero(4, 4);
  expected(0, 1) = expected(1, 0) = expected(2, 3) = expected(3, 2) = 1.0;
  EXPECT_LE(max_abs(x.matrix() - expected), 0.0);
}

TEST(Pauli, EverySquareIsIdentity) {
  for (int n = 1; n <= 3; ++n)
    for (int q = 0; q < n; ++q)
      for (auto axis : {PauliAxis::x, PauliAxis::y, PauliAxis::z}) {
        const CMatrix m = pauli_embed(axis, q, n).matrix();
        EXPECT_LE(max_abs(m * m - CMatrix::Identity(m.rows(), m.cols())), 1e-15);
      }
}

TEST(Pauli, QubitOutOfRangeThrows) {
  EXPECT_THROW(pauli_embed(PauliAxis::z, 2, 2), std::out_of_range);
}

TEST(Hamiltonian, ZeroParametersGiveZeroMatrix) {
  EXPECT_EQ(hamiltonian_real(HamiltonianParams::zeros(3)).norm(), 0.0);
}

TEST(Hamiltonian, OneQubitFromPauliAlgebra) {
  auto p = HamiltonianParams::zeros(1);
  p.tunneling[0] = 0.3;
  p.bias[0] = -0.7;
  RMatrix expected(2, 2);
  expected << -0.7, 0.3, 0.3, 0.7;
  EXPECT_LE((hamiltonian_real(p) - expected).cwiseAbs().maxCoeff(), 1e-16);
}

TEST(Hamiltonian, CouplingOnlyIsZZSpectrum) {
  auto p = HamiltonianParams::zeros(2);
  p.coupling(0, 1) = p.coupling(1, 0) = 0.25;
  EXPECT_LE(max_abs(build_hamiltonian(p).matrix() - diag4(0.25, -0.25, -0.25, 0.25)), 1e-16);
}

TEST(Hamiltonian, RejectsAsymmetricCoupling) {
  auto p = HamiltonianParams::zeros(2);
  p.coupling(0, 1) = 1.0;
  EXPECT_THROW(build_hamiltonian(p), std::invalid_argument);
}

TEST(Evolve, ZeroHamiltonianKeepsStateConstant) {
  Rng rng(1);
  const auto rho0 = random_mixed(rng, 2);
  const auto traj = evolve(rho0, ZeroSchedule{2}, {100.0, 50});
  ASSERT_EQ(traj.size(), 51u);
  for (const auto& r : traj) EXPECT_LE(max_abs(r.matrix() - rho0.matrix()), 1e-15);
}

TEST(Evolve, PiOverTwoTunnelingFlipsQubit) {
  auto p = HamiltonianParams::zeros(1);
  const double t = 100.0;
  p.tunneling[0] = std::numbers::pi / 2 / t;
  const auto rho = evolve_final(DensityMatrix::pure(states::zeros(1)), ConstantSchedule{p}, {t, 37});
  CMatrix expected = CMatrix::Zero(2, 2);
  expected(1, 1) = 1.0;
  EXPECT_LE(max_abs(rho.matrix() - expected), 1e-12);
}

TEST(Evolve, DiagonalStateUnderDiagonalHamiltonianIsConstant) {
  auto p = HamiltonianParams::zeros(2);
  p.bias = {0.01, -0.02};
  p.coupling(0, 1) = p.coupling(1, 0) = 0.03;
  const DensityMatrix rho0(diag4(0.1, 0.2, 0.3, 0.4));
  for (const auto& r : evolve(rho0, ConstantSchedule{p}, {500.0, 40}))
    EXPECT_LE(max_abs(r.matrix() - rho0.matrix()), 1e-15);
}

TEST(Expectation, KnownValues) {
  const auto zz = zz_observable(0, 1, 2);
  EXPECT_NEAR(expectation(DensityMatrix::pure(states::ghz(2)), zz), 1.0, 1e-15);
  EXPECT_NEAR(expectation(DensityMatrix::pure(states::basis(2, 1)), zz), -1.0, 1e-15);
  EXPECT_NEAR(expectation(DensityMatrix::maximally_mixed(2), zz), 0.0, 1e-15);
  EXPECT_NEAR(expectation(DensityMatrix::maximally_mixed(2), pauli_embed(PauliAxis::x, 0, 2)),
              0.0, 1e-15);
}

TEST(OutputMap, KnownValues) {
  EXPECT_DOUBLE_EQ(apply_map(OutputMap::square, -1.0), 1.0);
  EXPECT_DOUBLE_EQ(apply_map(OutputMap::identity, 0.5), 0.5);
  EXPECT_NEAR(output_value(DensityMatrix::pure(states::ghz(2)), zz_observable(0, 1, 2),
                           OutputMap::square),
              1.0, 1e-15);
  EXPECT_THROW(parse_output_map("cube"), std::invalid_argument);
}

// --- Validation -------------------------------------------------------------

TEST(DensityMatrix, RejectsInvalidStates) {
  EXPECT_THROW(DensityMatrix(diag4(0.5, 0.5, 0.5, 0.5)), std::invalid_argument);  // trace 2
  EXPECT_THROW(DensityMatrix(diag4(1.2, -0.2, 0.0, 0.0)), std::invalid_argument);  // negative
  CMatrix nonherm = diag4(0.25, 0.25, 0.25, 0.25);
  nonherm(0, 1) = 0.1;
  EXPECT_THROW(DensityMatrix{nonherm}, std::invalid_argument);
  EXPECT_THROW(DensityMatrix(CMatrix::Identity(3, 3) / 3.0), std::invalid_argument);
  EXPECT_THROW(DensityMatrix::pure(CVector::Zero(4)), std::invalid_argument);
}

TEST(Observable, RejectsNonHermitian) {
  CMatrix m = CMatrix::Zero(2, 2);
  m(0, 1) = 1.0;
  EXPECT_THROW(Observable{m}, std::invalid_argument);
}

TEST(TimeGrid, RejectsBadGrids) {
  EXPECT_THROW(evolve_final(DensityMatrix::maximally_mixed(1), ZeroSchedule{1}, {0.0, 10}),
               std::invalid_argument);
  EXPECT_THROW(evolve_final(DensityMatrix::maximally_mixed(1), ZeroSchedule{1}, {1.0, 0}),
               std::invalid_argument);
}

TEST(TimeGrid, LastPointIsExactlyFinalTime) {
  const TimeGrid g{1000.0, 7};
  EXPECT_EQ(g.time(7), 1000.0);
  EXPECT_EQ(g.time(0), 0.0);
}

// --- Properties -------------------------------------------------------------

TEST(Property, StepUnitariesAreUnitary) {
  Rng rng(2);
  for (int n = 1; n <= 6; ++n)
    for (int trial = 0; trial < 5; ++trial) {
      const auto h = hamiltonian_real(random_params(rng, n, 0.05));
      EXPECT_LE(unitarity_error(unitary_exp(h, uniform(rng, 0.1, 50.0))), 1e-12) << "N=" << n;
    }
}

TEST(Property, TrajectoriesStayPhysical) {
  Rng rng(3);
  for (int n = 1; n <= 6; ++n) {
    auto s = Schedule::fourier(n, 200.0, 2, Tying::none(), {});
    randomize(s, rng, 0.02);
    for (const auto& r : evolve(random_mixed(rng, n), s, {200.0, 50}))
      EXPECT_TRUE(diagnose_state(r.matrix()).valid()) << "N=" << n;
  }
}

TEST(Property, StepHalvingConvergesForSmoothSchedules) {
  Rng rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    auto s = Schedule::fourier(2, 1000.0, 3, Tying::none(), {});
    randomize(s, rng, 2e-3);
    const auto rho0 = DensityMatrix::pure(random_pure(rng, 2));
    const auto a = evolve_final(rho0, s, {1000.0, 200}).matrix();
    const auto b = evolve_final(rho0, s, {1000.0, 400}).matrix();
    const auto c = evolve_final(rho0, s, {1000.0, 800}).matrix();
    const double e1 = max_abs(a - c), e2 = max_abs(b - c);
    // At 2e-3 rad/ns amplitudes the 5 ns step leaves a ~1e-5 discretization
    // error; the check is on its order, not on an absolute level.
    EXPECT_LE(max_abs(a - b), 1e-4);
    // Second order: halving the step cuts the error by about four.
    if (e1 > 1e-13) EXPECT_GT(e1 / e2, 3.0);
  }
}

TEST(Property, AlignedPiecewiseSchedulesAreExact) {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    auto s = Schedule::piecewise(2, 40.0, 4, Tying::none(), {});
    randomize(s, rng, 0.1);
    const auto rho0 = random_mixed(rng, 2);
    const auto coarse = evolve_final(rho0, s, {40.0, 4}).matrix();
    const auto fine = evolve_final(rho0, s, {40.0, 400}).matrix();
    EXPECT_LE(max_abs(coarse - fine), 1e-12);
  }
}
