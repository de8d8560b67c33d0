#include <gtest/gtest.h>

#include "olmpc/dynamics.h"
#include "olmpc/errors.h"
#include "test_util.h"

namespace olmpc {
namespace {

using testing::naive_step;
using testing::random_system;

TEST(SimulateStep, ZeroDynamicsForwardsInput) {
  const SystemParams th(Matrix::Zero(2, 2), (Matrix(2, 1) << 1, 0).finished());
  const Vector x = simulate_step(th, Vector::Zero(2), Vector::Ones(1));
  EXPECT_EQ(x, (Vector(2) << 1, 0).finished());
}

TEST(SimulateStep, HalfIdentity) {
  const SystemParams th(0.5 * Matrix::Identity(2, 2), Matrix::Random(2, 1));
  const Vector x = simulate_step(th, Vector::Ones(2), Vector::Zero(1));
  EXPECT_EQ(x, (Vector(2) << 0.5, 0.5).finished());
}

TEST(SimulateStep, MatchesNaiveChain) {
  auto g = testing::rng(3);
  const SystemParams th = random_system(g, 2, 1);
  Vector x = testing::uniform_vector(g, 2, -1, 1), xr = x;
  for (int k = 0; k < 10; ++k) {
    const Vector u = testing::uniform_vector(g, 1, -1, 1);
    x = simulate_step(th, x, u);
    xr = naive_step(th.A(), th.B(), xr, u);
  }
  EXPECT_LE((x - xr).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(SimulateStep, DimensionMismatchThrows) {
  const SystemParams th(Matrix::Zero(2, 2), Matrix::Zero(2, 1));
  EXPECT_THROW(simulate_step(th, Vector::Zero(3), Vector::Zero(1)), ContractViolation);
  EXPECT_THROW(simulate_step(th, Vector::Zero(2), Vector::Zero(2)), ContractViolation);
}

TEST(SystemParams, RejectsBadShapesAndNonFinite) {
  EXPECT_THROW(SystemParams(Matrix::Zero(2, 3), Matrix::Zero(2, 1)), ContractViolation);
  EXPECT_THROW(SystemParams(Matrix::Zero(2, 2), Matrix::Zero(3, 1)), ContractViolation);
  Matrix A = Matrix::Zero(2, 2);
  A(0, 1) = std::nan("");
  EXPECT_THROW(SystemParams(A, Matrix::Zero(2, 1)), ContractViolation);
}

TEST(SystemParams, StackedRoundTrip) {
  auto g = testing::rng(4);
  const SystemParams th = random_system(g, 3, 2);
  const SystemParams back = SystemParams::from_stacked(th.stacked());
  EXPECT_EQ(back.A(), th.A());
  EXPECT_EQ(back.B(), th.B());
  EXPECT_DOUBLE_EQ(th.frobenius_norm(), th.stacked().norm());
}

TEST(Observe, ZeroNoiseIsExact) {
  const Vector x = Vector::Random(3);
  EXPECT_EQ(observe(x, {0.0, NoiseKind::kUniformBall, 9}, 5), x);
  EXPECT_EQ(observe(x, {0.3, NoiseKind::kZero, 9}, 5), x);
}

TEST(Observe, NoiseWithinBound) {
  const ObservationModel obs{0.1, NoiseKind::kUniformBall, 42};
  const Vector x = Vector::Random(2);
  double worst = 0.0, mean_norm = 0.0;
  for (int t = 1; t <= 10000; ++t) {
    const double e = (observe(x, obs, t) - x).norm();
    worst = std::max(worst, e);
    mean_norm += e / 10000;
  }
  EXPECT_LE(worst, 0.1);
  // Uniform on a disc: E|e| = 2/3 of the radius.
  EXPECT_NEAR(mean_norm, 0.1 * 2.0 / 3.0, 2e-3);
}

TEST(Observe, DeterministicInSeedAndTime) {
  const ObservationModel obs{0.5, NoiseKind::kUniformBall, 7};
  const Vector x = Vector::Ones(4);
  EXPECT_EQ(observe(x, obs, 11), observe(x, obs, 11));
  EXPECT_NE(observe(x, obs, 11), observe(x, obs, 12));
}

TEST(Rollout, EmptyInputs) {
  const SystemParams th(Matrix::Identity(2, 2), Matrix::Zero(2, 1));
  const Trajectory tr = rollout(th, Vector::Ones(2), {});
  ASSERT_EQ(tr.states.size(), 1u);
  EXPECT_EQ(tr.states[0], Vector::Ones(2));
}

TEST(Rollout, GeometricDecay) {
  const SystemParams th(0.5 * Matrix::Identity(2, 2), Matrix::Zero(2, 1));
  const Trajectory tr = rollout(th, Vector::Ones(2), std::vector<Vector>(8, Vector::Zero(1)));
  for (int k = 0; k <= 8; ++k) {
    EXPECT_EQ(tr.states[k], Vector::Constant(2, std::pow(0.5, k)));
  }
}

TEST(Rollout, MatchesStepwiseAndReplays) {
  auto g = testing::rng(5);
  const SystemParams th = random_system(g, 3, 2);
  const auto u = testing::random_inputs(g, 50, 2);
  const Vector x0 = testing::uniform_vector(g, 3, -1, 1);
  const Trajectory tr = rollout(th, x0, u);
  ASSERT_EQ(tr.states.size(), u.size() + 1);
  Vector x = x0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    x = simulate_step(th, x, u[k]);
    EXPECT_EQ(tr.states[k + 1], x);
  }
  EXPECT_LE(replay_residual(th, tr), 1e-12);
}

TEST(SpectralRadius, KnownValues) {
  EXPECT_NEAR(spectral_radius(0.5 * Matrix::Identity(3, 3)), 0.5, 1e-12);
  // Rotation scaled by 0.9: complex pair of modulus 0.9.
  Matrix R(2, 2);
  R << 0, -0.9, 0.9, 0;
  EXPECT_NEAR(spectral_radius(R), 0.9, 1e-12);
}

TEST(DecayCertificate, HalfIdentity) {
  const SystemParams th(0.5 * Matrix::Identity(2, 2), Matrix::Identity(2, 2));
  const DecayCertificate c = decay_certificate(th);
  EXPECT_NEAR(c.spectral_radius, 0.5, 1e-12);
  EXPECT_NEAR(c.gamma_rho, 0.25, 1e-12);
  EXPECT_NEAR(c.c_rho, 1.0, 1e-9);
  EXPECT_TRUE(verify_decay(th.A(), 1.0, 0.5, 200));
  // C0 = [I, 0.5 I] so C0 C0^T = 1.25 I.
  EXPECT_NEAR(c.kappa, 0.8, 1e-12);
}

TEST(DecayCertificate, ZeroDynamics) {
  const SystemParams th(Matrix::Zero(1, 1), Matrix::Ones(1, 1));
  const DecayCertificate c = decay_certificate(th);
  EXPECT_TRUE(verify_decay(th.A(), 1.0, 0.9, 50));
  EXPECT_GE(c.c_rho, 1.0);
}

TEST(DecayCertificate, RandomSystemsPassDirectPowering) {
  auto g = testing::rng(6);
  int checked = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const SystemParams th = random_system(g, 2, 1);
    DecayCertificate c;
    try {
      c = decay_certificate(th, 100);
    } catch (const UncontrollableError&) {
      continue;
    }
    ++checked;
    Matrix P = Matrix::Identity(2, 2);
    for (int k = 0; k <= 100; ++k) {
      const double norm2 = P.jacobiSvd().singularValues()(0);
      EXPECT_LE(norm2, c.c_rho * std::pow(1.0 - c.gamma_rho, k) * (1 + 1e-12));
      P = th.A() * P;
    }
    const Matrix C0 = controllability_matrix(th);
    const Matrix W = C0 * C0.transpose();
    EXPECT_GE(c.kappa * (1 + 1e-9), W.inverse().jacobiSvd().singularValues()(0));
  }
  EXPECT_GT(checked, 40);
}

TEST(DecayCertificate, Errors) {
  EXPECT_THROW(decay_certificate(SystemParams(1.1 * Matrix::Identity(2, 2), Matrix::Identity(2, 2))),
               InstabilityError);
  // B = e1 and A diagonal: e2 is never reached.
  EXPECT_THROW(decay_certificate(SystemParams(0.5 * Matrix::Identity(2, 2),
                                              (Matrix(2, 1) << 1, 0).finished())),
               UncontrollableError);
}

}  // namespace
}  // namespace olmpc
