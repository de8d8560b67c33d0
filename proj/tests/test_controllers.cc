#include <gtest/gtest.h>

#include <algorithm>

#include "olmpc/controllers.h"
#include "olmpc/errors.h"
#include "olmpc/regret.h"
#include "olmpc/sysid.h"
#include "test_util.h"

namespace olmpc {
namespace {

SystemParams example_system(std::uint64_t seed) {
  auto g = testing::rng(seed + 500);
  return testing::random_system(g, 2, 1);
}

SystemParams estimate(const SystemParams& th, double eps, int T0, std::uint64_t seed) {
  const auto ex = run_exploration(th, ObservationModel{eps, NoiseKind::kUniformBall, seed}, T0, seed,
                                  Vector::Zero(2));
  return ls_estimate(markov_params(ex.log, 2));
}

ControlOptions options(std::uint64_t seed) {
  ControlOptions o;
  o.exploration_seed = seed;
  return o;
}

double max_norm(const RunTrace& tr, int from, int to, bool internal) {
  double best = 0.0;
  for (int t = from; t <= to; ++t) {
    const auto& s = tr.steps[static_cast<std::size_t>(t - 1)];
    best = std::max(best, (internal ? s.x_hat : s.x).norm());
  }
  return best;
}

TEST(Exploration, NoiselessObservationsAreStates) {
  const SystemParams th = example_system(1);
  const auto ex = run_exploration(th, ObservationModel{0.0, NoiseKind::kUniformBall, 1}, 50, 1,
                                  Vector::Zero(2));
  ASSERT_EQ(ex.log.inputs.size(), 50u);
  ASSERT_EQ(ex.log.observations.size(), 51u);
  ASSERT_EQ(ex.states.size(), 51u);
  for (int t = 0; t <= 50; ++t) EXPECT_EQ(ex.log.observations[t], ex.states[t]);
  for (int t = 0; t < 50; ++t) EXPECT_EQ(ex.log.inputs[t], exploration_input(1, t + 1, 1));
}

TEST(Exploration, StatesStayBounded) {
  const SystemParams th = example_system(2);
  const auto ex = run_exploration(th, ObservationModel{0.01, NoiseKind::kUniformBall, 2}, 100000, 2,
                                  Vector::Zero(2));
  double first = 0.0, second = 0.0;
  for (std::size_t t = 0; t < ex.states.size(); ++t) {
    (t < ex.states.size() / 2 ? first : second) = std::max(t < ex.states.size() / 2 ? first : second,
                                                           ex.states[t].norm());
  }
  EXPECT_LE(second, 1.5 * first);
}

TEST(Exploration, RequiresEnoughSteps) {
  EXPECT_THROW(run_exploration(example_system(1), ObservationModel{}, 2, 1, Vector::Zero(2)),
               ContractViolation);
}

TEST(CeMpc, PhaseStructureAndReplay) {
  const SystemParams th = example_system(3);
  const int T = 300, T0 = 45;
  const SystemParams est = estimate(th, 0.01, T0, 3);
  const CostSequence costs = make_example1(3, T, 2, 1);
  const RunTrace tr = run_ce_mpc(th, make_sensor({0.01, NoiseKind::kUniformBall, 3}), est, costs, 5,
                                 T0, T, options(3));
  ASSERT_EQ(tr.steps.size(), static_cast<std::size_t>(T));
  EXPECT_EQ(tr.exploration_steps(), T0);
  EXPECT_EQ(tr.control_steps(), T - T0);
  EXPECT_LE(true_replay_residual(tr, th), 1e-12);
  EXPECT_LE(internal_replay_residual(tr), 1e-12);
  const auto& first = tr.steps[T0];
  ASSERT_TRUE(first.y.has_value());
  EXPECT_EQ(first.x_hat, *first.y);
  for (int t = T0 + 2; t <= T; ++t) {
    EXPECT_FALSE(tr.steps[t - 1].y.has_value());
    EXPECT_EQ(tr.steps[t - 1].model.stacked(), est.stacked());
    EXPECT_EQ(tr.steps[t - 1].cost_true, costs.at(t)(tr.steps[t - 1].x, tr.steps[t - 1].u));
    EXPECT_EQ(tr.steps[t - 1].cost_internal, costs.at(t)(tr.steps[t - 1].x_hat, tr.steps[t - 1].u));
  }
}

TEST(CeMpc, SensorIsNotReadAfterControlStart) {
  const SystemParams th = example_system(4);
  const int T = 200, T0 = 34;
  const SystemParams est = estimate(th, 0.01, T0, 4);
  const CostSequence costs = make_example1(4, T, 2, 1);
  const Sensor honest = make_sensor({0.01, NoiseKind::kUniformBall, 4});
  const Sensor hostile = [&](const VectorRef& x, int t) -> Vector {
    return t <= T0 + 1 ? honest(x, t) : Vector::Constant(2, 1e6);
  };
  ControlOptions opts = options(4);
  opts.log_discarded_observations = true;
  const RunTrace a = run_ce_mpc(th, honest, est, costs, 5, T0, T, opts);
  const RunTrace b = run_ce_mpc(th, hostile, est, costs, 5, T0, T, opts);
  for (int t = 0; t < T; ++t) {
    EXPECT_EQ(a.steps[t].x, b.steps[t].x);
    EXPECT_EQ(a.steps[t].x_hat, b.steps[t].x_hat);
    EXPECT_EQ(a.steps[t].u, b.steps[t].u);
  }
  ASSERT_EQ(b.discarded_observations.size(), static_cast<std::size_t>(T - T0 - 1));
  EXPECT_EQ(b.discarded_observations.front().second, Vector::Constant(2, 1e6));
}

TEST(CeMpc, ExactModelMatchesKnownModel) {
  const SystemParams th = example_system(5);
  const int T = 250, T0 = 40;
  const CostSequence costs = make_example1(5, T, 2, 1);
  const Sensor exact = make_sensor({0.0, NoiseKind::kUniformBall, 5});
  ControlOptions opts = options(5);
  const RunTrace ce = run_ce_mpc(th, exact, th, costs, 5, T0, T, opts);
  opts.known_T0 = T0;
  const RunTrace known = run_mpc_known(th, exact, costs, 5, T, opts);
  for (int t = 0; t < T; ++t) {
    EXPECT_LE((ce.steps[t].x - known.steps[t].x).norm(), 1e-10);
    EXPECT_LE((ce.steps[t].u - known.steps[t].u).norm(), 1e-10);
  }
}

TEST(OMpc, RadiusZeroMatchesCe) {
  for (int family = 1; family <= 3; ++family) {
    const SystemParams th = example_system(6);
    const int T = 150, T0 = 28;
    const SystemParams est = estimate(th, 0.01, T0, 6);
    CostFamilyConfig fam;
    fam.kind = family == 1 ? CostFamily::kQuadraticOffset
               : family == 2 ? CostFamily::kSetDistance
                             : CostFamily::kCubicOffset;
    const CostSequence costs(fam, 6, T, 2, 1);
    const Sensor sensor = make_sensor({0.01, NoiseKind::kUniformBall, 6});
    ControlOptions opts = options(6);
    opts.solver.restarts = family == 1 ? 1 : 4;
    const RunTrace ce = run_ce_mpc(th, sensor, est, costs, 5, T0, T, opts);
    const RunTrace om = run_o_mpc(th, sensor, ConfidenceRegion{est, 0.0, 2.0}, costs, 5, T0, T, opts);
    for (int t = 0; t < T; ++t) {
      EXPECT_LE((ce.steps[t].x - om.steps[t].x).norm(), 1e-8) << "family " << family;
      EXPECT_LE((ce.steps[t].x_hat - om.steps[t].x_hat).norm(), 1e-8);
      EXPECT_LE((ce.steps[t].u - om.steps[t].u).norm(), 1e-8);
    }
  }
}

TEST(OMpc, ModelsStayInRegion) {
  const SystemParams th = example_system(7);
  const int T = 200, T0 = 34;
  const SystemParams est = estimate(th, 0.01, T0, 7);
  const CostSequence costs = make_example1(7, T, 2, 1);
  const ConfidenceRegion region{est, 0.2, std::sqrt(3.0)};
  const RunTrace tr = run_o_mpc(th, make_sensor({0.01, NoiseKind::kUniformBall, 7}), region, costs,
                                5, T0, T, options(7));
  for (int t = T0 + 1; t <= T; ++t) {
    const auto& s = tr.steps[t - 1];
    EXPECT_TRUE(region.contains(s.model));
    EXPECT_NEAR(s.model_distance, frobenius_distance(s.model, est), 1e-15);
  }
  EXPECT_LE(internal_replay_residual(tr), 1e-12);
  EXPECT_LE(true_replay_residual(tr, th), 1e-12);
}

TEST(CeMpc, InternalStateStaysBounded) {
  const int T = 2048, T0 = 161;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const SystemParams th = example_system(seed);
    const SystemParams est = estimate(th, 0.01, T0, seed);
    const CostSequence costs = make_example1(seed, T, 2, 1);
    const RunTrace tr = run_ce_mpc(th, make_sensor({0.01, NoiseKind::kUniformBall, seed}), est,
                                   costs, 5, T0, T, options(seed));
    EXPECT_LE(max_norm(tr, T0 + 1, T, true), 10.0 * max_norm(tr, T0 + 1, T0 + 100, true));
  }
}

TEST(KnownMpc, InputOnlyCostDecays) {
  CostFamilyConfig fam;
  fam.kind = CostFamily::kCustom;
  fam.custom = [](int) {
    return testing::fixed_quadratic(Matrix::Zero(2, 2), Matrix::Identity(1, 1), Vector::Zero(2));
  };
  const CostSequence costs(fam, 0, 30, 2, 1);
  const SystemParams th(0.5 * Matrix::Identity(2, 2), Matrix::Ones(2, 1));
  ControlOptions opts;
  opts.x1 = Vector::Ones(2);
  const RunTrace tr = run_mpc_known(th, make_sensor({}), costs, 3, 30, opts);
  for (int t = 1; t <= 30; ++t) {
    EXPECT_EQ(tr.steps[t - 1].u.norm(), 0.0);
    EXPECT_NEAR(tr.steps[t - 1].x(0), std::pow(0.5, t - 1), 1e-15);
  }
}

TEST(KnownMpc, FullPreviewMatchesHindsight) {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const SystemParams th = example_system(seed);
    const int T = 40;
    const CostSequence costs = make_example1(seed, T, 2, 1);
    ControlOptions opts;
    opts.x1 = Vector::Constant(2, 0.7);
    const RunTrace tr = run_mpc_known(th, make_sensor({}), costs, T, T, opts);
    double J = 0.0;
    for (const auto& s : tr.steps) J += s.cost_true;
    const auto opt = hindsight_optimal(th, costs, *opts.x1, T, {});
    EXPECT_LE(std::abs(J - opt.objective), 1e-6 * opt.objective);
  }
}

TEST(Runs, Deterministic) {
  const SystemParams th = example_system(8);
  const int T = 120, T0 = 25;
  const SystemParams est = estimate(th, 0.01, T0, 8);
  const CostSequence costs = make_example3(8, T, 2, 1);
  ControlOptions opts = options(8);
  opts.solver.restarts = 4;
  const Sensor sensor = make_sensor({0.01, NoiseKind::kUniformBall, 8});
  const ConfidenceRegion region{est, 0.1, 2.0};
  const RunTrace a = run_o_mpc(th, sensor, region, costs, 5, T0, T, opts);
  const RunTrace b = run_o_mpc(th, sensor, region, costs, 5, T0, T, opts);
  for (int t = 0; t < T; ++t) {
    EXPECT_EQ(a.steps[t].x, b.steps[t].x);
    EXPECT_EQ(a.steps[t].u, b.steps[t].u);
  }
}

TEST(Algorithm, Names) {
  for (auto a : {Algorithm::kCe, Algorithm::kOmpc, Algorithm::kKnown}) {
    EXPECT_EQ(parse_algorithm(to_string(a)), a);
  }
  EXPECT_THROW(parse_algorithm("lqr"), ConfigError);
}

}  // namespace
}  // namespace olmpc
