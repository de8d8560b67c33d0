#include "olmpc/controllers.h"

#include <cmath>
#include <limits>

#include "olmpc/errors.h"

namespace olmpc {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Vector initial_state(const ControlOptions& opts, int n) {
  if (!opts.x1) return Vector::Zero(n);
  if (opts.x1->size() != n) {
    throw ContractViolation("initial state has the wrong dimension");
  }
  return *opts.x1;
}

void check_run(const SystemParams& theta_star, const CostSequence& costs,
               int M, int T0, int T) {
  if (M < 1) throw ContractViolation("preview length M must be >= 1");
  if (T < 1 || T0 < 0 || T0 >= T) {
    throw ContractViolation("need 0 <= T0 < T, got T0=" + std::to_string(T0) +
                            ", T=" + std::to_string(T));
  }
  if (costs.horizon() < T) {
    throw ContractViolation("cost sequence shorter than T");
  }
  if (costs.n() != theta_star.n() || costs.m() != theta_star.m()) {
    throw ContractViolation("cost sequence dimensions differ from the system");
  }
}

/// Exploration rows of a trace; returns the true state x_{T0+1}.
Vector explore_into(RunTrace& trace, const SystemParams& theta_star,
                    const Sensor& sensor, const CostSequence& costs, int T0,
                    std::uint64_t seed, Vector x) {
  for (int t = 1; t <= T0; ++t) {
    StepRecord rec;
    rec.t = t;
    rec.phase = Phase::kExploration;
    rec.u = exploration_input(seed, t, theta_star.m());
    rec.y = sensor(x, t);
    rec.x_hat = *rec.y;
    rec.x = x;
    const StageCost& c = costs.at(t);
    rec.cost_true = c(rec.x, rec.u);
    rec.cost_internal = c(rec.x_hat, rec.u);
    rec.plan_objective = kNaN;
    rec.plan_grad_norm = kNaN;
    rec.model_distance = kNaN;
    x = simulate_step(theta_star, x, rec.u);
    trace.steps.push_back(std::move(rec));
  }
  return x;
}

std::vector<Vector> shifted(const std::vector<Vector>& inputs, int m) {
  std::vector<Vector> out;
  if (inputs.empty()) return out;
  out.assign(inputs.begin() + 1, inputs.end());
  out.push_back(Vector::Zero(m));
  return out;
}

struct PolicyOutput {
  Vector u;
  SystemParams model;
  OpenLoopPlan plan;
};

/// Shared control-phase loop. `policy(t, x_hat, preview, warm)` returns the
/// input and the model used to propagate x_hat. When `feedback_true_state`
/// is set, x_hat is replaced by the true state every step.
template <class Policy>
void control_into(RunTrace& trace, const SystemParams& theta_star,
                  const Sensor& sensor, const CostSequence& costs, int M,
                  int T, Vector x, Vector x_hat, bool feedback_true_state,
                  const ControlOptions& opts, Policy&& policy) {
  const int m = theta_star.m();
  const int first = trace.T0 + 1;
  std::vector<Vector> warm;
  for (int t = first; t <= T; ++t) {
    if (feedback_true_state) x_hat = x;
    const auto preview = costs.preview(t, M);
    PolicyOutput out = policy(t, x_hat, preview, warm.empty() ? nullptr : &warm);

    StepRecord rec;
    rec.t = t;
    rec.phase = Phase::kControl;
    rec.x = x;
    rec.x_hat = x_hat;
    rec.u = out.u;
    const StageCost& c = costs.at(t);
    rec.cost_true = c(x, out.u);
    rec.cost_internal = c(x_hat, out.u);
    rec.plan_objective = out.plan.objective;
    rec.plan_grad_norm = out.plan.grad_norm_at_solution;
    rec.model_distance = frobenius_distance(out.model, trace.center);
    rec.model = std::move(out.model);

    warm = shifted(out.plan.inputs, m);
    x = simulate_step(theta_star, x, rec.u);
    x_hat = simulate_step(rec.model, x_hat, rec.u);
    if (opts.log_discarded_observations && t < T) {
      trace.discarded_observations.emplace_back(t + 1, sensor(x, t + 1));
    }
    trace.steps.push_back(std::move(rec));
  }
}

RunTrace start_trace(Algorithm algo, int T0, int T, int M,
                     const ControlOptions& opts, SystemParams center) {
  RunTrace trace;
  trace.algo = algo;
  trace.T0 = T0;
  trace.T = T;
  trace.M = M;
  trace.seed = opts.exploration_seed;
  trace.config_fingerprint = opts.config_fingerprint;
  trace.center = std::move(center);
  trace.steps.reserve(static_cast<std::size_t>(T));
  return trace;
}

}  // namespace

std::string to_string(Phase phase) {
  return phase == Phase::kExploration ? "exploration" : "control";
}

std::string to_string(Algorithm algo) {
  switch (algo) {
    case Algorithm::kCe: return "ce";
    case Algorithm::kOmpc: return "ompc";
    case Algorithm::kKnown: return "known";
  }
  return "unknown";
}

Algorithm parse_algorithm(const std::string& name) {
  if (name == "ce") return Algorithm::kCe;
  if (name == "ompc") return Algorithm::kOmpc;
  if (name == "known") return Algorithm::kKnown;
  throw ConfigError("unknown algorithm '" + name + "'");
}

int RunTrace::exploration_steps() const {
  int count = 0;
  for (const auto& s : steps) count += s.phase == Phase::kExploration;
  return count;
}

int RunTrace::control_steps() const {
  return static_cast<int>(steps.size()) - exploration_steps();
}

Sensor make_sensor(const ObservationModel& obs) {
  return [obs](const VectorRef& x, int t) { return observe(x, obs, t); };
}

Exploration run_exploration(const SystemParams& theta_star, const Sensor& sensor,
                            int T0, std::uint64_t seed, const VectorRef& x1) {
  if (T0 < theta_star.n() + 1) {
    throw ContractViolation("run_exploration: T0 must be at least n + 1");
  }
  if (x1.size() != theta_star.n()) {
    throw ContractViolation("run_exploration: x1 dimension mismatch");
  }
  Exploration out;
  out.log.T0 = T0;
  out.log.inputs.reserve(static_cast<std::size_t>(T0));
  out.log.observations.reserve(static_cast<std::size_t>(T0) + 1);
  out.states.reserve(static_cast<std::size_t>(T0) + 1);
  Vector x = x1;
  for (int t = 1; t <= T0; ++t) {
    Vector u = exploration_input(seed, t, theta_star.m());
    out.log.observations.push_back(sensor(x, t));
    out.states.push_back(x);
    x = simulate_step(theta_star, x, u);
    out.log.inputs.push_back(std::move(u));
  }
  out.log.observations.push_back(sensor(x, T0 + 1));
  out.states.push_back(std::move(x));
  return out;
}

Exploration run_exploration(const SystemParams& theta_star,
                            const ObservationModel& obs, int T0,
                            std::uint64_t seed, const VectorRef& x1) {
  return run_exploration(theta_star, make_sensor(obs), T0, seed, x1);
}

RunTrace run_ce_mpc(const SystemParams& theta_star, const Sensor& sensor,
                    const SystemParams& theta_hat, const CostSequence& costs,
                    int M, int T0, int T, const ControlOptions& opts) {
  check_run(theta_star, costs, M, T0, T);
  if (theta_hat.n() != theta_star.n() || theta_hat.m() != theta_star.m()) {
    throw ContractViolation("run_ce_mpc: estimate dimension mismatch");
  }
  if (T0 < theta_star.n() + 1) {
    throw ContractViolation("run_ce_mpc: T0 must be at least n + 1");
  }
  RunTrace trace = start_trace(Algorithm::kCe, T0, T, M, opts, theta_hat);
  const Vector x = explore_into(trace, theta_star, sensor, costs, T0,
                                opts.exploration_seed,
                                initial_state(opts, theta_star.n()));
  Vector y = sensor(x, T0 + 1);
  control_into(trace, theta_star, sensor, costs, M, T, x, y, false, opts,
               [&](int t, const Vector& x_hat, std::span<const StageCost> preview,
                   const std::vector<Vector>* warm) {
                 PolicyOutput out;
                 out.plan = solve_mpc(t, x_hat, preview, theta_hat, opts.solver, warm);
                 out.u = out.plan.inputs.front();
                 out.model = theta_hat;
                 return out;
               });
  trace.steps[static_cast<std::size_t>(T0)].y = std::move(y);
  return trace;
}

RunTrace run_o_mpc(const SystemParams& theta_star, const Sensor& sensor,
                   const ConfidenceRegion& region, const CostSequence& costs,
                   int M, int T0, int T, const ControlOptions& opts) {
  check_run(theta_star, costs, M, T0, T);
  if (region.center.n() != theta_star.n() || region.center.m() != theta_star.m() ||
      !(region.radius >= 0.0)) {
    throw ContractViolation("run_o_mpc: malformed confidence region");
  }
  if (T0 < theta_star.n() + 1) {
    throw ContractViolation("run_o_mpc: T0 must be at least n + 1");
  }
  RunTrace trace = start_trace(Algorithm::kOmpc, T0, T, M, opts, region.center);
  const Vector x = explore_into(trace, theta_star, sensor, costs, T0,
                                opts.exploration_seed,
                                initial_state(opts, theta_star.n()));
  Vector y = sensor(x, T0 + 1);
  control_into(trace, theta_star, sensor, costs, M, T, x, y, false, opts,
               [&](int t, const Vector& x_hat, std::span<const StageCost> preview,
                   const std::vector<Vector>* warm) {
                 OptimisticPlan opt =
                     solve_ompc(t, x_hat, preview, region, opts.solver, warm);
                 PolicyOutput out;
                 out.u = opt.plan.inputs.front();
                 out.model = std::move(opt.model);
                 out.plan = std::move(opt.plan);
                 return out;
               });
  trace.steps[static_cast<std::size_t>(T0)].y = std::move(y);
  return trace;
}

RunTrace run_mpc_known(const SystemParams& theta_star, const Sensor& sensor,
                       const CostSequence& costs, int M, int T,
                       const ControlOptions& opts) {
  const int T0 = opts.known_T0;
  check_run(theta_star, costs, M, T0, T);
  RunTrace trace = start_trace(Algorithm::kKnown, T0, T, M, opts, theta_star);
  const Vector x = explore_into(trace, theta_star, sensor, costs, T0,
                                opts.exploration_seed,
                                initial_state(opts, theta_star.n()));
  control_into(trace, theta_star, sensor, costs, M, T, x, x, true, opts,
               [&](int t, const Vector& x_now, std::span<const StageCost> preview,
                   const std::vector<Vector>* warm) {
                 PolicyOutput out;
                 out.plan = solve_mpc(t, x_now, preview, theta_star, opts.solver, warm);
                 out.u = out.plan.inputs.front();
                 out.model = theta_star;
                 return out;
               });
  return trace;
}

double true_replay_residual(const RunTrace& trace, const SystemParams& theta_star) {
  double worst = 0.0;
  for (std::size_t k = 0; k + 1 < trace.steps.size(); ++k) {
    const auto& s = trace.steps[k];
    const Vector pred = simulate_step(theta_star, s.x, s.u);
    worst = std::max(worst, (trace.steps[k + 1].x - pred).lpNorm<Eigen::Infinity>());
  }
  return worst;
}

double internal_replay_residual(const RunTrace& trace) {
  double worst = 0.0;
  for (std::size_t k = 0; k + 1 < trace.steps.size(); ++k) {
    const auto& s = trace.steps[k];
    if (s.phase != Phase::kControl) continue;
    const Vector pred = simulate_step(s.model, s.x_hat, s.u);
    worst = std::max(worst,
                     (trace.steps[k + 1].x_hat - pred).lpNorm<Eigen::Infinity>());
  }
  return worst;
}

}  // namespace olmpc
