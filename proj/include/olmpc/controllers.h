#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "olmpc/costs.h"
#include "olmpc/dynamics.h"
#include "olmpc/horizon_solver.h"
#include "olmpc/sysid.h"

namespace olmpc {

enum class Phase { kExploration, kControl };
enum class Algorithm { kCe, kOmpc, kKnown };

std::string to_string(Phase phase);
std::string to_string(Algorithm algo);
/// "ce", "ompc" or "known"; throws ConfigError otherwise.
Algorithm parse_algorithm(const std::string& name);

struct StepRecord {
  int t = 0;
  Phase phase = Phase::kExploration;
  Vector x;      // true state
  Vector x_hat;  // internal state; the observation y_t during exploration
  std::optional<Vector> y;  // set on steps where the sensor was read
  Vector u;
  SystemParams model;  // active model; empty during exploration
  double cost_true = 0.0;      // c_t(x_t, u_t)
  double cost_internal = 0.0;  // c_t(x_hat_t, u_t)
  double plan_objective = 0.0;  // V_t(x_hat_t; model) as solved; NaN in exploration
  double plan_grad_norm = 0.0;
  double model_distance = 0.0;  // |model - center|_F; NaN in exploration
};

struct RunTrace {
  Algorithm algo = Algorithm::kCe;
  int T0 = 0;
  int T = 0;
  int M = 0;
  std::uint64_t seed = 0;
  std::string config_fingerprint;
  SystemParams center;  // estimate (CE, O-MPC) or true model (known)
  std::vector<StepRecord> steps;  // t = 1..T
  /// Observations taken after T0+1 for diagnostics only; never fed back.
  std::vector<std::pair<int, Vector>> discarded_observations;

  int exploration_steps() const;
  int control_steps() const;
};

/// Sensor read y_t = s(x_t, t).
using Sensor = std::function<Vector(const VectorRef& x, int t)>;
Sensor make_sensor(const ObservationModel& obs);

struct Exploration {
  ExplorationLog log;
  std::vector<Vector> states;  // x_1 .. x_{T0+1}
};

/// T0 steps of +-1 inputs on the true system. Throws ContractViolation if
/// T0 < n + 1.
Exploration run_exploration(const SystemParams& theta_star, const Sensor& sensor,
                            int T0, std::uint64_t seed, const VectorRef& x1);
Exploration run_exploration(const SystemParams& theta_star,
                            const ObservationModel& obs, int T0,
                            std::uint64_t seed, const VectorRef& x1);

struct ControlOptions {
  SolverConfig solver;
  std::optional<Vector> x1;  // zero when unset
  std::uint64_t exploration_seed = 0;
  /// Read and store (but never use) sensor output during the control phase.
  bool log_discarded_observations = false;
  std::string config_fingerprint;
  /// Exploration prefix for run_mpc_known; 0 runs MPC from t = 1.
  int known_T0 = 0;
};

/// Exploration, then MPC on the internal state propagated by theta_hat.
RunTrace run_ce_mpc(const SystemParams& theta_star, const Sensor& sensor,
                    const SystemParams& theta_hat, const CostSequence& costs,
                    int M, int T0, int T, const ControlOptions& opts);

/// Exploration, then optimistic MPC; the internal state is propagated by the
/// model chosen at each step.
RunTrace run_o_mpc(const SystemParams& theta_star, const Sensor& sensor,
                   const ConfidenceRegion& region, const CostSequence& costs,
                   int M, int T0, int T, const ControlOptions& opts);

/// Diagnostic baseline: MPC with the true model on the true state.
RunTrace run_mpc_known(const SystemParams& theta_star, const Sensor& sensor,
                       const CostSequence& costs, int M, int T,
                       const ControlOptions& opts);

/// Largest deviation of the recorded true states from the theta_star
/// recursion.
double true_replay_residual(const RunTrace& trace, const SystemParams& theta_star);
/// Same for control-phase internal states under the recorded models.
double internal_replay_residual(const RunTrace& trace);

}  // namespace olmpc
