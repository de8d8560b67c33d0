#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "olmpc/controllers.h"
#include "olmpc/costs.h"
#include "olmpc/horizon_solver.h"

namespace olmpc {

/// Best full-information input sequence u*_{1:T} from x1 under theta_star.
struct HindsightSolution {
  std::vector<Vector> inputs;
  std::vector<double> stage_costs;  // c_t(x*_t, u*_t), t = 1..T
  double objective = 0.0;           // J_T(pi*; theta_star)
  double residual = 0.0;            // gradient norm at the returned inputs
  bool exact = false;               // true when solved by the Riccati oracle
};

struct HindsightOptions {
  /// Use adjoint-gradient descent even when every stage is quadratic.
  bool force_iterative = false;
};

/// Exact Riccati solve for all-quadratic sequences, otherwise multi-start
/// descent over the whole input sequence.
HindsightSolution hindsight_optimal(const SystemParams& theta_star,
                                    const CostSequence& costs,
                                    const VectorRef& x1, int T,
                                    const SolverConfig& cfg,
                                    const HindsightOptions& opts = {});

/// One row of the regret table. term_I + term_II + term_III == R_T.
struct RegretRecord {
  Algorithm algo = Algorithm::kCe;
  int T = 0;
  int T0 = 0;
  std::uint64_t seed = 0;
  double J_alg = 0.0;
  double J_opt = 0.0;
  double R_T = 0.0;
  double term_I = 0.0;
  double term_II = 0.0;
  double term_III = 0.0;
  double pistar_residual = 0.0;
  double runtime_ms = 0.0;
};

/// R_T = J_alg - J_opt split into exploration (I), model-mismatch (II) and
/// internal-versus-optimal (III) parts. Throws ContractViolation when the
/// trace and the hindsight solution cover different horizons.
RegretRecord dynamic_regret(const RunTrace& trace, const HindsightSolution& opt);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double stderr_slope = 0.0;
  double ci_low = 0.0;   // 95% interval on the slope
  double ci_high = 0.0;
  int points_used = 0;
  int points_excluded = 0;  // non-positive or non-finite pairs
};

/// Ordinary least squares of log R against log T. Throws
/// InsufficientDataError with fewer than three usable points.
SlopeFit fit_loglog_slope(std::span<const std::pair<double, double>> points);

}  // namespace olmpc
