#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "olmpc/costs.h"
#include "olmpc/dynamics.h"
#include "olmpc/sysid.h"

namespace olmpc {

struct SolverConfig {
  double grad_tol = 1e-8;
  int max_iters = 2000;
  int restarts = 1;
  double init_scale = 0.1;
  std::uint64_t seed = 0;
};

/// Open-loop solution of the finite-horizon problem started at x.
struct OpenLoopPlan {
  std::vector<Vector> inputs;            // u_t .. u_{t+N-1}
  std::vector<Vector> predicted_states;  // x_t .. x_{t+N}
  double objective = 0.0;
  double grad_norm_at_solution = 0.0;
  int restarts_used = 0;
  int iterations = 0;
  bool converged = false;
};

struct OptimisticPlan {
  OpenLoopPlan plan;
  SystemParams model;
};

/// Sum of the preview costs along the rollout of `inputs` from x.
double horizon_objective(const VectorRef& x, std::span<const StageCost> preview,
                         const SystemParams& theta,
                         const std::vector<Vector>& inputs);

struct HorizonGradient {
  double objective = 0.0;
  std::vector<Vector> inputs;  // dJ/du_k
  Matrix dA;                   // dJ/dA, empty unless requested
  Matrix dB;
};

/// Exact gradient of the horizon objective by one backward sweep.
HorizonGradient adjoint_gradient(const std::vector<Vector>& inputs,
                                 const VectorRef& x,
                                 std::span<const StageCost> preview,
                                 const SystemParams& theta,
                                 bool with_model = false);

/// Local minimizer of the horizon objective under theta: gradient descent
/// with Barzilai-Borwein trial steps, Armijo backtracking and random
/// restarts around the warm start. Deterministic given cfg.seed and t.
OpenLoopPlan solve_mpc(int t, const VectorRef& x,
                       std::span<const StageCost> preview,
                       const SystemParams& theta, const SolverConfig& cfg,
                       const std::vector<Vector>* warm_start = nullptr);

/// Joint minimization over inputs and a model in the region. Starts from
/// solve_mpc at the region center, so the result never exceeds that
/// objective.
OptimisticPlan solve_ompc(int t, const VectorRef& x,
                          std::span<const StageCost> preview,
                          const ConfidenceRegion& region,
                          const SolverConfig& cfg,
                          const std::vector<Vector>* warm_start = nullptr);

/// Exact minimizer for quadratic previews via a backward Riccati recursion.
/// Throws InapplicableError for non-quadratic previews or when a
/// recursion Hessian R + B^T P B is not positive definite.
OpenLoopPlan lqt_oracle(int t, const VectorRef& x,
                        std::span<const StageCost> preview,
                        const SystemParams& theta);

/// Axis-aligned lattice for grid_oracle. Inputs range over
/// [u_min, u_max] in steps of u_step; model entries range over
/// center + theta_step * k for integers k with the point inside the region.
struct GridSpec {
  double u_min = -1.0;
  double u_max = 1.0;
  double u_step = 1e-3;
  double theta_step = 1e-3;
  std::size_t budget = 10'000'000;
};

struct GridResult {
  std::vector<Vector> inputs;
  SystemParams model;
  double objective = 0.0;
  /// Lipschitz estimate times one cell diagonal: how far the grid best can
  /// sit above the true minimum over the box.
  double cell_bound = 0.0;
  double lipschitz = 0.0;
  std::size_t points_evaluated = 0;
};

/// Exhaustive search over the lattice. Throws BudgetError when the lattice
/// has more than spec.budget points.
GridResult grid_oracle(int t, const VectorRef& x,
                       std::span<const StageCost> preview,
                       const ConfidenceRegion& region, const GridSpec& spec);

}  // namespace olmpc
