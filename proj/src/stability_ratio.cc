#include <algorithm>
#include <climits>
#include <cmath>
#include <limits>
#include <random>

#include "olmpc/costs.h"
#include "olmpc/errors.h"
#include "olmpc/horizon_solver.h"
#include "olmpc/rng.h"

namespace olmpc {
namespace {

bool all_quadratic(std::span<const StageCost> preview) {
  return std::all_of(preview.begin(), preview.end(),
                     [](const StageCost& c) { return c.quadratic() != nullptr; });
}

double cost_to_go(int t, const Vector& x, std::span<const StageCost> preview,
                  const SystemParams& theta, const SolverConfig& cfg) {
  if (all_quadratic(preview)) {
    return lqt_oracle(t, x, preview, theta).objective;
  }
  return solve_mpc(t, x, preview, theta, cfg).objective;
}

}  // namespace

StabilityRatio estimate_stability_ratio(const CostSequence& seq,
                                        const SystemParams& theta, int M,
                                        const RatioSampling& sampling) {
  if (M < 1) throw ContractViolation("estimate_stability_ratio: M < 1");
  if (theta.n() != seq.n() || theta.m() != seq.m()) {
    throw ContractViolation("estimate_stability_ratio: dimension mismatch");
  }
  SolverConfig cfg;
  cfg.restarts = 4;
  cfg.seed = sampling.seed;

  auto rng = make_engine(sampling.seed, Stream::kSampling, 0);
  const int t_max = std::max(1, seq.horizon() - M + 1);
  std::uniform_int_distribution<int> pick_t(1, t_max);
  std::uniform_real_distribution<double> coord(-sampling.box, sampling.box);

  StabilityRatio out;
  out.alpha_lower = std::numeric_limits<double>::infinity();
  out.alpha_upper = 0.0;
  for (int i = 0; i < sampling.sample_count; ++i) {
    const int t = pick_t(rng);
    Vector x(seq.n());
    for (int j = 0; j < seq.n(); ++j) x(j) = coord(rng);
    const double sigma = x.squaredNorm();
    if (sigma == 0.0) continue;
    // A single-step preview leaves x fixed, so its optimum is min_u c_t(x, u).
    const double stage = cost_to_go(t, x, seq.preview(t, 1), theta, cfg);
    const double value = cost_to_go(t, x, seq.preview(t, M), theta, cfg);
    out.alpha_lower = std::min(out.alpha_lower, stage / sigma);
    out.alpha_upper = std::max(out.alpha_upper, value / sigma);
    ++out.samples_used;
  }
  if (out.samples_used == 0) {
    throw DiagnosticError("estimate_stability_ratio: every sample had sigma(x) = 0");
  }
  const double ratio = out.ratio();
  if (!std::isfinite(ratio) || ratio * ratio + 1.0 > static_cast<double>(INT_MAX)) {
    out.min_preview = INT_MAX;
  } else {
    out.min_preview = min_preview_for_ratio(ratio);
  }
  return out;
}

}  // namespace olmpc
