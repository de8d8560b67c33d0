#include "olmpc/regret.h"

#include <cmath>

#include <boost/math/distributions/students_t.hpp>

#include "olmpc/errors.h"

namespace olmpc {
namespace {

/// Neumaier-compensated running sum.
class Accumulator {
 public:
  void add(double v) {
    const double next = sum_ + v;
    comp_ += std::abs(sum_) >= std::abs(v) ? (sum_ - next) + v : (v - next) + sum_;
    sum_ = next;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace

HindsightSolution hindsight_optimal(const SystemParams& theta_star,
                                    const CostSequence& costs,
                                    const VectorRef& x1, int T,
                                    const SolverConfig& cfg,
                                    const HindsightOptions& opts) {
  if (T < 1 || T > costs.horizon()) {
    throw ContractViolation("hindsight_optimal: T outside the cost horizon");
  }
  const auto all = costs.preview(1, T);
  bool quadratic = !opts.force_iterative;
  for (const auto& c : all) quadratic = quadratic && c.quadratic() != nullptr;

  OpenLoopPlan plan = quadratic ? lqt_oracle(1, x1, all, theta_star)
                                : solve_mpc(1, x1, all, theta_star, cfg);
  HindsightSolution out;
  out.exact = quadratic;
  out.residual = plan.grad_norm_at_solution;
  out.stage_costs.reserve(static_cast<std::size_t>(T));
  Accumulator total;
  for (int k = 0; k < T; ++k) {
    const double c = all[static_cast<std::size_t>(k)](
        plan.predicted_states[static_cast<std::size_t>(k)],
        plan.inputs[static_cast<std::size_t>(k)]);
    out.stage_costs.push_back(c);
    total.add(c);
  }
  out.objective = total.value();
  out.inputs = std::move(plan.inputs);
  return out;
}

RegretRecord dynamic_regret(const RunTrace& trace, const HindsightSolution& opt) {
  const auto T = static_cast<std::size_t>(trace.T);
  if (trace.steps.size() != T || opt.stage_costs.size() != T) {
    throw ContractViolation("dynamic_regret: trace covers " +
                            std::to_string(trace.steps.size()) +
                            " steps, hindsight covers " +
                            std::to_string(opt.stage_costs.size()) +
                            ", expected T=" + std::to_string(trace.T));
  }
  Accumulator alg, best, alg_explore, best_explore, control_true,
      control_internal, best_control;
  for (std::size_t k = 0; k < T; ++k) {
    const StepRecord& s = trace.steps[k];
    const double c_opt = opt.stage_costs[k];
    alg.add(s.cost_true);
    best.add(c_opt);
    if (s.phase == Phase::kExploration) {
      alg_explore.add(s.cost_true);
      best_explore.add(c_opt);
    } else {
      control_true.add(s.cost_true);
      control_internal.add(s.cost_internal);
      best_control.add(c_opt);
    }
  }
  RegretRecord rec;
  rec.algo = trace.algo;
  rec.T = trace.T;
  rec.T0 = trace.T0;
  rec.seed = trace.seed;
  rec.J_alg = alg.value();
  rec.J_opt = best.value();
  rec.R_T = rec.J_alg - rec.J_opt;
  rec.term_I = alg_explore.value() - best_explore.value();
  rec.term_II = control_true.value() - control_internal.value();
  rec.term_III = control_internal.value() - best_control.value();
  rec.pistar_residual = opt.residual;
  return rec;
}

SlopeFit fit_loglog_slope(std::span<const std::pair<double, double>> points) {
  std::vector<double> lx, ly;
  SlopeFit fit;
  for (const auto& [T, R] : points) {
    if (T > 0.0 && R > 0.0 && std::isfinite(T) && std::isfinite(R)) {
      lx.push_back(std::log(T));
      ly.push_back(std::log(R));
    } else {
      ++fit.points_excluded;
    }
  }
  const auto k = lx.size();
  if (k < 3) {
    throw InsufficientDataError("fit_loglog_slope: need at least 3 positive points, got " +
                                std::to_string(k));
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= static_cast<double>(k);
  my /= static_cast<double>(k);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (sxx <= 0.0) {
    throw InsufficientDataError("fit_loglog_slope: all T values coincide");
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double r = ly[i] - (fit.intercept + fit.slope * lx[i]);
    sse += r * r;
  }
  const double dof = static_cast<double>(k) - 2.0;
  fit.stderr_slope = std::sqrt(sse / dof / sxx);
  const boost::math::students_t dist(dof);
  const double q = boost::math::quantile(dist, 0.975);
  fit.ci_low = fit.slope - q * fit.stderr_slope;
  fit.ci_high = fit.slope + q * fit.stderr_slope;
  fit.points_used = static_cast<int>(k);
  return fit;
}

}  // namespace olmpc
