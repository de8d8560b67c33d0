// Runs every acceptance criterion and prints one PASS/FAIL line for each.
// Exit status is the number of failed criteria.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "olmpc/controllers.h"
#include "olmpc/csv_io.h"
#include "olmpc/errors.h"
#include "olmpc/experiment.h"
#include "olmpc/horizon_solver.h"
#include "olmpc/regret.h"
#include "olmpc/sysid.h"
#include "../test_util.h"

namespace {

using namespace olmpc;
namespace tu = olmpc::testing;

int failures = 0;
std::map<int, std::string> results;

// Progress goes to stderr as criteria finish; the ordered table is printed
// at the end.
void report(int id, bool pass, const std::string& detail) {
  if (!pass) ++failures;
  char head[32];
  std::snprintf(head, sizeof head, "criterion %2d: %s  ", id, pass ? "PASS" : "FAIL");
  results[id] = head + detail;
  std::fprintf(stderr, "%s\n", results[id].c_str());
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size();
  return k % 2 ? v[k / 2] : 0.5 * (v[k / 2 - 1] + v[k / 2]);
}

std::string records_csv(const std::vector<RegretRecord>& records) {
  std::ostringstream os;
  write_records_csv(os, records);
  return os.str();
}

std::vector<StageCost> preview_of(const CostSequence& seq, int t, int M) {
  const auto p = seq.preview(t, M);
  return {p.begin(), p.end()};
}

bool in_band(const std::optional<SlopeFit>& fit, double lo, double hi) {
  return fit && fit->slope >= lo && fit->slope <= hi;
}

std::string slope_text(const AlgorithmSummary& s) {
  if (!s.fit) return "no fit: " + s.fit_error;
  return fmt("slope %.3f", s.fit->slope) + fmt(" (95%% CI %.3f", s.fit->ci_low) +
         fmt(" .. %.3f)", s.fit->ci_high);
}

const AlgorithmSummary& summary_for(const SweepResult& r, Algorithm a) {
  for (const auto& s : r.summaries) {
    if (s.algo == a) return s;
  }
  throw ContractViolation("missing summary");
}

// Criteria 1, 2, 5, 9 and 10 share the Example-1 sweep.
void sweep_criteria(const std::filesystem::path& out_dir) {
  ExperimentConfig cfg;  // Example 1, T = 512..16384, seeds 1..5, M = 5, eps 0.01
  const auto t0 = std::chrono::steady_clock::now();
  const SweepResult first = sweep(cfg, {.workers = 1});
  const double minutes =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / 60.0;
  write_records_csv((out_dir / "acceptance_records.csv").string(), first.records);

  const std::size_t expected = cfg.T_list.size() * cfg.seeds.size() * cfg.algorithms.size();
  const std::string accounting = std::to_string(first.records.size()) + " records, " +
                                 std::to_string(first.failures.size()) + " failures of " +
                                 std::to_string(expected);
  const auto& ce = summary_for(first, Algorithm::kCe);
  const auto& om = summary_for(first, Algorithm::kOmpc);

  report(1, first.failures.empty() && in_band(ce.fit, 0.45, 0.85),
         "CE-MPC " + slope_text(ce) + ", " + accounting + fmt(", sweep %.1f min", minutes));

  bool within = ce.medians.size() == om.medians.size();
  double worst = 1.0;
  for (std::size_t i = 0; within && i < ce.medians.size(); ++i) {
    const double r = om.medians[i].median_R / ce.medians[i].median_R;
    worst = std::max(worst, std::max(r, 1.0 / r));
    within = within && ce.medians[i].T == om.medians[i].T && r <= 3.0 && r >= 1.0 / 3.0;
  }
  report(2, in_band(om.fit, 0.45, 0.85) && within,
         "O-MPC " + slope_text(om) + fmt(", worst per-T median ratio to CE %.3f", worst));

  double gap = 0.0;
  for (const auto& r : first.records) gap = std::max(gap, std::abs(r.term_I + r.term_II + r.term_III - r.R_T));
  report(5, !first.records.empty() && gap <= 1e-9,
         fmt("max |I+II+III-R_T| = %.2e", gap) + " over " + std::to_string(first.records.size()) + " records");

  double worst_sign = std::numeric_limits<double>::infinity();
  bool exact = true;
  for (const auto& r : first.records) {
    worst_sign = std::min(worst_sign, r.R_T / (1e-6 * r.T));
    exact = exact && r.pistar_residual <= cfg.pistar_residual_max;
  }
  report(9, !first.records.empty() && worst_sign >= -1.0 && exact,
         fmt("min R_T / (1e-6 T) = %.3g", worst_sign) + (exact ? ", pi* exact on every record" : ", pi* residual too large"));

  const SweepResult second = sweep(cfg, {.workers = 2});
  write_records_csv((out_dir / "acceptance_records_rerun.csv").string(), second.records);
  std::ifstream a(out_dir / "acceptance_records.csv"), b(out_dir / "acceptance_records_rerun.csv");
  std::stringstream sa, sb;
  sa << a.rdbuf();
  sb << b.rdbuf();
  report(10, !sa.str().empty() && sa.str() == sb.str() && sa.str() == records_csv(first.records),
         "records CSV " + std::string(sa.str() == sb.str() ? "byte-identical" : "differs") +
             " across two executions (1 and 2 workers), " + std::to_string(sa.str().size()) + " bytes");
}

void estimation_rate() {
  const ExperimentConfig cfg;
  std::vector<std::pair<double, double>> points;
  int skipped = 0;
  std::string medians;
  for (int T0 : {1000, 10000, 100000, 1000000}) {
    std::vector<double> errors;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const SystemParams th = generate_system(cfg, seed);
      const auto ex = run_exploration(th, ObservationModel{0.0, NoiseKind::kZero, seed}, T0, seed,
                                      Vector::Zero(cfg.n));
      try {
        errors.push_back(frobenius_distance(ls_estimate(markov_params(ex.log, cfg.n)), th));
      } catch (const UncontrollableError&) {
        ++skipped;
      }
    }
    points.emplace_back(T0, median(errors));
    medians += fmt(" %.3g", points.back().second);
  }
  const SlopeFit fit = fit_loglog_slope(points);

  double forced = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto g = tu::rng(seed);
    for (int n : {1, 2, 3}) {
      const SystemParams th(Matrix::Zero(n, n), tu::uniform_matrix(g, n, 1, -1, 1));
      const auto ex = run_exploration(th, ObservationModel{0.0, NoiseKind::kZero, seed}, 10000, seed,
                                      Vector::Zero(n));
      const MarkovEstimates N = markov_params(ex.log, n);
      forced = std::max(forced, (N.N[0] - th.B()).cwiseAbs().maxCoeff());
      if (n == 1) forced = std::max(forced, (ls_estimate(N).B() - th.B()).cwiseAbs().maxCoeff());
    }
  }
  report(3, fit.slope >= -0.65 && fit.slope <= -0.35 && forced <= 1e-14,
         fmt("slope %.3f", fit.slope) + " (median errors" + medians + ", " + std::to_string(skipped) +
             " uncontrollable draws skipped)" + fmt(", forced case max |B_hat - B| = %.1e", forced));
}

void oracle_equivalence() {
  auto g = tu::rng(4);
  double mpc_worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const SystemParams th = tu::random_system(g, 2, 1);
    const CostSequence seq = make_example1(i + 1, 10, 2, 1);
    const Vector x = tu::uniform_vector(g, 2, -1, 1);
    const auto prev = preview_of(seq, 1, 5);
    const double ref = lqt_oracle(1, x, prev, th).objective;
    const double got = solve_mpc(1, x, prev, th, {}).objective;
    mpc_worst = std::max(mpc_worst, std::abs(got - ref) / std::max(ref, 1e-300));
  }

  double hind_worst = 0.0, dense_worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const ExperimentConfig cfg;
    const SystemParams th = generate_system(cfg, seed);
    for (int T : {100, 1024}) {
      const CostSequence costs = make_example1(seed, T, 2, 1);
      const Vector x1 = Vector::Constant(2, 0.5);
      const auto opt = hindsight_optimal(th, costs, x1, T, cfg.hindsight_solver());
      const auto full = lqt_oracle(1, x1, costs.preview(1, T), th);
      hind_worst = std::max(hind_worst, std::abs(opt.objective - full.objective) / full.objective);
      if (T == 100) {
        const auto dense = tu::batch_lqt(th, x1, costs.preview(1, T));
        dense_worst = std::max(dense_worst, std::abs(opt.objective - dense.objective) / dense.objective);
      }
    }
  }

  int grid_ok = 0;
  double grid_margin = 0.0;
  for (int i = 0; i < 20; ++i) {
    const SystemParams c = tu::random_system(g, 1, 1);
    const CostSequence seq = make_example1(i + 50, 10, 1, 1);
    const Vector x = tu::uniform_vector(g, 1, -1, 1);
    const auto prev = preview_of(seq, 1, 1);
    const ConfidenceRegion region{c, 0.03, 2.0};
    const GridResult r = grid_oracle(1, x, prev, region, GridSpec{});
    const OptimisticPlan om = solve_ompc(1, x, prev, region, {});
    const double diff = std::abs(om.plan.objective - r.objective);
    grid_margin = std::max(grid_margin, diff / std::max(r.cell_bound, 1e-300));
    grid_ok += diff <= r.cell_bound && region.contains(om.model);
  }
  // Two-step variant where the model actually enters the objective.
  int grid2_ok = 0;
  for (int i = 0; i < 5; ++i) {
    const SystemParams c = tu::random_system(g, 1, 1);
    const CostSequence seq = make_example1(i + 80, 10, 1, 1);
    const Vector x = tu::uniform_vector(g, 1, -1, 1);
    const auto prev = preview_of(seq, 1, 2);
    const ConfidenceRegion region{c, 0.02, 2.0};
    GridSpec spec;
    spec.u_step = 0.02;
    spec.theta_step = 2e-3;
    const GridResult r = grid_oracle(1, x, prev, region, spec);
    SolverConfig cfg;
    cfg.restarts = 4;
    const OptimisticPlan om = solve_ompc(1, x, prev, region, cfg);
    grid2_ok += std::abs(om.plan.objective - r.objective) <= r.cell_bound;
  }
  report(4, mpc_worst <= 1e-6 && hind_worst <= 1e-8 && dense_worst <= 1e-8 && grid_ok == 20 && grid2_ok == 5,
         fmt("solve_mpc vs lqt worst rel %.1e", mpc_worst) + fmt(", hindsight vs lqt %.1e", hind_worst) +
             fmt(" (vs dense batch %.1e)", dense_worst) + ", grid " + std::to_string(grid_ok) +
             "/20 within cell bound" + fmt(" (max |diff|/bound %.2f)", grid_margin) + ", two-step grid " +
             std::to_string(grid2_ok) + "/5");
}

void gradient_suite() {
  double worst = 0.0;
  int checked = 0;
  for (int family = 1; family <= 3; ++family) {
    auto g = tu::rng(60 + family);
    for (int i = 0; i < 100; ++i) {
      const int n = 2, m = 1 + i % 2, M = 1 + i % 6;
      const SystemParams th = tu::random_system(g, n, m);
      const CostSequence seq = family == 1 ? make_example1(i, 10, n, m)
                               : family == 2 ? make_example2(i, 10, n, m)
                                             : make_example3(i, 10, n, m);
      const Vector x = tu::uniform_vector(g, n, -1, 1);
      const auto prev = preview_of(seq, 1, M);
      const auto u = tu::random_inputs(g, M, m);
      const HorizonGradient grad = adjoint_gradient(u, x, prev, th, true);
      const Vector fd_u = tu::central_difference(
          [&](const Vector& z) { return tu::naive_objective(th, x, prev, tu::unflatten(z, m)); },
          tu::flatten(u));
      const Matrix S = th.stacked();
      const Vector fd_theta = tu::central_difference(
          [&](const Vector& z) {
            return tu::naive_objective(SystemParams::from_stacked(Eigen::Map<const Matrix>(z.data(), n, n + m)), x,
                                       prev, u);
          },
          Eigen::Map<const Vector>(S.data(), S.size()));
      Matrix dtheta(n, n + m);
      dtheta << grad.dA, grad.dB;
      worst = std::max({worst, tu::relative_error(tu::flatten(grad.inputs), fd_u),
                        tu::relative_error(Eigen::Map<const Vector>(dtheta.data(), dtheta.size()), fd_theta)});
      ++checked;
    }
  }
  report(6, worst <= 1e-5,
         fmt("worst relative error %.2e", worst) + " over " + std::to_string(checked) +
             " instances (input and model gradients, 3 families)");
}

void boundedness() {
  // The control-phase peak is set by the exploration endpoint y_{T0+1},
  // which differs between the two horizons; seeds are aggregated by the
  // median as in the sweep, and the per-seed worst case is reported too.
  const ExperimentConfig cfg;
  std::vector<double> peaks_short, peaks_long;
  double worst_seed_ratio = 0.0;
  double worst_fraction = 1.0;
  double v_low = std::numeric_limits<double>::infinity(), v_high = 0.0;
  for (auto seed : cfg.seeds) {
    for (int T : {1024, 4096}) {
      const ProblemInstance inst = make_instance(cfg, T, seed);
      const EstimateResult est = run_estimate(cfg, inst);
      const HindsightSolution pistar =
          hindsight_optimal(inst.theta_star, inst.costs, inst.x1, T, cfg.hindsight_solver());
      const RunTrace tr = run_single(cfg, inst, est, pistar, Algorithm::kCe).trace;
      double peak = 0.0;
      int steps = 0, ok = 0;
      for (int t = inst.T0 + 1; t <= T; ++t) {
        const auto& s = tr.steps[static_cast<std::size_t>(t - 1)];
        peak = std::max(peak, s.x_hat.norm());
        if (t > inst.T0 + 10 && t < T) {
          ++steps;
          ok += tr.steps[static_cast<std::size_t>(t)].plan_objective <= s.plan_objective + 1e-6;
          v_low = std::min(v_low, s.plan_objective);
          v_high = std::max(v_high, s.plan_objective);
        }
      }
      worst_fraction = std::min(worst_fraction, static_cast<double>(ok) / steps);
      (T == 1024 ? peaks_short : peaks_long).push_back(peak);
    }
    worst_seed_ratio = std::max(worst_seed_ratio, peaks_long.back() / peaks_short.back());
  }
  const double ratio = median(peaks_long) / median(peaks_short);
  report(7, ratio <= 1.5 && worst_fraction >= 0.95,
         fmt("median max|x_hat| ratio T=4096 vs 1024 %.3f", ratio) +
             fmt(" (per-seed worst %.3f)", worst_seed_ratio) +
             fmt(", worst fraction of steps with V_{t+1} <= V_t + 1e-6: %.3f", worst_fraction) +
             fmt(" (post-transient V_t in [%.1e", v_low) + fmt(", %.1e])", v_high));
}

void coincidences() {
  const ExperimentConfig cfg;
  double ompc_gap = 0.0, known_gap = 0.0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    for (CostFamily family : {CostFamily::kQuadraticOffset, CostFamily::kSetDistance, CostFamily::kCubicOffset}) {
      ExperimentConfig c = cfg;
      c.cost.kind = family;
      const ProblemInstance inst = make_instance(c, 1024, seed);
      const EstimateResult est = run_estimate(c, inst);
      ControlOptions opts;
      opts.solver = c.control_solver();
      opts.exploration_seed = seed;
      const Sensor sensor = make_sensor(inst.observation);
      const RunTrace ce = run_ce_mpc(inst.theta_star, sensor, est.theta_hat, inst.costs, inst.M, inst.T0, 1024, opts);
      const RunTrace om = run_o_mpc(inst.theta_star, sensor, ConfidenceRegion{est.theta_hat, 0.0, inst.S},
                                    inst.costs, inst.M, inst.T0, 1024, opts);
      for (std::size_t t = 0; t < ce.steps.size(); ++t) {
        ompc_gap = std::max({ompc_gap, (ce.steps[t].x - om.steps[t].x).cwiseAbs().maxCoeff(),
                             (ce.steps[t].x_hat - om.steps[t].x_hat).cwiseAbs().maxCoeff(),
                             (ce.steps[t].u - om.steps[t].u).cwiseAbs().maxCoeff()});
      }
      const Sensor exact = make_sensor({0.0, NoiseKind::kZero, seed});
      const RunTrace ce_exact =
          run_ce_mpc(inst.theta_star, exact, inst.theta_star, inst.costs, inst.M, inst.T0, 1024, opts);
      ControlOptions known_opts = opts;
      known_opts.known_T0 = inst.T0;
      const RunTrace known = run_mpc_known(inst.theta_star, exact, inst.costs, inst.M, 1024, known_opts);
      for (std::size_t t = 0; t < ce_exact.steps.size(); ++t) {
        known_gap = std::max({known_gap, (ce_exact.steps[t].x - known.steps[t].x).cwiseAbs().maxCoeff(),
                              (ce_exact.steps[t].u - known.steps[t].u).cwiseAbs().maxCoeff()});
      }
    }
  }
  report(8, ompc_gap <= 1e-8 && known_gap <= 1e-10,
         fmt("O-MPC(radius 0) vs CE max gap %.1e", ompc_gap) + fmt(", CE(exact model) vs known-model %.1e", known_gap) +
             " (3 seeds x 3 cost families, T = 1024)");
}

}  // namespace

int main(int argc, char** argv) {
  const std::filesystem::path out_dir = argc > 1 ? argv[1] : std::filesystem::temp_directory_path();
  std::filesystem::create_directories(out_dir);
  try {
    estimation_rate();
    oracle_equivalence();
    gradient_suite();
    boundedness();
    coincidences();
    sweep_criteria(out_dir);
  } catch (const std::exception& e) {
    std::printf("aborted: %s\n", e.what());
    return 100;
  }
  for (const auto& [id, line] : results) std::printf("%s\n", line.c_str());
  std::printf("%d of %zu criteria failed\n", failures, results.size());
  return failures;
}
