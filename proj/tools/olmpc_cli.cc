// Command-line driver for the online-learning MPC experiments.
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "olmpc/controllers.h"
#include "olmpc/costs.h"
#include "olmpc/csv_io.h"
#include "olmpc/errors.h"
#include "olmpc/experiment.h"
#include "olmpc/regret.h"
#include "olmpc/sysid.h"

namespace {

using olmpc::Algorithm;
using olmpc::ExperimentConfig;
using nlohmann::json;

enum ExitCode { kOk = 0, kConfig = 2, kNumerical = 3, kIo = 4 };

struct CommonArgs {
  std::string config;
  std::string out = ".";
  std::string seeds;
  std::string algo;
  std::vector<std::string> overrides;
  int T = 0;
};

struct SolverArgs {
  std::string grad_tol, max_iters, restarts, init_scale, seed;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool with_algo) {
  cmd->add_option("--config", args.config, "experiment config file (INI)");
  cmd->add_option("--out", args.out, "output directory")->capture_default_str();
  cmd->add_option("--seeds", args.seeds, "comma-separated seed list");
  if (with_algo) {
    cmd->add_option("--algo", args.algo, "ce | ompc | both | known")
        ->check(CLI::IsMember({"ce", "ompc", "both", "known"}));
  }
  cmd->add_option("--override", args.overrides, "section.key=value (repeatable)");
}

void add_solver(CLI::App* cmd, SolverArgs& s) {
  cmd->add_option("--grad-tol", s.grad_tol, "solver gradient tolerance");
  cmd->add_option("--max-iters", s.max_iters, "solver iteration cap");
  cmd->add_option("--restarts", s.restarts, "solver restarts (or auto)");
  cmd->add_option("--init-scale", s.init_scale, "restart perturbation scale");
  cmd->add_option("--solver-seed", s.seed, "restart seed");
}

ExperimentConfig resolve(const CommonArgs& args, const SolverArgs* solver) {
  std::vector<std::string> ov = args.overrides;
  if (!args.seeds.empty()) ov.push_back("experiment.seeds=" + args.seeds);
  if (!args.algo.empty()) ov.push_back("experiment.algorithms=" + args.algo);
  if (args.T > 0) ov.push_back("experiment.T=" + std::to_string(args.T));
  if (solver) {
    auto push = [&](const char* key, const std::string& v) {
      if (!v.empty()) ov.push_back(std::string("solver.") + key + "=" + v);
    };
    push("grad_tol", solver->grad_tol);
    push("max_iters", solver->max_iters);
    push("restarts", solver->restarts);
    push("init_scale", solver->init_scale);
    push("seed", solver->seed);
  }
  if (args.config.empty()) return olmpc::parse_config("", ov);
  return olmpc::load_config(args.config, ov);
}

std::filesystem::path prepare_out(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw olmpc::IoError("cannot create output directory '" + dir + "': " + ec.message());
  return dir;
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream os(path);
  if (!os) throw olmpc::IoError("cannot open '" + path.string() + "' for writing");
  os << j.dump(2) << "\n";
  if (!os) throw olmpc::IoError("write failed for '" + path.string() + "'");
}

json matrix_json(const olmpc::Matrix& M) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(row);
  }
  return rows;
}

json fit_json(const olmpc::AlgorithmSummary& s) {
  json j;
  j["algo"] = olmpc::to_string(s.algo);
  j["excluded_nonpositive"] = s.excluded_nonpositive;
  j["excluded_unconverged"] = s.excluded_unconverged;
  json medians = json::array();
  for (const auto& p : s.medians) {
    medians.push_back({{"T", p.T}, {"median_R", p.median_R}, {"count", p.count}});
  }
  j["medians"] = medians;
  if (s.fit) {
    j["slope"] = s.fit->slope;
    j["intercept"] = s.fit->intercept;
    j["stderr"] = s.fit->stderr_slope;
    j["ci95"] = {s.fit->ci_low, s.fit->ci_high};
  } else {
    j["fit_error"] = s.fit_error;
  }
  return j;
}

std::string tag(Algorithm a, int T, std::uint64_t seed) {
  return olmpc::to_string(a) + "_T" + std::to_string(T) + "_s" + std::to_string(seed);
}

int cmd_simulate(const ExperimentConfig& cfg, const std::filesystem::path& out) {
  for (int T : cfg.T_list) {
    for (auto seed : cfg.seeds) {
      const olmpc::SystemParams theta = olmpc::generate_system(cfg, seed);
      std::vector<olmpc::Vector> inputs;
      inputs.reserve(static_cast<std::size_t>(T));
      for (int t = 1; t <= T; ++t) inputs.push_back(olmpc::exploration_input(seed, t, cfg.m));
      const olmpc::Vector x1 = cfg.x1 ? *cfg.x1 : olmpc::Vector::Zero(cfg.n);
      const auto traj = olmpc::rollout(theta, x1, inputs);
      const auto path = out / ("trajectory_T" + std::to_string(T) + "_s" + std::to_string(seed) + ".csv");
      olmpc::write_trajectory_csv(path.string(), traj);
      std::cout << path.string() << "\n";
    }
  }
  return kOk;
}

int cmd_estimate(const ExperimentConfig& cfg, const std::filesystem::path& out) {
  for (int T : cfg.T_list) {
    for (auto seed : cfg.seeds) {
      const auto inst = olmpc::make_instance(cfg, T, seed);
      const auto est = olmpc::run_estimate(cfg, inst);
      json j;
      j["T"] = T;
      j["T0"] = inst.T0;
      j["seed"] = seed;
      j["A_hat"] = matrix_json(est.theta_hat.A());
      j["B_hat"] = matrix_json(est.theta_hat.B());
      j["estimation_error_fro"] = est.estimation_error;
      j["beta_formula"] = est.beta_formula;
      j["radius"] = est.region.radius;
      j["S"] = inst.S;
      j["kappa"] = inst.certificate.kappa;
      j["c_rho"] = inst.certificate.c_rho;
      j["gamma_rho"] = inst.certificate.gamma_rho;
      j["spectral_radius"] = inst.certificate.spectral_radius;
      j["config_fingerprint"] = olmpc::config_fingerprint(cfg);
      const auto path = out / ("estimate_T" + std::to_string(T) + "_s" + std::to_string(seed) + ".json");
      write_json(path, j);
      std::cout << path.string() << "\n";
    }
  }
  return kOk;
}

int cmd_run(const ExperimentConfig& cfg, const std::filesystem::path& out) {
  std::vector<olmpc::RegretRecord> records;
  for (int T : cfg.T_list) {
    for (auto seed : cfg.seeds) {
      const auto inst = olmpc::make_instance(cfg, T, seed);
      const auto est = olmpc::run_estimate(cfg, inst);
      const auto pistar = olmpc::hindsight_optimal(inst.theta_star, inst.costs, inst.x1,
                                                   T, cfg.hindsight_solver());
      for (auto algo : cfg.algorithms) {
        const auto run = olmpc::run_single(cfg, inst, est, pistar, algo);
        const auto path = out / ("trace_" + tag(algo, T, seed) + ".csv");
        olmpc::write_trace_csv(path.string(), run.trace);
        records.push_back(run.record);
        std::printf("%s T=%d seed=%llu M=%d R_T=%s\n", olmpc::to_string(algo).c_str(), T,
                    static_cast<unsigned long long>(seed), inst.M,
                    olmpc::format_double(run.record.R_T).c_str());
      }
    }
  }
  olmpc::write_records_csv((out / "records.csv").string(), records);
  return kOk;
}

int cmd_sweep(const ExperimentConfig& cfg, const std::filesystem::path& out,
              int workers, bool timing) {
  olmpc::SweepOptions opts;
  opts.workers = workers;
  opts.record_runtime = timing;
  const auto result = olmpc::sweep(cfg, opts);
  olmpc::write_records_csv((out / "records.csv").string(), result.records);
  olmpc::write_failures_csv((out / "failures.csv").string(), result.failures);
  json summary = json::array();
  for (const auto& s : result.summaries) {
    olmpc::write_plot_data((out / ("plot_" + olmpc::to_string(s.algo) + ".csv")).string(), s);
    summary.push_back(fit_json(s));
  }
  write_json(out / "summary.json", summary);
  std::ofstream cfg_copy(out / "config.ini");
  if (!cfg_copy) throw olmpc::IoError("cannot write '" + (out / "config.ini").string() + "'");
  cfg_copy << olmpc::to_config_text(cfg);
  std::cout << summary.dump(2) << "\n";
  if (!result.failures.empty()) {
    std::cerr << result.failures.size() << " run(s) failed; see failures.csv\n";
  }
  return kOk;
}

int cmd_slope(const std::string& records_path, const std::string& out_dir,
              double residual_max) {
  const auto records = olmpc::read_records_csv(records_path);
  std::vector<Algorithm> algos;
  for (const auto& r : records) {
    if (std::find(algos.begin(), algos.end(), r.algo) == algos.end()) algos.push_back(r.algo);
  }
  json summary = json::array();
  for (auto a : algos) {
    const auto s = olmpc::summarize(records, a, residual_max);
    if (!out_dir.empty()) {
      const auto out = prepare_out(out_dir);
      olmpc::write_plot_data((out / ("plot_" + olmpc::to_string(a) + ".csv")).string(), s);
    }
    summary.push_back(fit_json(s));
  }
  std::cout << summary.dump(2) << "\n";
  return kOk;
}

int cmd_diagnose(const ExperimentConfig& cfg, int samples) {
  json rows = json::array();
  for (int T : cfg.T_list) {
    for (auto seed : cfg.seeds) {
      const auto theta = olmpc::generate_system(cfg, seed);
      const olmpc::CostSequence costs(cfg.cost, seed, T, cfg.n, cfg.m);
      json row;
      row["T"] = T;
      row["seed"] = seed;
      row["family"] = olmpc::to_string(cfg.cost.kind);
      row["spectral_radius"] = olmpc::spectral_radius(theta.A());
      const int M = cfg.M ? *cfg.M : olmpc::auto_preview(costs, theta, T);
      olmpc::RatioSampling sampling;
      sampling.sample_count = samples;
      sampling.seed = seed;
      const auto ratio = olmpc::estimate_stability_ratio(costs, theta, M, sampling);
      row["M"] = M;
      row["alpha_lower"] = ratio.alpha_lower;
      row["alpha_upper"] = ratio.alpha_upper;
      row["ratio"] = ratio.ratio();
      row["min_preview"] = ratio.min_preview;
      row["samples_used"] = ratio.samples_used;
      row["preview_sufficient"] = M >= ratio.min_preview;
      rows.push_back(row);
    }
  }
  std::cout << rows.dump(2) << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online-learning MPC experiments"};
  app.require_subcommand(1);

  CommonArgs common;
  SolverArgs solver;
  int workers = 1;
  bool timing = false;
  std::string records_path;
  int samples = 512;
  double residual_max = 1e-4;

  auto* simulate = app.add_subcommand("simulate", "roll out generated systems under exploration inputs");
  add_common(simulate, common, false);
  simulate->add_option("--T", common.T, "horizon (default: every T in the config)");

  auto* estimate = app.add_subcommand("estimate", "exploration + least-squares estimate, writes JSON");
  add_common(estimate, common, false);
  estimate->add_option("--T", common.T, "horizon (default: every T in the config)");

  auto* run = app.add_subcommand("run", "closed-loop runs, writes trace CSVs");
  add_common(run, common, true);
  add_solver(run, solver);
  run->add_option("--T", common.T, "horizon (default: every T in the config)");

  auto* sweep = app.add_subcommand("sweep", "T grid x seeds, writes records and plot data");
  add_common(sweep, common, true);
  add_solver(sweep, solver);
  sweep->add_option("--workers", workers, "parallel workers")->check(CLI::PositiveNumber);
  sweep->add_flag("--timing", timing, "record wall-clock runtime_ms (breaks byte reproducibility)");

  auto* slope = app.add_subcommand("slope", "fit log-log slopes from a records CSV");
  slope->add_option("--records", records_path, "records CSV")->required();
  slope->add_option("--out", common.out, "write plot data here");
  slope->add_option("--residual-max", residual_max, "exclude records with larger pi* residual");

  auto* diagnose = app.add_subcommand("diagnose", "stability ratio and minimum preview");
  add_common(diagnose, common, false);
  diagnose->add_option("--T", common.T, "horizon (default: every T in the config)");
  diagnose->add_option("--samples", samples, "sampled states")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (slope->parsed()) {
      return cmd_slope(records_path, slope->count("--out") ? common.out : "", residual_max);
    }
    const bool with_solver = run->parsed() || sweep->parsed();
    const ExperimentConfig cfg = resolve(common, with_solver ? &solver : nullptr);
    if (diagnose->parsed()) return cmd_diagnose(cfg, samples);
    const auto out = prepare_out(common.out);
    if (simulate->parsed()) return cmd_simulate(cfg, out);
    if (estimate->parsed()) return cmd_estimate(cfg, out);
    if (run->parsed()) return cmd_run(cfg, out);
    return cmd_sweep(cfg, out, workers, timing);
  } catch (const olmpc::IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kIo;
  } catch (const olmpc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const olmpc::ParameterError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const olmpc::ContractViolation& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const olmpc::Error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  }
}
