#include "olmpc/experiment.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <climits>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "olmpc/csv_io.h"
#include "olmpc/errors.h"
#include "olmpc/rng.h"

namespace olmpc {
namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"experiment", {"n", "m", "M", "T", "T0_exponent", "T0", "seeds", "algorithms", "x1"}},
      {"system", {"a_min", "a_max", "b_min", "b_max"}},
      {"noise", {"eps_c", "kind"}},
      {"cost", {"family", "offset", "diag_min", "diag_max", "ball_center",
                "ball_radius", "cubic_offset"}},
      {"confidence", {"delta", "radius_rule", "radius_scale", "kappa", "c_rho",
                      "gamma_rho", "S"}},
      {"solver", {"grad_tol", "max_iters", "restarts", "init_scale", "seed",
                  "hindsight_max_iters", "hindsight_restarts",
                  "pistar_residual_max"}},
  };
  return keys;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(s);
  while (std::getline(ss, cell, ',')) {
    cell = trim(cell);
    if (!cell.empty()) out.push_back(cell);
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size() || !std::isfinite(d)) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': expected a number, got '" + v + "'");
  }
}

long long to_integer(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long long i = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return i;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': expected an integer, got '" + v + "'");
  }
}

int to_int(const std::string& key, const std::string& v) {
  const long long i = to_integer(key, v);
  if (i < INT_MIN || i > INT_MAX) throw ConfigError("key '" + key + "': out of range");
  return static_cast<int>(i);
}

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? ", " : "") + parts[i];
  return out;
}

std::string opt_text(const std::optional<double>& v) {
  return v ? format_double(*v) : "auto";
}

void apply(ExperimentConfig& cfg, const std::string& section,
           const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  const std::string full = section + "." + key;
  auto number = [&] { return to_double(full, v); };
  auto integer = [&] { return to_int(full, v); };
  auto optional_number = [&]() -> std::optional<double> {
    if (v == "auto") return std::nullopt;
    return number();
  };

  if (section == "experiment") {
    if (key == "n") cfg.n = integer();
    else if (key == "m") cfg.m = integer();
    else if (key == "M") cfg.M = v == "auto" ? std::nullopt : std::optional<int>(integer());
    else if (key == "T") {
      cfg.T_list.clear();
      for (const auto& s : split_list(v)) cfg.T_list.push_back(to_int(full, s));
    } else if (key == "T0_exponent") cfg.T0_exponent = number();
    else if (key == "T0") cfg.T0_fixed = v == "auto" ? std::nullopt : std::optional<int>(integer());
    else if (key == "seeds") {
      cfg.seeds.clear();
      for (const auto& s : split_list(v)) {
        const long long seed = to_integer(full, s);
        if (seed < 0) throw ConfigError("seeds must be non-negative");
        cfg.seeds.push_back(static_cast<std::uint64_t>(seed));
      }
    } else if (key == "algorithms") {
      cfg.algorithms.clear();
      for (const auto& s : split_list(v)) {
        if (s == "both") {
          cfg.algorithms.push_back(Algorithm::kCe);
          cfg.algorithms.push_back(Algorithm::kOmpc);
        } else {
          cfg.algorithms.push_back(parse_algorithm(s));
        }
      }
    } else if (key == "x1") {
      if (v == "zero") {
        cfg.x1.reset();
      } else {
        const auto parts = split_list(v);
        Vector x(static_cast<Eigen::Index>(parts.size()));
        for (std::size_t i = 0; i < parts.size(); ++i) {
          x(static_cast<Eigen::Index>(i)) = to_double(full, parts[i]);
        }
        cfg.x1 = x;
      }
    }
  } else if (section == "system") {
    if (key == "a_min") cfg.a_min = number();
    else if (key == "a_max") cfg.a_max = number();
    else if (key == "b_min") cfg.b_min = number();
    else if (key == "b_max") cfg.b_max = number();
  } else if (section == "noise") {
    if (key == "eps_c") cfg.eps_c = number();
    else if (key == "kind") {
      if (v == "zero") cfg.noise_kind = NoiseKind::kZero;
      else if (v == "uniform_ball") cfg.noise_kind = NoiseKind::kUniformBall;
      else throw ConfigError("noise.kind must be zero or uniform_ball");
    }
  } else if (section == "cost") {
    if (key == "family") {
      cfg.cost.kind = parse_cost_family(v);
      if (cfg.cost.kind == CostFamily::kCustom) {
        throw ConfigError("cost.family = custom is only available through the library API");
      }
    } else if (key == "offset") cfg.cost.offset = number();
    else if (key == "diag_min") cfg.cost.diag_min = number();
    else if (key == "diag_max") cfg.cost.diag_max = number();
    else if (key == "ball_center") cfg.cost.ball_center = number();
    else if (key == "ball_radius") cfg.cost.ball_radius = number();
    else if (key == "cubic_offset") cfg.cost.cubic_offset = number();
  } else if (section == "confidence") {
    if (key == "delta") cfg.delta = number();
    else if (key == "radius_rule") {
      if (v == "formula") cfg.radius_rule = RadiusRule::kFormula;
      else if (v == "scaled") cfg.radius_rule = RadiusRule::kScaled;
      else throw ConfigError("confidence.radius_rule must be formula or scaled");
    } else if (key == "radius_scale") cfg.radius_scale = number();
    else if (key == "kappa") cfg.kappa = optional_number();
    else if (key == "c_rho") cfg.c_rho = optional_number();
    else if (key == "gamma_rho") cfg.gamma_rho = optional_number();
    else if (key == "S") cfg.S = optional_number();
  } else if (section == "solver") {
    if (key == "grad_tol") cfg.solver.grad_tol = number();
    else if (key == "max_iters") cfg.solver.max_iters = integer();
    else if (key == "restarts") cfg.restarts = v == "auto" ? std::nullopt : std::optional<int>(integer());
    else if (key == "init_scale") cfg.solver.init_scale = number();
    else if (key == "seed") {
      const long long seed = to_integer(full, v);
      if (seed < 0) throw ConfigError("solver.seed must be non-negative");
      cfg.solver.seed = static_cast<std::uint64_t>(seed);
    } else if (key == "hindsight_max_iters") cfg.hindsight_max_iters = integer();
    else if (key == "hindsight_restarts") cfg.hindsight_restarts = integer();
    else if (key == "pistar_residual_max") cfg.pistar_residual_max = number();
  }
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size();
  return k % 2 ? v[k / 2] : 0.5 * (v[k / 2 - 1] + v[k / 2]);
}

}  // namespace

void ExperimentConfig::validate() const {
  if (n < 1 || m < 1) throw ConfigError("n and m must be positive");
  if (M && *M < 1) throw ConfigError("M must be >= 1 or auto");
  if (T_list.empty()) throw ConfigError("experiment.T must list at least one horizon");
  if (seeds.empty()) throw ConfigError("experiment.seeds must not be empty");
  if (algorithms.empty()) throw ConfigError("experiment.algorithms must not be empty");
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("confidence.delta must lie in (0, 1)");
  if (!(T0_exponent > 0.0 && T0_exponent < 1.0)) {
    throw ConfigError("experiment.T0_exponent must lie in (0, 1)");
  }
  for (int T : T_list) {
    const int T0 = T0_for(T);
    if (!(T > T0 && T0 >= n + 1)) {
      throw ConfigError("need T > T0 >= n+1; T=" + std::to_string(T) +
                        " gives T0=" + std::to_string(T0));
    }
  }
  if (a_min > a_max || b_min > b_max) throw ConfigError("system ranges are inverted");
  if (eps_c < 0.0) throw ConfigError("noise.eps_c must be non-negative");
  if (cost.kind == CostFamily::kCubicOffset && n != 2) {
    throw ConfigError("cost.family = cubic_offset requires n = 2");
  }
  if (cost.kind == CostFamily::kQuadraticOffset &&
      !(cost.diag_min > 0.0 && cost.diag_max >= cost.diag_min)) {
    throw ConfigError("cost diag range must satisfy 0 < diag_min <= diag_max");
  }
  if (cost.ball_radius < 0.0) throw ConfigError("cost.ball_radius must be >= 0");
  if (!(radius_scale >= 0.0)) throw ConfigError("confidence.radius_scale must be >= 0");
  if (S && !(*S > 0.0)) throw ConfigError("confidence.S must be positive");
  if (gamma_rho && !(*gamma_rho > 0.0 && *gamma_rho < 1.0)) {
    throw ConfigError("confidence.gamma_rho must lie in (0, 1)");
  }
  if (c_rho && !(*c_rho >= 1.0)) throw ConfigError("confidence.c_rho must be >= 1");
  if (kappa && !(*kappa > 0.0)) throw ConfigError("confidence.kappa must be positive");
  if (!(solver.grad_tol > 0.0) || solver.max_iters < 1 || !(solver.init_scale > 0.0)) {
    throw ConfigError("solver settings must be positive");
  }
  if (restarts && *restarts < 1) throw ConfigError("solver.restarts must be >= 1");
  if (hindsight_max_iters < 1 || hindsight_restarts < 1) {
    throw ConfigError("hindsight solver settings must be positive");
  }
  if (x1 && x1->size() != n) throw ConfigError("experiment.x1 must have n entries");
}

int ExperimentConfig::T0_for(int T) const {
  if (T0_fixed) return *T0_fixed;
  // Guard against pow round-off pushing exact powers (e.g. 512^(2/3) = 64)
  // past the integer.
  const double raw = std::pow(static_cast<double>(T), T0_exponent);
  return static_cast<int>(std::ceil(raw - 1e-9));
}

SolverConfig ExperimentConfig::control_solver() const {
  SolverConfig s = solver;
  s.restarts = restarts ? *restarts
                        : (cost.kind == CostFamily::kQuadraticOffset ? 1 : 8);
  return s;
}

SolverConfig ExperimentConfig::hindsight_solver() const {
  SolverConfig s = solver;
  s.max_iters = hindsight_max_iters;
  s.restarts = hindsight_restarts;
  return s;
}

double ExperimentConfig::norm_cap() const {
  const double a = std::max(std::abs(a_min), std::abs(a_max));
  const double b = std::max(std::abs(b_min), std::abs(b_max));
  return std::sqrt(static_cast<double>(n) * n * a * a + static_cast<double>(n) * m * b * b);
}

ExperimentConfig parse_config(const std::string& text,
                              const std::vector<std::string>& overrides) {
  pt::ptree tree;
  try {
    std::istringstream is(text);
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax: ") + e.what());
  }
  for (const auto& ov : overrides) {
    const auto eq = ov.find('=');
    const auto dot = ov.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
      throw ConfigError("override '" + ov + "' must look like section.key=value");
    }
    const std::string section = trim(ov.substr(0, dot));
    const std::string key = trim(ov.substr(dot + 1, eq - dot - 1));
    const auto it = known_keys().find(section);
    if (it == known_keys().end() || !it->second.count(key)) {
      throw ConfigError("override names unknown key '" + section + "." + key + "'");
    }
    tree.put(pt::ptree::path_type(section + "/" + key, '/'), ov.substr(eq + 1));
  }

  ExperimentConfig cfg;
  for (const auto& [section, body] : tree) {
    const auto it = known_keys().find(section);
    if (it == known_keys().end()) {
      throw ConfigError("unknown config section or top-level key '" + section + "'");
    }
    for (const auto& [key, value] : body) {
      if (!it->second.count(key)) {
        throw ConfigError("unknown config key '" + section + "." + key + "'");
      }
      apply(cfg, section, key, value.data());
    }
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path,
                             const std::vector<std::string>& overrides) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config '" + path + "'");
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str(), overrides);
}

std::string to_config_text(const ExperimentConfig& cfg) {
  std::ostringstream os;
  std::vector<std::string> parts;
  os << "[experiment]\n";
  os << "n = " << cfg.n << "\nm = " << cfg.m << "\n";
  os << "M = " << (cfg.M ? std::to_string(*cfg.M) : "auto") << "\n";
  parts.clear();
  for (int T : cfg.T_list) parts.push_back(std::to_string(T));
  os << "T = " << join(parts) << "\n";
  os << "T0_exponent = " << format_double(cfg.T0_exponent) << "\n";
  os << "T0 = " << (cfg.T0_fixed ? std::to_string(*cfg.T0_fixed) : "auto") << "\n";
  parts.clear();
  for (auto s : cfg.seeds) parts.push_back(std::to_string(s));
  os << "seeds = " << join(parts) << "\n";
  parts.clear();
  for (auto a : cfg.algorithms) parts.push_back(to_string(a));
  os << "algorithms = " << join(parts) << "\n";
  if (cfg.x1) {
    parts.clear();
    for (Eigen::Index i = 0; i < cfg.x1->size(); ++i) parts.push_back(format_double((*cfg.x1)(i)));
    os << "x1 = " << join(parts) << "\n";
  } else {
    os << "x1 = zero\n";
  }
  os << "\n[system]\n"
     << "a_min = " << format_double(cfg.a_min) << "\na_max = " << format_double(cfg.a_max)
     << "\nb_min = " << format_double(cfg.b_min) << "\nb_max = " << format_double(cfg.b_max)
     << "\n";
  os << "\n[noise]\neps_c = " << format_double(cfg.eps_c) << "\nkind = "
     << (cfg.noise_kind == NoiseKind::kZero ? "zero" : "uniform_ball") << "\n";
  os << "\n[cost]\nfamily = " << to_string(cfg.cost.kind)
     << "\noffset = " << format_double(cfg.cost.offset)
     << "\ndiag_min = " << format_double(cfg.cost.diag_min)
     << "\ndiag_max = " << format_double(cfg.cost.diag_max)
     << "\nball_center = " << format_double(cfg.cost.ball_center)
     << "\nball_radius = " << format_double(cfg.cost.ball_radius)
     << "\ncubic_offset = " << format_double(cfg.cost.cubic_offset) << "\n";
  os << "\n[confidence]\ndelta = " << format_double(cfg.delta) << "\nradius_rule = "
     << (cfg.radius_rule == RadiusRule::kFormula ? "formula" : "scaled")
     << "\nradius_scale = " << format_double(cfg.radius_scale)
     << "\nkappa = " << opt_text(cfg.kappa) << "\nc_rho = " << opt_text(cfg.c_rho)
     << "\ngamma_rho = " << opt_text(cfg.gamma_rho) << "\nS = " << opt_text(cfg.S) << "\n";
  os << "\n[solver]\ngrad_tol = " << format_double(cfg.solver.grad_tol)
     << "\nmax_iters = " << cfg.solver.max_iters
     << "\nrestarts = " << (cfg.restarts ? std::to_string(*cfg.restarts) : "auto")
     << "\ninit_scale = " << format_double(cfg.solver.init_scale)
     << "\nseed = " << cfg.solver.seed
     << "\nhindsight_max_iters = " << cfg.hindsight_max_iters
     << "\nhindsight_restarts = " << cfg.hindsight_restarts
     << "\npistar_residual_max = " << format_double(cfg.pistar_residual_max) << "\n";
  return os.str();
}

std::string config_fingerprint(const ExperimentConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : to_config_text(cfg)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

SystemParams generate_system(const ExperimentConfig& cfg, std::uint64_t seed) {
  auto rng = make_engine(seed, Stream::kSystem, 0);
  std::uniform_real_distribution<double> a(cfg.a_min, cfg.a_max);
  std::uniform_real_distribution<double> b(cfg.b_min, cfg.b_max);
  Matrix A(cfg.n, cfg.n), B(cfg.n, cfg.m);
  for (int i = 0; i < cfg.n; ++i) {
    for (int j = 0; j < cfg.n; ++j) A(i, j) = a(rng);
  }
  for (int i = 0; i < cfg.n; ++i) {
    for (int j = 0; j < cfg.m; ++j) B(i, j) = b(rng);
  }
  return SystemParams(std::move(A), std::move(B));
}

int auto_preview(const CostSequence& costs, const SystemParams& theta, int T) {
  constexpr int kMaxPreview = 64;
  int M = 1;
  for (int round = 0; round < 16; ++round) {
    const StabilityRatio ratio = estimate_stability_ratio(costs, theta, M);
    const int needed = ratio.min_preview;
    if (needed > kMaxPreview) {
      throw DiagnosticError("automatic preview: stability ratio " +
                            std::to_string(ratio.ratio()) +
                            " asks for more than " + std::to_string(kMaxPreview) +
                            " steps");
    }
    if (needed <= M) return std::min(M, T);
    M = needed;
  }
  return std::min(M, T);
}

ProblemInstance make_instance(const ExperimentConfig& cfg, int T,
                              std::uint64_t seed) {
  ProblemInstance inst{generate_system(cfg, seed),
                       CostSequence(cfg.cost, seed, T, cfg.n, cfg.m),
                       {},
                       {},
                       0.0,
                       T,
                       cfg.T0_for(T),
                       0,
                       seed,
                       cfg.x1 ? *cfg.x1 : Vector::Zero(cfg.n)};
  inst.certificate = decay_certificate(inst.theta_star);
  if (cfg.kappa) inst.certificate.kappa = *cfg.kappa;
  if (cfg.c_rho) inst.certificate.c_rho = *cfg.c_rho;
  if (cfg.gamma_rho) inst.certificate.gamma_rho = *cfg.gamma_rho;
  inst.S = cfg.S ? *cfg.S : cfg.norm_cap();
  inst.observation = {cfg.eps_c, cfg.noise_kind, seed};
  inst.M = cfg.M ? *cfg.M : auto_preview(inst.costs, inst.theta_star, T);
  return inst;
}

EstimateResult run_estimate(const ExperimentConfig& cfg,
                            const ProblemInstance& inst) {
  EstimateResult est;
  est.exploration = run_exploration(inst.theta_star, inst.observation, inst.T0,
                                    inst.seed, inst.x1);
  est.theta_hat = ls_estimate(markov_params(est.exploration.log, cfg.n));
  est.estimation_error = frobenius_distance(est.theta_hat, inst.theta_star);
  const DecayCertificate& c = inst.certificate;
  est.beta_formula = confidence_radius_unclamped(
      cfg.n, cfg.m, c.kappa, cfg.eps_c, c.c_rho, c.gamma_rho, inst.S, cfg.delta,
      inst.T0);
  double radius = est.beta_formula;
  if (cfg.radius_rule == RadiusRule::kScaled) {
    const double log_term =
        std::log(static_cast<double>(cfg.m) * cfg.n * cfg.n / cfg.delta);
    radius = cfg.radius_scale * std::sqrt(log_term / inst.T0);
  }
  est.region = {est.theta_hat, std::min(radius, 2.0 * inst.S), inst.S};
  return est;
}

RunOutput run_single(const ExperimentConfig& cfg, const ProblemInstance& inst,
                     const EstimateResult& est, const HindsightSolution& pistar,
                     Algorithm algo) {
  ControlOptions opts;
  opts.solver = cfg.control_solver();
  opts.x1 = inst.x1;
  opts.exploration_seed = inst.seed;
  opts.config_fingerprint = config_fingerprint(cfg);
  const Sensor sensor = make_sensor(inst.observation);
  RunOutput out;
  switch (algo) {
    case Algorithm::kCe:
      out.trace = run_ce_mpc(inst.theta_star, sensor, est.theta_hat, inst.costs,
                             inst.M, inst.T0, inst.T, opts);
      break;
    case Algorithm::kOmpc:
      out.trace = run_o_mpc(inst.theta_star, sensor, est.region, inst.costs,
                            inst.M, inst.T0, inst.T, opts);
      break;
    case Algorithm::kKnown:
      out.trace = run_mpc_known(inst.theta_star, sensor, inst.costs, inst.M,
                                inst.T, opts);
      break;
  }
  out.record = dynamic_regret(out.trace, pistar);
  return out;
}

AlgorithmSummary summarize(const std::vector<RegretRecord>& records,
                           Algorithm algo, double pistar_residual_max) {
  AlgorithmSummary summary;
  summary.algo = algo;
  std::map<int, std::vector<double>> by_T;
  for (const auto& r : records) {
    if (r.algo != algo) continue;
    auto& bucket = by_T[r.T];
    if (!(r.pistar_residual <= pistar_residual_max)) {
      ++summary.excluded_unconverged;
    } else if (!(r.R_T > 0.0)) {
      ++summary.excluded_nonpositive;
    } else {
      bucket.push_back(r.R_T);
    }
  }
  std::vector<std::pair<double, double>> points;
  for (const auto& [T, values] : by_T) {
    MedianPoint p;
    p.T = T;
    p.count = static_cast<int>(values.size());
    p.median_R = values.empty() ? std::numeric_limits<double>::quiet_NaN()
                                : median(values);
    summary.medians.push_back(p);
    if (!values.empty()) points.emplace_back(static_cast<double>(T), p.median_R);
  }
  try {
    summary.fit = fit_loglog_slope(points);
  } catch (const InsufficientDataError& e) {
    summary.fit_error = e.what();
  }
  return summary;
}

SweepResult sweep(const ExperimentConfig& cfg, const SweepOptions& opts) {
  cfg.validate();
  struct Job {
    int T;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (int T : cfg.T_list) {
    for (auto seed : cfg.seeds) jobs.push_back({T, seed});
  }
  struct JobResult {
    std::vector<RegretRecord> records;
    std::vector<RunFailure> failures;
  };
  std::vector<JobResult> results(jobs.size());

  auto run_job = [&](std::size_t index) {
    const Job& job = jobs[index];
    JobResult& out = results[index];
    auto fail_all = [&](const std::string& msg) {
      for (auto algo : cfg.algorithms) out.failures.push_back({algo, job.T, job.seed, msg});
    };
    std::optional<ProblemInstance> inst;
    std::optional<EstimateResult> est;
    HindsightSolution pistar;
    try {
      inst.emplace(make_instance(cfg, job.T, job.seed));
      est.emplace(run_estimate(cfg, *inst));
      pistar = hindsight_optimal(inst->theta_star, inst->costs, inst->x1, job.T,
                                 cfg.hindsight_solver());
    } catch (const std::exception& e) {
      fail_all(e.what());
      return;
    }
    for (auto algo : cfg.algorithms) {
      try {
        const auto start = std::chrono::steady_clock::now();
        RunOutput run = run_single(cfg, *inst, *est, pistar, algo);
        if (opts.record_runtime) {
          run.record.runtime_ms = std::chrono::duration<double, std::milli>(
                                      std::chrono::steady_clock::now() - start)
                                      .count();
        }
        out.records.push_back(run.record);
      } catch (const std::exception& e) {
        out.failures.push_back({algo, job.T, job.seed, e.what()});
      }
    }
  };

  const int workers = std::max(1, std::min<int>(opts.workers, static_cast<int>(jobs.size())));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) run_job(i);
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  SweepResult result;
  for (auto& r : results) {
    result.records.insert(result.records.end(), r.records.begin(), r.records.end());
    result.failures.insert(result.failures.end(), r.failures.begin(), r.failures.end());
  }
  for (auto algo : cfg.algorithms) {
    result.summaries.push_back(summarize(result.records, algo, cfg.pistar_residual_max));
  }
  return result;
}

}  // namespace olmpc
