#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "olmpc/controllers.h"
#include "olmpc/costs.h"
#include "olmpc/dynamics.h"
#include "olmpc/horizon_solver.h"
#include "olmpc/regret.h"
#include "olmpc/sysid.h"

namespace olmpc {

/// formula: the closed-form radius, clamped to 2S.
/// scaled: radius_scale * sqrt(log(m n^2 / delta) / T0), clamped to 2S.
enum class RadiusRule { kFormula, kScaled };

/// Everything a sweep needs. Mirrors the sections of the config file:
///
///   [experiment] n m M T T0_exponent T0 seeds algorithms x1
///   [system]     a_min a_max b_min b_max
///   [noise]      eps_c kind
///   [cost]       family offset diag_min diag_max ball_center ball_radius
///                cubic_offset
///   [confidence] delta radius_rule radius_scale kappa c_rho gamma_rho S
///   [solver]     grad_tol max_iters restarts init_scale seed
///                hindsight_max_iters hindsight_restarts pistar_residual_max
struct ExperimentConfig {
  int n = 2;
  int m = 1;
  std::optional<int> M = 5;  // nullopt: choose from the stability ratio
  std::vector<int> T_list = {512, 1024, 2048, 4096, 8192, 16384};
  double T0_exponent = 2.0 / 3.0;
  std::optional<int> T0_fixed;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  std::vector<Algorithm> algorithms = {Algorithm::kCe, Algorithm::kOmpc};
  std::optional<Vector> x1;

  double a_min = 0.0;
  double a_max = 0.5;
  double b_min = 0.0;
  double b_max = 1.0;

  double eps_c = 0.01;
  NoiseKind noise_kind = NoiseKind::kUniformBall;

  CostFamilyConfig cost;

  double delta = 0.05;
  RadiusRule radius_rule = RadiusRule::kFormula;
  double radius_scale = 1.0;
  std::optional<double> kappa;
  std::optional<double> c_rho;
  std::optional<double> gamma_rho;
  std::optional<double> S;

  SolverConfig solver;
  std::optional<int> restarts;  // unset: 1 for quadratic costs, 8 otherwise
  int hindsight_max_iters = 20000;
  int hindsight_restarts = 1;
  double pistar_residual_max = 1e-4;

  /// Throws ConfigError if T > T0 >= n+1 fails for some T, delta is outside
  /// (0, 1), or a range is malformed.
  void validate() const;
  int T0_for(int T) const;
  SolverConfig control_solver() const;
  SolverConfig hindsight_solver() const;
  /// Default S: the largest |[A B]|_F the generation ranges allow.
  double norm_cap() const;
};

/// Parses the key = value / [section] format. Unknown sections or keys are
/// ConfigErrors. Each override is "section.key=value" and replaces the file
/// value.
ExperimentConfig parse_config(const std::string& text,
                              const std::vector<std::string>& overrides = {});
ExperimentConfig load_config(const std::string& path,
                             const std::vector<std::string>& overrides = {});
/// Canonical text form; parse_config(to_config_text(c)) reproduces c.
std::string to_config_text(const ExperimentConfig& cfg);
/// FNV-1a hash of the canonical text, as 16 hex digits.
std::string config_fingerprint(const ExperimentConfig& cfg);

/// One (seed, T) problem: true system, costs, and oracle constants.
struct ProblemInstance {
  SystemParams theta_star;
  CostSequence costs;
  DecayCertificate certificate;
  ObservationModel observation;
  double S = 0.0;
  int T = 0;
  int T0 = 0;
  int M = 0;
  std::uint64_t seed = 0;
  Vector x1;
};

/// A entries U[a_min, a_max], B entries U[b_min, b_max], keyed by seed.
SystemParams generate_system(const ExperimentConfig& cfg, std::uint64_t seed);
ProblemInstance make_instance(const ExperimentConfig& cfg, int T,
                              std::uint64_t seed);

/// Fixed point M = ceil((alpha_upper(M) / alpha_lower)^2 + 1), capped at T.
int auto_preview(const CostSequence& costs, const SystemParams& theta, int T);

struct EstimateResult {
  Exploration exploration;
  SystemParams theta_hat;
  double estimation_error = 0.0;  // |theta_hat - theta_star|_F
  double beta_formula = 0.0;      // unclamped closed-form radius
  ConfidenceRegion region;        // radius per the configured rule
};

EstimateResult run_estimate(const ExperimentConfig& cfg,
                            const ProblemInstance& inst);

struct RunOutput {
  RegretRecord record;
  RunTrace trace;
};

/// Exploration, estimation, one closed-loop run and its regret record.
RunOutput run_single(const ExperimentConfig& cfg, const ProblemInstance& inst,
                     const EstimateResult& est, const HindsightSolution& pistar,
                     Algorithm algo);

struct RunFailure {
  Algorithm algo = Algorithm::kCe;
  int T = 0;
  std::uint64_t seed = 0;
  std::string message;
};

struct MedianPoint {
  int T = 0;
  double median_R = 0.0;
  int count = 0;
};

struct AlgorithmSummary {
  Algorithm algo = Algorithm::kCe;
  std::vector<MedianPoint> medians;  // ascending T
  std::optional<SlopeFit> fit;
  std::string fit_error;
  int excluded_nonpositive = 0;
  int excluded_unconverged = 0;
};

struct SweepResult {
  std::vector<RegretRecord> records;  // ordered by (T, seed, algorithm)
  std::vector<RunFailure> failures;
  std::vector<AlgorithmSummary> summaries;
};

struct SweepOptions {
  int workers = 1;
  bool record_runtime = false;  // off keeps the records byte-reproducible
};

SweepResult sweep(const ExperimentConfig& cfg, const SweepOptions& opts = {});

/// Median-per-T aggregation and log-log fit over records of one algorithm.
AlgorithmSummary summarize(const std::vector<RegretRecord>& records,
                           Algorithm algo, double pistar_residual_max);

}  // namespace olmpc
