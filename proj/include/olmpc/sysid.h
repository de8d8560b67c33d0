#pragma once

#include <cstdint>
#include <vector>

#include "olmpc/dynamics.h"

namespace olmpc {

/// Inputs u_1..u_{T0} and observations y_1..y_{T0+1} of the exploration
/// phase.
struct ExplorationLog {
  std::vector<Vector> inputs;
  std::vector<Vector> observations;
  int T0 = 0;
};

/// Empirical Markov parameters N_0..N_n; N_j estimates A^j B.
struct MarkovEstimates {
  std::vector<Matrix> N;
};

/// Closed Frobenius ball {theta : |theta - center|_F <= radius}.
struct ConfidenceRegion {
  SystemParams center;
  double radius = 0.0;
  double norm_cap = 0.0;  // S

  bool contains(const SystemParams& theta) const;
  /// Nearest point of the ball in Frobenius norm.
  SystemParams project(const SystemParams& theta) const;
};

/// Componentwise i.i.d. +-1 exploration input for time t.
Vector exploration_input(std::uint64_t seed, int t, int m);

/// N_j = (1/(T0-n)) sum_{t=1}^{T0-n} y_{t+j+1} u_t^T for j in [0, n].
/// Throws InsufficientDataError if T0 <= n.
MarkovEstimates markov_params(const ExplorationLog& log, int n);

struct LsOptions {
  double max_condition = 1e12;
  /// Optional Tikhonov term, relative to trace(C0 C0^T). Zero by default.
  double ridge_relative = 0.0;
};

/// B = N_0, A = C1 C0^T (C0 C0^T)^{-1} with C0 = [N_0..N_{n-1}],
/// C1 = [N_1..N_n]. Throws UncontrollableError when C0 C0^T is too
/// ill-conditioned.
SystemParams ls_estimate(const MarkovEstimates& N, const LsOptions& opts = {});

/// Unclamped radius formula
/// sqrt(2e3 n^2 kappa^8 (sqrt(m) eps_c + c_rho m S / gamma_rho)^2
///      log(m n^2 / delta) / T0).
double confidence_radius_unclamped(int n, int m, double kappa, double eps_c,
                                   double c_rho, double gamma_rho, double S,
                                   double delta, int T0);

/// The formula value clamped to at most 2S. Throws ParameterError when
/// delta is outside (0, 1) or T0 < 1.
double confidence_radius(int n, int m, double kappa, double eps_c,
                         double c_rho, double gamma_rho, double S,
                         double delta, int T0);

bool contains(const ConfidenceRegion& region, const SystemParams& theta);

}  // namespace olmpc
