#include "olmpc/sysid.h"

#include <cmath>
#include <limits>
#include <random>

#include "olmpc/errors.h"
#include "olmpc/rng.h"

namespace olmpc {

bool ConfidenceRegion::contains(const SystemParams& theta) const {
  return frobenius_distance(theta, center) <= radius;
}

SystemParams ConfidenceRegion::project(const SystemParams& theta) const {
  const double dist = frobenius_distance(theta, center);
  if (dist <= radius) return theta;
  // Rounding can leave radius / dist * (theta - center) a few ulps outside;
  // shrink until the closed-ball test accepts the point.
  double scale = radius / dist;
  for (int i = 0;; ++i) {
    SystemParams p(center.A() + scale * (theta.A() - center.A()),
                   center.B() + scale * (theta.B() - center.B()));
    if (frobenius_distance(p, center) <= radius || i == 8) return p;
    scale *= 1.0 - 4.0 * std::numeric_limits<double>::epsilon();
  }
}

bool contains(const ConfidenceRegion& region, const SystemParams& theta) {
  return region.contains(theta);
}

Vector exploration_input(std::uint64_t seed, int t, int m) {
  // One sign per component needs only m bits, so hash the counter directly
  // instead of seeding a full engine every step.
  std::uint64_t state = derive_seed(seed, Stream::kExploration, static_cast<std::uint64_t>(t));
  Vector u(m);
  for (int j = 0; j < m; ++j) {
    state = mix64(state);
    u(j) = (state >> 63) ? 1.0 : -1.0;
  }
  return u;
}

MarkovEstimates markov_params(const ExplorationLog& log, int n) {
  const int T0 = log.T0;
  if (T0 <= n) {
    throw InsufficientDataError("markov_params: need T0 > n, got T0=" +
                                std::to_string(T0) + ", n=" + std::to_string(n));
  }
  if (static_cast<int>(log.inputs.size()) != T0 ||
      static_cast<int>(log.observations.size()) != T0 + 1) {
    throw ContractViolation("markov_params: log lengths do not match T0");
  }
  const int m = static_cast<int>(log.inputs.front().size());
  const int count = T0 - n;
  MarkovEstimates est;
  est.N.assign(static_cast<std::size_t>(n + 1), Matrix::Zero(n, m));
  // 1-based t: u_t = inputs[t-1], y_s = observations[s-1]. Neumaier
  // compensation keeps long averages accurate to a few ulps.
  for (int j = 0; j <= n; ++j) {
    Matrix sum = Matrix::Zero(n, m);
    Matrix comp = Matrix::Zero(n, m);
    for (int t = 1; t <= count; ++t) {
      const Vector& y = log.observations[static_cast<std::size_t>(t + j)];
      const Vector& u = log.inputs[static_cast<std::size_t>(t - 1)];
      for (int c = 0; c < m; ++c) {
        for (int r = 0; r < n; ++r) {
          const double term = y(r) * u(c);
          const double s = sum(r, c);
          const double next = s + term;
          comp(r, c) += std::abs(s) >= std::abs(term) ? (s - next) + term
                                                       : (term - next) + s;
          sum(r, c) = next;
        }
      }
    }
    est.N[static_cast<std::size_t>(j)] =
        (sum + comp) / static_cast<double>(count);
  }
  return est;
}

SystemParams ls_estimate(const MarkovEstimates& est, const LsOptions& opts) {
  if (est.N.size() < 2) {
    throw ContractViolation("ls_estimate: need N_0..N_n with n >= 1");
  }
  const int n = static_cast<int>(est.N.size()) - 1;
  const int m = static_cast<int>(est.N.front().cols());
  Matrix C0(n, n * m), C1(n, n * m);
  for (int j = 0; j < n; ++j) {
    C0.middleCols(j * m, m) = est.N[static_cast<std::size_t>(j)];
    C1.middleCols(j * m, m) = est.N[static_cast<std::size_t>(j + 1)];
  }
  Matrix gram = C0 * C0.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  const double cond =
      lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  if (!(cond <= opts.max_condition)) {
    throw UncontrollableError(
        "ls_estimate: C0 C0^T condition number " + std::to_string(cond) +
            " exceeds " + std::to_string(opts.max_condition),
        cond);
  }
  Matrix A_hat;
  if (opts.ridge_relative > 0.0) {
    gram.diagonal().array() += opts.ridge_relative * gram.trace();
    A_hat = gram.ldlt().solve(C0 * C1.transpose()).transpose();
  } else {
    // A C0 = C1 in the least-squares sense, via QR of C0^T.
    A_hat = C0.transpose()
                .colPivHouseholderQr()
                .solve(C1.transpose())
                .transpose();
  }
  return SystemParams(std::move(A_hat), est.N.front());
}

double confidence_radius_unclamped(int n, int m, double kappa, double eps_c,
                                   double c_rho, double gamma_rho, double S,
                                   double delta, int T0) {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw ParameterError("confidence_radius: delta must lie in (0, 1)");
  }
  if (T0 < 1) throw ParameterError("confidence_radius: T0 must be >= 1");
  if (!(gamma_rho > 0.0)) {
    throw ParameterError("confidence_radius: gamma_rho must be positive");
  }
  const double nn = n;
  const double mm = m;
  const double inner = std::sqrt(mm) * eps_c + c_rho / gamma_rho * mm * S;
  const double numer = 2e3 * nn * nn * std::pow(kappa, 8) * inner * inner *
                       std::log(mm * nn * nn / delta);
  return std::sqrt(numer / static_cast<double>(T0));
}

double confidence_radius(int n, int m, double kappa, double eps_c,
                         double c_rho, double gamma_rho, double S,
                         double delta, int T0) {
  const double beta = confidence_radius_unclamped(n, m, kappa, eps_c, c_rho,
                                                  gamma_rho, S, delta, T0);
  return std::min(beta, 2.0 * S);
}

}  // namespace olmpc
