#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace olmpc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using VectorRef = Eigen::Ref<const Vector>;

/// Linear system parameters theta = [A B] for x' = A x + B u.
class SystemParams {
 public:
  SystemParams() = default;
  /// Throws ContractViolation on non-square A, row mismatch, or non-finite
  /// entries.
  SystemParams(Matrix A, Matrix B);

  /// Splits a stacked n x (n+m) matrix [A B].
  static SystemParams from_stacked(const Matrix& theta);

  const Matrix& A() const { return A_; }
  const Matrix& B() const { return B_; }
  int n() const { return static_cast<int>(A_.rows()); }
  int m() const { return static_cast<int>(B_.cols()); }
  bool empty() const { return A_.size() == 0; }

  Matrix stacked() const;
  double frobenius_norm() const;

 private:
  Matrix A_;
  Matrix B_;
};

double frobenius_distance(const SystemParams& a, const SystemParams& b);

enum class NoiseKind { kZero, kUniformBall };

/// Additive bounded sensor noise y_t = x_t + eps_t with |eps_t| <= eps_c.
struct ObservationModel {
  double eps_c = 0.0;
  NoiseKind kind = NoiseKind::kUniformBall;
  std::uint64_t seed = 0;
};

struct Trajectory {
  std::vector<Vector> states;  // x_{t0} .. x_{t0+k}
  std::vector<Vector> inputs;  // u_{t0} .. u_{t0+k-1}
  std::optional<std::vector<Vector>> observations;
  int t0 = 1;
};

/// Constants with |A^k|_2 <= c_rho (1 - gamma_rho)^k for k <= checked_up_to,
/// and kappa >= |(C0 C0^T)^{-1}|_2 for the controllability matrix C0.
struct DecayCertificate {
  double c_rho = 1.0;
  double gamma_rho = 0.5;
  double kappa = 1.0;
  int checked_up_to = 0;
  double spectral_radius = 0.0;
};

/// Returns A x + B u.
Vector simulate_step(const SystemParams& theta, const VectorRef& x,
                     const VectorRef& u);

/// y = x + eps_t; eps_t is a pure function of (obs.seed, t).
Vector observe(const VectorRef& x, const ObservationModel& obs, int t);

Trajectory rollout(const SystemParams& theta, const VectorRef& x0,
                   const std::vector<Vector>& inputs, int t0 = 1);

/// Largest |x_{k+1} - (A x_k + B u_k)| entry over the trajectory.
double replay_residual(const SystemParams& theta, const Trajectory& traj);

double spectral_radius(const Matrix& A);

/// [B, AB, ..., A^{n-1} B].
Matrix controllability_matrix(const SystemParams& theta);

/// gamma_rho = (1 - rho(A)) / 2 and the smallest c_rho passing the powering
/// check up to K. Throws InstabilityError if rho(A) >= 1 and
/// UncontrollableError if cond(C0 C0^T) exceeds max_condition.
DecayCertificate decay_certificate(const SystemParams& theta, int K = 200,
                                   double max_condition = 1e12);

/// Direct powering check of |A^k|_2 <= c_rho (1 - gamma_rho)^k, k in [0, K].
bool verify_decay(const Matrix& A, double c_rho, double gamma_rho, int K);

}  // namespace olmpc
