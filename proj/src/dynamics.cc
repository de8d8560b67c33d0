#include "olmpc/dynamics.h"

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "olmpc/errors.h"
#include "olmpc/rng.h"

namespace olmpc {
namespace {

std::string shape(const Matrix& M) {
  std::ostringstream os;
  os << M.rows() << "x" << M.cols();
  return os.str();
}

double spectral_norm(const Matrix& M) {
  if (M.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(M);
  return svd.singularValues()(0);
}

}  // namespace

SystemParams::SystemParams(Matrix A, Matrix B)
    : A_(std::move(A)), B_(std::move(B)) {
  if (A_.rows() != A_.cols()) {
    throw ContractViolation("SystemParams: A must be square, got " +
                            shape(A_));
  }
  if (B_.rows() != A_.rows()) {
    throw ContractViolation("SystemParams: B has " + shape(B_) +
                            ", expected " + std::to_string(A_.rows()) +
                            " rows");
  }
  if (!A_.allFinite() || !B_.allFinite()) {
    throw ContractViolation("SystemParams: non-finite entries");
  }
}

SystemParams SystemParams::from_stacked(const Matrix& theta) {
  const Eigen::Index n = theta.rows();
  if (theta.cols() <= n) {
    throw ContractViolation("from_stacked: expected n x (n+m), got " +
                            shape(theta));
  }
  return SystemParams(theta.leftCols(n), theta.rightCols(theta.cols() - n));
}

Matrix SystemParams::stacked() const {
  Matrix theta(n(), n() + m());
  theta << A_, B_;
  return theta;
}

double SystemParams::frobenius_norm() const {
  return std::sqrt(A_.squaredNorm() + B_.squaredNorm());
}

double frobenius_distance(const SystemParams& a, const SystemParams& b) {
  if (a.n() != b.n() || a.m() != b.m()) {
    throw ContractViolation("frobenius_distance: dimension mismatch");
  }
  return std::sqrt((a.A() - b.A()).squaredNorm() +
                   (a.B() - b.B()).squaredNorm());
}

Vector simulate_step(const SystemParams& theta, const VectorRef& x,
                     const VectorRef& u) {
  if (x.size() != theta.n() || u.size() != theta.m()) {
    std::ostringstream os;
    os << "simulate_step: x has " << x.size() << " entries, u has "
       << u.size() << "; system is n=" << theta.n() << ", m=" << theta.m();
    throw ContractViolation(os.str());
  }
  Vector next = theta.A() * x;
  next.noalias() += theta.B() * u;
  return next;
}

Vector observe(const VectorRef& x, const ObservationModel& obs, int t) {
  Vector y = x;
  if (obs.kind == NoiseKind::kZero || obs.eps_c <= 0.0) return y;
  const Eigen::Index n = x.size();
  auto rng = make_engine(obs.seed, Stream::kObservation,
                         static_cast<std::uint64_t>(t));
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vector dir(n);
  double norm = 0.0;
  while (norm == 0.0) {
    for (Eigen::Index i = 0; i < n; ++i) dir(i) = gauss(rng);
    norm = dir.norm();
  }
  // Uniform in the ball: radius ~ eps_c * U^{1/n}. The factor below keeps
  // the bound strict after rounding.
  const double radius = obs.eps_c * std::pow(unif(rng), 1.0 / n) *
                        (1.0 - 8 * std::numeric_limits<double>::epsilon());
  y += (radius / norm) * dir;
  return y;
}

Trajectory rollout(const SystemParams& theta, const VectorRef& x0,
                   const std::vector<Vector>& inputs, int t0) {
  if (x0.size() != theta.n()) {
    throw ContractViolation("rollout: x0 dimension mismatch");
  }
  if (!x0.allFinite()) throw ContractViolation("rollout: x0 not finite");
  Trajectory traj;
  traj.t0 = t0;
  traj.inputs = inputs;
  traj.states.reserve(inputs.size() + 1);
  traj.states.emplace_back(x0);
  for (const auto& u : inputs) {
    traj.states.push_back(simulate_step(theta, traj.states.back(), u));
  }
  return traj;
}

double replay_residual(const SystemParams& theta, const Trajectory& traj) {
  if (traj.states.size() != traj.inputs.size() + 1) {
    throw ContractViolation("replay_residual: states/inputs length mismatch");
  }
  double worst = 0.0;
  for (std::size_t k = 0; k < traj.inputs.size(); ++k) {
    const Vector pred = simulate_step(theta, traj.states[k], traj.inputs[k]);
    worst = std::max(worst,
                     (traj.states[k + 1] - pred).lpNorm<Eigen::Infinity>());
  }
  return worst;
}

double spectral_radius(const Matrix& A) {
  if (A.size() == 0) return 0.0;
  Eigen::EigenSolver<Matrix> solver(A, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("spectral_radius: eigenvalue iteration failed");
  }
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

Matrix controllability_matrix(const SystemParams& theta) {
  const int n = theta.n();
  const int m = theta.m();
  Matrix C(n, n * m);
  Matrix block = theta.B();
  for (int j = 0; j < n; ++j) {
    C.middleCols(j * m, m) = block;
    block = theta.A() * block;
  }
  return C;
}

DecayCertificate decay_certificate(const SystemParams& theta, int K,
                                   double max_condition) {
  DecayCertificate cert;
  cert.spectral_radius = spectral_radius(theta.A());
  if (!(cert.spectral_radius < 1.0)) {
    throw InstabilityError("decay_certificate: spectral radius " +
                               std::to_string(cert.spectral_radius) +
                               " is not below 1",
                           cert.spectral_radius);
  }
  cert.gamma_rho = 0.5 * (1.0 - cert.spectral_radius);
  cert.checked_up_to = K;

  const double rate = 1.0 - cert.gamma_rho;
  Matrix power = Matrix::Identity(theta.n(), theta.n());
  double c = 1.0;
  double scale = 1.0;
  for (int k = 1; k <= K; ++k) {
    power = theta.A() * power;
    scale *= rate;
    c = std::max(c, spectral_norm(power) / scale);
  }
  // Relative slack so the certificate survives re-verification round-off.
  cert.c_rho = c * (1.0 + 1e-12);

  const Matrix C0 = controllability_matrix(theta);
  const Matrix gram = C0 * C0.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  const double cond = lo > 0.0 ? hi / lo
                               : std::numeric_limits<double>::infinity();
  if (!(cond <= max_condition)) {
    throw UncontrollableError(
        "decay_certificate: controllability Gram matrix condition number " +
            std::to_string(cond) + " exceeds " + std::to_string(max_condition),
        cond);
  }
  cert.kappa = gram.inverse().jacobiSvd().singularValues()(0);
  return cert;
}

bool verify_decay(const Matrix& A, double c_rho, double gamma_rho, int K) {
  Matrix power = Matrix::Identity(A.rows(), A.cols());
  double bound = c_rho;
  for (int k = 0; k <= K; ++k) {
    if (k > 0) {
      power = A * power;
      bound *= (1.0 - gamma_rho);
    }
    if (spectral_norm(power) > bound * (1.0 + 1e-12)) return false;
  }
  return true;
}

}  // namespace olmpc
