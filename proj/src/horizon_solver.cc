#include "olmpc/horizon_solver.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "olmpc/errors.h"
#include "olmpc/rng.h"

namespace olmpc {
namespace {

using MatrixCRef = Eigen::Ref<const Matrix>;

/// Scratch buffers for one horizon problem. The decision vector stacks the
/// inputs: u_k = z.segment(k * m, m).
class HorizonProblem {
 public:
  HorizonProblem(const VectorRef& x0, std::span<const StageCost> preview,
                 int n, int m)
      : x0_(x0),
        preview_(preview),
        N_(static_cast<int>(preview.size())),
        n_(n),
        m_(m),
        states_(n, N_ + 1),
        costate_(n, N_ + 1),
        gx_(n),
        gu_(m) {}

  int horizon() const { return N_; }
  int input_dim() const { return m_ * N_; }
  const Matrix& states() const { return states_; }

  double objective(const MatrixCRef& A, const MatrixCRef& B,
                   const VectorRef& z) {
    states_.col(0) = x0_;
    double f = 0.0;
    for (int k = 0; k < N_; ++k) {
      const auto u = z.segment(k * m_, m_);
      f += preview_[static_cast<std::size_t>(k)].value(states_.col(k), u);
      states_.col(k + 1).noalias() = A * states_.col(k);
      states_.col(k + 1).noalias() += B * u;
    }
    return f;
  }

  /// Objective plus dJ/dz into gz; if gtheta is non-null also dJ/d[A B]
  /// stacked column-major (vec(A) then vec(B)).
  double gradient(const MatrixCRef& A, const MatrixCRef& B,
                  const VectorRef& z, Eigen::Ref<Vector> gz,
                  double* gtheta) {
    const double f = objective(A, B, z);
    costate_.col(N_).setZero();
    Eigen::Map<Matrix> gA(gtheta, gtheta ? n_ : 0, gtheta ? n_ : 0);
    Eigen::Map<Matrix> gB(gtheta ? gtheta + n_ * n_ : nullptr,
                          gtheta ? n_ : 0, gtheta ? m_ : 0);
    if (gtheta) {
      gA.setZero();
      gB.setZero();
    }
    for (int k = N_ - 1; k >= 0; --k) {
      const auto u = z.segment(k * m_, m_);
      preview_[static_cast<std::size_t>(k)].gradient(states_.col(k), u, gx_,
                                                      gu_);
      auto gk = gz.segment(k * m_, m_);
      gk = gu_;
      gk.noalias() += B.transpose() * costate_.col(k + 1);
      if (gtheta) {
        gA.noalias() += costate_.col(k + 1) * states_.col(k).transpose();
        gB.noalias() += costate_.col(k + 1) * u.transpose();
      }
      costate_.col(k).noalias() = A.transpose() * costate_.col(k + 1);
      costate_.col(k) += gx_;
    }
    return f;
  }

 private:
  Vector x0_;
  std::span<const StageCost> preview_;
  int N_;
  int n_;
  int m_;
  Matrix states_;
  Matrix costate_;
  Vector gx_;
  Vector gu_;
};

struct Descent {
  Vector z;
  double f = 0.0;
  double pg_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

std::string dump(const Vector& z) {
  std::ostringstream os;
  os.precision(17);
  os << "[";
  for (Eigen::Index i = 0; i < z.size(); ++i) os << (i ? ", " : "") << z(i);
  os << "]";
  return os.str();
}

[[noreturn]] void diverged(const char* where, const Vector& z, double f) {
  std::ostringstream os;
  os << where << ": non-finite objective/gradient (f=" << f
     << ") at iterate " << dump(z);
  throw DivergenceError(os.str());
}

/// Projected gradient descent. The trial step of each iteration is the
/// Barzilai-Borwein step of the previous one; Armijo backtracking halves it
/// until the sufficient-decrease test passes. Stops when the
/// projected-gradient norm drops below grad_tol, when max_iters is hit, or
/// when the line search cannot make progress in floating point.
template <class Fg, class Project>
Descent projected_descent(Fg&& fg, Project&& project, Vector z,
                          const SolverConfig& cfg, const char* where) {
  constexpr double kArmijo = 1e-4;
  constexpr int kMaxHalvings = 60;
  const Eigen::Index dim = z.size();
  project(z);
  Vector g(dim), trial(dim), gt(dim), step(dim), scratch(dim);
  double f = fg(z, g);
  if (!std::isfinite(f) || !g.allFinite()) diverged(where, z, f);

  auto pg_norm = [&](const Vector& at, const Vector& grad) {
    scratch = at - grad;
    project(scratch);
    return (at - scratch).norm();
  };

  Descent out;
  double pg = pg_norm(z, g);
  double alpha = 1.0;
  int it = 0;
  while (it < cfg.max_iters && pg > cfg.grad_tol) {
    double a = alpha;
    bool accepted = false;
    double ft = 0.0;
    for (int ls = 0; ls < kMaxHalvings; ++ls, a *= 0.5) {
      trial = z - a * g;
      project(trial);
      step = trial - z;
      const double slope = g.dot(step);
      if (!(slope < 0.0)) continue;
      ft = fg(trial, gt);
      if (!std::isfinite(ft) || !gt.allFinite()) diverged(where, trial, ft);
      if (ft <= f + kArmijo * slope) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    ++it;
    scratch = gt - g;
    const double sy = step.dot(scratch);
    alpha = sy > 0.0 ? step.squaredNorm() / sy : 4.0 * a;
    alpha = std::clamp(alpha, 1e-12, 1e12);
    z.swap(trial);
    g.swap(gt);
    f = ft;
    pg = pg_norm(z, g);
  }
  out.z = std::move(z);
  out.f = f;
  out.pg_norm = pg;
  out.iterations = it;
  out.converged = pg <= cfg.grad_tol;
  return out;
}

/// Lowest objective wins; exact ties go to the lexicographically smaller
/// decision vector.
bool better(const Descent& a, const Descent& b) {
  if (a.f != b.f) return a.f < b.f;
  return std::lexicographical_compare(a.z.data(), a.z.data() + a.z.size(),
                                      b.z.data(), b.z.data() + b.z.size());
}

void check_problem(const VectorRef& x, std::span<const StageCost> preview,
                   int n, const char* where) {
  if (preview.empty()) {
    throw ContractViolation(std::string(where) + ": empty preview");
  }
  if (x.size() != n) {
    throw ContractViolation(std::string(where) + ": state dimension " +
                            std::to_string(x.size()) + " != n=" +
                            std::to_string(n));
  }
}

Vector initial_inputs(const std::vector<Vector>* warm, int N, int m) {
  Vector z = Vector::Zero(static_cast<Eigen::Index>(N) * m);
  if (!warm) return z;
  const int count = std::min<int>(N, static_cast<int>(warm->size()));
  for (int k = 0; k < count; ++k) {
    const Vector& u = (*warm)[static_cast<std::size_t>(k)];
    if (u.size() != m) {
      throw ContractViolation("warm start: input dimension mismatch");
    }
    z.segment(k * m, m) = u;
  }
  return z;
}

std::uint64_t restart_index(int t, int r) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(t)) << 20) |
         static_cast<std::uint64_t>(r);
}

void add_gaussian(Eigen::Ref<Vector> v, double scale, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) += scale * gauss(rng);
}

std::vector<Vector> unstack_inputs(const Vector& z, int N, int m) {
  std::vector<Vector> inputs;
  inputs.reserve(static_cast<std::size_t>(N));
  for (int k = 0; k < N; ++k) inputs.emplace_back(z.segment(k * m, m));
  return inputs;
}

std::vector<Vector> state_columns(const Matrix& states) {
  std::vector<Vector> out;
  out.reserve(static_cast<std::size_t>(states.cols()));
  for (Eigen::Index k = 0; k < states.cols(); ++k) out.emplace_back(states.col(k));
  return out;
}

OpenLoopPlan make_plan(HorizonProblem& prob, const SystemParams& theta,
                       const Vector& z, int m) {
  OpenLoopPlan plan;
  plan.objective = prob.objective(theta.A(), theta.B(), z);
  plan.inputs = unstack_inputs(z, prob.horizon(), m);
  plan.predicted_states = state_columns(prob.states());
  return plan;
}

}  // namespace

double horizon_objective(const VectorRef& x, std::span<const StageCost> preview,
                         const SystemParams& theta,
                         const std::vector<Vector>& inputs) {
  check_problem(x, preview, theta.n(), "horizon_objective");
  if (inputs.size() != preview.size()) {
    throw ContractViolation("horizon_objective: inputs/preview length mismatch");
  }
  HorizonProblem prob(x, preview, theta.n(), theta.m());
  const Vector z = initial_inputs(&inputs, prob.horizon(), theta.m());
  return prob.objective(theta.A(), theta.B(), z);
}

HorizonGradient adjoint_gradient(const std::vector<Vector>& inputs,
                                 const VectorRef& x,
                                 std::span<const StageCost> preview,
                                 const SystemParams& theta, bool with_model) {
  check_problem(x, preview, theta.n(), "adjoint_gradient");
  if (inputs.size() != preview.size()) {
    throw ContractViolation("adjoint_gradient: inputs/preview length mismatch");
  }
  const int n = theta.n();
  const int m = theta.m();
  HorizonProblem prob(x, preview, n, m);
  const Vector z = initial_inputs(&inputs, prob.horizon(), m);
  Vector gz(z.size());
  Vector gtheta = Vector::Zero(with_model ? n * (n + m) : 0);
  HorizonGradient out;
  out.objective = prob.gradient(theta.A(), theta.B(), z, gz,
                                with_model ? gtheta.data() : nullptr);
  out.inputs = unstack_inputs(gz, prob.horizon(), m);
  if (with_model) {
    out.dA = Eigen::Map<const Matrix>(gtheta.data(), n, n);
    out.dB = Eigen::Map<const Matrix>(gtheta.data() + n * n, n, m);
  }
  return out;
}

OpenLoopPlan solve_mpc(int t, const VectorRef& x,
                       std::span<const StageCost> preview,
                       const SystemParams& theta, const SolverConfig& cfg,
                       const std::vector<Vector>* warm_start) {
  check_problem(x, preview, theta.n(), "solve_mpc");
  if (cfg.restarts < 1) throw ContractViolation("solve_mpc: restarts < 1");
  const int m = theta.m();
  HorizonProblem prob(x, preview, theta.n(), m);
  const Vector base = initial_inputs(warm_start, prob.horizon(), m);

  auto fg = [&](const Vector& z, Vector& g) {
    return prob.gradient(theta.A(), theta.B(), z, g, nullptr);
  };
  auto identity = [](Vector&) {};

  Descent best;
  int total_iters = 0;
  for (int r = 0; r < cfg.restarts; ++r) {
    Vector z0 = base;
    if (r > 0) {
      auto rng = make_engine(cfg.seed, Stream::kRestart, restart_index(t, r));
      add_gaussian(z0, cfg.init_scale, rng);
    }
    Descent run = projected_descent(fg, identity, std::move(z0), cfg, "solve_mpc");
    total_iters += run.iterations;
    if (r == 0 || better(run, best)) best = std::move(run);
  }
  OpenLoopPlan plan = make_plan(prob, theta, best.z, m);
  plan.grad_norm_at_solution = best.pg_norm;
  plan.converged = best.converged;
  plan.restarts_used = cfg.restarts;
  plan.iterations = total_iters;
  return plan;
}

OptimisticPlan solve_ompc(int t, const VectorRef& x,
                          std::span<const StageCost> preview,
                          const ConfidenceRegion& region,
                          const SolverConfig& cfg,
                          const std::vector<Vector>* warm_start) {
  const SystemParams& center = region.center;
  if (center.empty() || !(region.radius >= 0.0)) {
    throw ContractViolation("solve_ompc: malformed confidence region");
  }
  OpenLoopPlan at_center = solve_mpc(t, x, preview, center, cfg, warm_start);
  if (region.radius == 0.0) return {std::move(at_center), center};

  const int n = center.n();
  const int m = center.m();
  HorizonProblem prob(x, preview, n, m);
  const int du = prob.input_dim();
  const int dA = n * n;
  const int dtheta = n * (n + m);

  Vector base(du + dtheta);
  base.head(du) = initial_inputs(&at_center.inputs, prob.horizon(), m);
  base.segment(du, dA) = Eigen::Map<const Vector>(center.A().data(), dA);
  base.tail(n * m) = Eigen::Map<const Vector>(center.B().data(), n * m);
  const Vector center_vec = base.tail(dtheta);

  auto fg = [&](const Vector& z, Vector& g) {
    const Eigen::Map<const Matrix> A(z.data() + du, n, n);
    const Eigen::Map<const Matrix> B(z.data() + du + dA, n, m);
    return prob.gradient(A, B, z.head(du), g.head(du), g.data() + du);
  };
  auto project = [&](Vector& z) {
    auto theta = z.tail(dtheta);
    const double dist = (theta - center_vec).norm();
    if (dist > region.radius) {
      theta = center_vec + (region.radius / dist) * (theta - center_vec);
    }
  };

  Descent best;
  int total_iters = at_center.iterations;
  for (int r = 0; r < cfg.restarts; ++r) {
    Vector z0 = base;
    if (r > 0) {
      auto rng = make_engine(cfg.seed ^ 0x6f6d7063ULL, Stream::kRestart,
                             restart_index(t, r));
      add_gaussian(z0.head(du), cfg.init_scale, rng);
      add_gaussian(z0.tail(dtheta), region.radius, rng);
    }
    Descent run = projected_descent(fg, project, std::move(z0), cfg, "solve_ompc");
    total_iters += run.iterations;
    if (r == 0 || better(run, best)) best = std::move(run);
  }

  const SystemParams model = region.project(SystemParams(
      Eigen::Map<const Matrix>(best.z.data() + du, n, n),
      Eigen::Map<const Matrix>(best.z.data() + du + dA, n, m)));
  OptimisticPlan out{make_plan(prob, model, best.z.head(du), m), model};
  out.plan.grad_norm_at_solution = best.pg_norm;
  out.plan.converged = best.converged;
  out.plan.restarts_used = cfg.restarts;
  out.plan.iterations = total_iters;
  return out;
}

OpenLoopPlan lqt_oracle(int t, const VectorRef& x,
                        std::span<const StageCost> preview,
                        const SystemParams& theta) {
  (void)t;
  check_problem(x, preview, theta.n(), "lqt_oracle");
  const int n = theta.n();
  const int m = theta.m();
  const int N = static_cast<int>(preview.size());
  const Matrix& A = theta.A();
  const Matrix& B = theta.B();

  std::vector<Matrix> gains(static_cast<std::size_t>(N));
  std::vector<Vector> feedforward(static_cast<std::size_t>(N));
  Matrix P = Matrix::Zero(n, n);
  Vector q = Vector::Zero(n);
  for (int k = N - 1; k >= 0; --k) {
    const QuadraticStage* stage = preview[static_cast<std::size_t>(k)].quadratic();
    if (!stage) {
      throw InapplicableError("lqt_oracle: stage " + std::to_string(k) +
                              " of the preview is not quadratic");
    }
    if (stage->Q.rows() != n || stage->R.rows() != m) {
      throw ContractViolation("lqt_oracle: stage shape mismatch");
    }
    const Matrix Q = 0.5 * (stage->Q + stage->Q.transpose());
    const Matrix R = 0.5 * (stage->R + stage->R.transpose());
    const Matrix PB = P * B;
    const Matrix H = R + B.transpose() * PB;
    const Matrix G = PB.transpose() * A;  // B^T P A
    const Vector h = B.transpose() * q;
    Eigen::LLT<Matrix> llt(H);
    if (llt.info() != Eigen::Success) {
      throw InapplicableError("lqt_oracle: R + B^T P B not positive definite");
    }
    Matrix K = llt.solve(G);
    Vector kff = llt.solve(h);
    Matrix P_next = Q + A.transpose() * P * A - G.transpose() * K;
    q = -Q * stage->offset + A.transpose() * q - G.transpose() * kff;
    P = 0.5 * (P_next + P_next.transpose());
    gains[static_cast<std::size_t>(k)] = std::move(K);
    feedforward[static_cast<std::size_t>(k)] = std::move(kff);
  }

  OpenLoopPlan plan;
  plan.predicted_states.reserve(static_cast<std::size_t>(N) + 1);
  plan.inputs.reserve(static_cast<std::size_t>(N));
  plan.predicted_states.emplace_back(x);
  double objective = 0.0;
  for (int k = 0; k < N; ++k) {
    const Vector& xk = plan.predicted_states.back();
    Vector u = -gains[static_cast<std::size_t>(k)] * xk -
               feedforward[static_cast<std::size_t>(k)];
    objective += preview[static_cast<std::size_t>(k)].value(xk, u);
    Vector next = A * xk + B * u;
    plan.inputs.push_back(std::move(u));
    plan.predicted_states.push_back(std::move(next));
  }
  plan.objective = objective;
  const HorizonGradient grad = adjoint_gradient(plan.inputs, x, preview, theta);
  double sq = 0.0;
  for (const auto& g : grad.inputs) sq += g.squaredNorm();
  plan.grad_norm_at_solution = std::sqrt(sq);
  plan.converged = true;
  return plan;
}

GridResult grid_oracle(int t, const VectorRef& x,
                       std::span<const StageCost> preview,
                       const ConfidenceRegion& region, const GridSpec& spec) {
  (void)t;
  const SystemParams& center = region.center;
  check_problem(x, preview, center.n(), "grid_oracle");
  if (!(spec.u_step > 0.0) || !(spec.theta_step > 0.0) ||
      spec.u_max < spec.u_min) {
    throw ContractViolation("grid_oracle: malformed grid spec");
  }
  const int n = center.n();
  const int m = center.m();
  HorizonProblem prob(x, preview, n, m);
  const int du = prob.input_dim();
  const int dA = n * n;
  const int dtheta = n * (n + m);

  const auto nu = static_cast<std::size_t>(
      std::floor((spec.u_max - spec.u_min) / spec.u_step + 1e-9) + 1);
  const int K = static_cast<int>(std::floor(region.radius / spec.theta_step + 1e-9));
  const double side = 2.0 * K + 1.0;

  double u_points = 1.0;
  for (int i = 0; i < du; ++i) u_points *= static_cast<double>(nu);
  const double box_theta = std::pow(side, dtheta);
  const auto budget = static_cast<double>(spec.budget);
  if (u_points > budget || box_theta > 100.0 * budget ||
      u_points * box_theta > 1e3 * budget) {
    throw BudgetError("grid_oracle: lattice exceeds the point budget");
  }

  // Model lattice points inside the ball.
  std::vector<Vector> thetas;
  {
    std::vector<int> idx(static_cast<std::size_t>(dtheta), -K);
    const Matrix stacked = center.stacked();
    const Vector c = Eigen::Map<const Vector>(stacked.data(), stacked.size());
    const double r2 = region.radius * region.radius * (1.0 + 1e-12);
    while (true) {
      Vector offset(dtheta);
      for (int i = 0; i < dtheta; ++i) {
        offset(i) = spec.theta_step * idx[static_cast<std::size_t>(i)];
      }
      if (offset.squaredNorm() <= r2) thetas.push_back(c + offset);
      int pos = 0;
      while (pos < dtheta && ++idx[static_cast<std::size_t>(pos)] > K) {
        idx[static_cast<std::size_t>(pos)] = -K;
        ++pos;
      }
      if (pos == dtheta) break;
    }
  }
  if (u_points * static_cast<double>(thetas.size()) > budget) {
    throw BudgetError("grid_oracle: " +
                      std::to_string(u_points * static_cast<double>(thetas.size())) +
                      " points exceed the budget of " +
                      std::to_string(spec.budget));
  }

  GridResult result;
  result.objective = std::numeric_limits<double>::infinity();
  Vector best_z, best_theta;
  Vector z(du), g(du + dtheta);
  std::vector<std::size_t> odo(static_cast<std::size_t>(du), 0);
  double lipschitz = 0.0;
  for (const Vector& theta_vec : thetas) {
    // theta_vec is vec([A B]) column-major; A occupies the first n columns.
    const Eigen::Map<const Matrix> A(theta_vec.data(), n, n);
    const Eigen::Map<const Matrix> B(theta_vec.data() + dA, n, m);
    std::fill(odo.begin(), odo.end(), 0);
    while (true) {
      for (int i = 0; i < du; ++i) {
        z(i) = spec.u_min + spec.u_step * static_cast<double>(odo[static_cast<std::size_t>(i)]);
      }
      const double f = prob.gradient(A, B, z, g.head(du), g.data() + du);
      ++result.points_evaluated;
      lipschitz = std::max(lipschitz, g.norm());
      if (f < result.objective) {
        result.objective = f;
        best_z = z;
        best_theta = theta_vec;
      }
      int pos = 0;
      while (pos < du && ++odo[static_cast<std::size_t>(pos)] >= nu) {
        odo[static_cast<std::size_t>(pos)] = 0;
        ++pos;
      }
      if (pos == du) break;
    }
  }

  result.model = SystemParams(Eigen::Map<const Matrix>(best_theta.data(), n, n),
                              Eigen::Map<const Matrix>(best_theta.data() + dA, n, m));
  result.inputs = unstack_inputs(best_z, prob.horizon(), m);
  double diag2 = 0.0;
  if (nu > 1) diag2 += du * spec.u_step * spec.u_step;
  if (K > 0) diag2 += dtheta * spec.theta_step * spec.theta_step;
  // Near a curved ball boundary the closest interior lattice point can be up
  // to two diagonals away.
  result.lipschitz = lipschitz;
  result.cell_bound = lipschitz * std::sqrt(diag2) * (K > 0 ? 2.0 : 1.0);
  return result;
}

}  // namespace olmpc
