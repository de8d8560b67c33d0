#include "olmpc/costs.h"

#include <cmath>
#include <random>

#include "olmpc/errors.h"
#include "olmpc/rng.h"

namespace olmpc {
namespace {

class QuadraticCost final : public StageCostFn {
 public:
  explicit QuadraticCost(QuadraticStage stage) : stage_(std::move(stage)) {}

  double value(const VectorRef& x, const VectorRef& u) const override {
    const Vector e = x - stage_.offset;
    return e.dot(stage_.Q * e) + u.dot(stage_.R * u);
  }

  void gradient(const VectorRef& x, const VectorRef& u, VectorOut gx,
                VectorOut gu) const override {
    const Vector e = x - stage_.offset;
    gx.noalias() = stage_.Q * e + stage_.Q.transpose() * e;
    gu.noalias() = stage_.R * u + stage_.R.transpose() * u;
  }

  const QuadraticStage* quadratic() const override { return &stage_; }

 private:
  QuadraticStage stage_;
};

/// Diagonal specialization used by the example-1 family; avoids the dense
/// products in the solver's inner loop.
class DiagonalQuadraticCost final : public StageCostFn {
 public:
  DiagonalQuadraticCost(Vector q, Vector r, Vector offset)
      : q_(std::move(q)), r_(std::move(r)) {
    stage_.Q = q_.asDiagonal();
    stage_.R = r_.asDiagonal();
    stage_.offset = std::move(offset);
  }

  double value(const VectorRef& x, const VectorRef& u) const override {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double e = x(i) - stage_.offset(i);
      acc += q_(i) * e * e;
    }
    for (Eigen::Index j = 0; j < u.size(); ++j) acc += r_(j) * u(j) * u(j);
    return acc;
  }

  void gradient(const VectorRef& x, const VectorRef& u, VectorOut gx,
                VectorOut gu) const override {
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      gx(i) = 2.0 * q_(i) * (x(i) - stage_.offset(i));
    }
    for (Eigen::Index j = 0; j < u.size(); ++j) gu(j) = 2.0 * r_(j) * u(j);
  }

  const QuadraticStage* quadratic() const override { return &stage_; }

 private:
  Vector q_;
  Vector r_;
  QuadraticStage stage_;
};

class SetDistanceCost final : public StageCostFn {
 public:
  SetDistanceCost(Vector center, double radius, double input_weight)
      : center_(std::move(center)), radius_(radius), w_(input_weight) {}

  double value(const VectorRef& x, const VectorRef& u) const override {
    const double d = std::max(0.0, (x - center_).norm() - radius_);
    return d * d + w_ * u.squaredNorm();
  }

  // Outside the ball: 2 (r_x - r) (x - c) / r_x with r_x = |x - c|. Inside
  // and on the boundary the distance term contributes nothing.
  void gradient(const VectorRef& x, const VectorRef& u, VectorOut gx,
                VectorOut gu) const override {
    const Vector diff = x - center_;
    const double dist = diff.norm();
    if (dist > radius_) {
      gx = (2.0 * (dist - radius_) / dist) * diff;
    } else {
      gx.setZero();
    }
    gu = 2.0 * w_ * u;
  }

 private:
  Vector center_;
  double radius_;
  double w_;
};

class CubicOffsetCost final : public StageCostFn {
 public:
  explicit CubicOffsetCost(double b) : b_(b) {}

  double value(const VectorRef& x, const VectorRef& u) const override {
    const double e0 = std::abs(x(0) - b_);
    const double e1 = x(1) - b_;
    return e0 * e0 * e0 + e1 * e1 + u.squaredNorm();
  }

  void gradient(const VectorRef& x, const VectorRef& u, VectorOut gx,
                VectorOut gu) const override {
    const double e0 = x(0) - b_;
    gx(0) = 3.0 * e0 * std::abs(e0);
    gx(1) = 2.0 * (x(1) - b_);
    gu = 2.0 * u;
  }

 private:
  double b_;
};

class CustomCost final : public StageCostFn {
 public:
  CustomCost(CostEval eval, CostGrad grad)
      : eval_(std::move(eval)), grad_(std::move(grad)) {}

  double value(const VectorRef& x, const VectorRef& u) const override {
    return eval_(x, u);
  }
  void gradient(const VectorRef& x, const VectorRef& u, VectorOut gx,
                VectorOut gu) const override {
    grad_(x, u, gx, gu);
  }

 private:
  CostEval eval_;
  CostGrad grad_;
};

void check_quadratic(const QuadraticStage& s) {
  if (s.Q.rows() != s.Q.cols() || s.R.rows() != s.R.cols() ||
      s.offset.size() != s.Q.rows()) {
    throw ContractViolation("make_quadratic_cost: inconsistent shapes");
  }
}

}  // namespace

StageCost make_quadratic_cost(QuadraticStage stage) {
  check_quadratic(stage);
  return StageCost(std::make_shared<QuadraticCost>(std::move(stage)));
}

StageCost make_set_distance_cost(Vector center, double radius,
                                 double input_weight) {
  if (radius < 0.0) throw ContractViolation("set distance: negative radius");
  return StageCost(std::make_shared<SetDistanceCost>(std::move(center), radius,
                                                     input_weight));
}

StageCost make_cubic_offset_cost(double b) {
  return StageCost(std::make_shared<CubicOffsetCost>(b));
}

StageCost make_custom_cost(CostEval eval, CostGrad grad) {
  if (!eval || !grad) throw ContractViolation("custom cost: empty callable");
  return StageCost(
      std::make_shared<CustomCost>(std::move(eval), std::move(grad)));
}

std::string to_string(CostFamily family) {
  switch (family) {
    case CostFamily::kQuadraticOffset: return "quadratic_offset";
    case CostFamily::kSetDistance: return "set_distance";
    case CostFamily::kCubicOffset: return "cubic_offset";
    case CostFamily::kCustom: return "custom";
  }
  return "unknown";
}

CostFamily parse_cost_family(const std::string& name) {
  if (name == "quadratic_offset") return CostFamily::kQuadraticOffset;
  if (name == "set_distance") return CostFamily::kSetDistance;
  if (name == "cubic_offset") return CostFamily::kCubicOffset;
  if (name == "custom") return CostFamily::kCustom;
  throw ConfigError("unknown cost family '" + name + "'");
}

CostSequence::CostSequence(CostFamilyConfig family, std::uint64_t seed,
                           int horizon, int n, int m)
    : family_(std::move(family)), seed_(seed), n_(n), m_(m) {
  if (horizon < 1 || n < 1 || m < 1) {
    throw ContractViolation("CostSequence: horizon and dimensions must be >= 1");
  }
  switch (family_.kind) {
    case CostFamily::kQuadraticOffset:
      if (!(family_.diag_min > 0.0 && family_.diag_max >= family_.diag_min)) {
        throw ParameterError("quadratic_offset: need 0 < diag_min <= diag_max");
      }
      break;
    case CostFamily::kSetDistance:
      if (family_.ball_radius < 0.0) {
        throw ParameterError("set_distance: negative ball radius");
      }
      break;
    case CostFamily::kCubicOffset:
      if (n != 2) {
        throw ContractViolation("cubic_offset family requires n = 2, got " +
                                std::to_string(n));
      }
      break;
    case CostFamily::kCustom:
      if (!family_.custom) {
        throw ContractViolation("custom family without a generator");
      }
      break;
  }
  stages_.reserve(static_cast<std::size_t>(horizon));
  for (int t = 1; t <= horizon; ++t) stages_.push_back(generate(t));
}

StageCost CostSequence::generate(int t) const {
  switch (family_.kind) {
    case CostFamily::kQuadraticOffset: {
      auto rng = make_engine(seed_, Stream::kCost, static_cast<std::uint64_t>(t));
      std::uniform_real_distribution<double> diag(family_.diag_min,
                                                  family_.diag_max);
      Vector q(n_), r(m_);
      for (int i = 0; i < n_; ++i) q(i) = diag(rng);
      for (int j = 0; j < m_; ++j) r(j) = diag(rng);
      return StageCost(std::make_shared<DiagonalQuadraticCost>(
          std::move(q), std::move(r), Vector::Constant(n_, family_.offset)));
    }
    case CostFamily::kSetDistance:
      return make_set_distance_cost(Vector::Constant(n_, family_.ball_center),
                                    family_.ball_radius);
    case CostFamily::kCubicOffset:
      return make_cubic_offset_cost(family_.cubic_offset);
    case CostFamily::kCustom:
      return family_.custom(t);
  }
  throw ContractViolation("unreachable cost family");
}

const StageCost& CostSequence::at(int t) const {
  if (t < 1 || t > horizon()) {
    throw ContractViolation("CostSequence::at: t=" + std::to_string(t) +
                            " outside [1, " + std::to_string(horizon()) + "]");
  }
  return stages_[static_cast<std::size_t>(t - 1)];
}

std::span<const StageCost> CostSequence::preview(int t, int M) const {
  if (M < 1) throw ContractViolation("preview: M must be >= 1");
  if (t < 1 || t > horizon()) {
    throw ContractViolation("preview: t=" + std::to_string(t) +
                            " outside the horizon");
  }
  const int len = std::min(M, horizon() - t + 1);
  return std::span<const StageCost>(stages_).subspan(
      static_cast<std::size_t>(t - 1), static_cast<std::size_t>(len));
}

CostSequence make_example1(std::uint64_t seed, int T, int n, int m) {
  CostFamilyConfig cfg;
  cfg.kind = CostFamily::kQuadraticOffset;
  return CostSequence(cfg, seed, T, n, m);
}

CostSequence make_example2(std::uint64_t seed, int T, int n, int m) {
  CostFamilyConfig cfg;
  cfg.kind = CostFamily::kSetDistance;
  return CostSequence(cfg, seed, T, n, m);
}

CostSequence make_example3(std::uint64_t seed, int T, int n, int m) {
  CostFamilyConfig cfg;
  cfg.kind = CostFamily::kCubicOffset;
  return CostSequence(cfg, seed, T, n, m);
}

int min_preview_for_ratio(double ratio) {
  return static_cast<int>(std::ceil(ratio * ratio + 1.0));
}

}  // namespace olmpc
