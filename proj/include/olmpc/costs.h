#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "olmpc/dynamics.h"

namespace olmpc {

using VectorOut = Eigen::Ref<Vector>;

/// c(x, u) = (x - offset)^T Q (x - offset) + u^T R u.
struct QuadraticStage {
  Matrix Q;
  Matrix R;
  Vector offset;
};

/// Interface behind StageCost. Implementations must be pure and reentrant.
class StageCostFn {
 public:
  virtual ~StageCostFn() = default;
  virtual double value(const VectorRef& x, const VectorRef& u) const = 0;
  /// Writes dc/dx into gx and dc/du into gu (both pre-sized).
  virtual void gradient(const VectorRef& x, const VectorRef& u, VectorOut gx,
                        VectorOut gu) const = 0;
  virtual const QuadraticStage* quadratic() const { return nullptr; }
};

/// Immutable, cheaply copyable handle to one stage cost c_t.
class StageCost {
 public:
  StageCost() = default;
  explicit StageCost(std::shared_ptr<const StageCostFn> fn,
                     std::optional<double> lipschitz_hint = std::nullopt)
      : fn_(std::move(fn)), lipschitz_hint_(lipschitz_hint) {}

  double operator()(const VectorRef& x, const VectorRef& u) const {
    return fn_->value(x, u);
  }
  double value(const VectorRef& x, const VectorRef& u) const {
    return fn_->value(x, u);
  }
  void gradient(const VectorRef& x, const VectorRef& u, VectorOut gx,
                VectorOut gu) const {
    fn_->gradient(x, u, gx, gu);
  }
  /// Non-null iff the cost is a QuadraticStage.
  const QuadraticStage* quadratic() const { return fn_->quadratic(); }
  std::optional<double> lipschitz_hint() const { return lipschitz_hint_; }
  explicit operator bool() const { return static_cast<bool>(fn_); }

 private:
  std::shared_ptr<const StageCostFn> fn_;
  std::optional<double> lipschitz_hint_;
};

StageCost make_quadratic_cost(QuadraticStage stage);

/// dist(x, ball)^2 + w u^T u. The gradient is zero inside the ball.
StageCost make_set_distance_cost(Vector center, double radius,
                                 double input_weight = 1.0);

/// |x[0] - b|^3 + (x[1] - b)^2 + u^T u, for n = 2.
StageCost make_cubic_offset_cost(double b);

using CostEval = std::function<double(const VectorRef&, const VectorRef&)>;
using CostGrad =
    std::function<void(const VectorRef&, const VectorRef&, VectorOut, VectorOut)>;

StageCost make_custom_cost(CostEval eval, CostGrad grad);

enum class CostFamily { kQuadraticOffset, kSetDistance, kCubicOffset, kCustom };

std::string to_string(CostFamily family);
/// Accepts the names produced by to_string; throws ConfigError otherwise.
CostFamily parse_cost_family(const std::string& name);

struct CostFamilyConfig {
  CostFamily kind = CostFamily::kQuadraticOffset;
  // quadratic_offset: Q_t, R_t diagonal, entries i.i.d. U[diag_min, diag_max]
  // and resampled every t.
  double offset = 0.01;
  double diag_min = 0.375;
  double diag_max = 0.625;
  // set_distance: ball with every center coordinate equal to ball_center.
  double ball_center = 0.5;
  double ball_radius = 0.25;
  // cubic_offset
  double cubic_offset = 0.1;
  // custom
  std::function<StageCost(int t)> custom;
};

/// Time-indexed stage costs c_1 .. c_T. Immutable once constructed.
class CostSequence {
 public:
  CostSequence(CostFamilyConfig family, std::uint64_t seed, int horizon, int n,
               int m);

  /// c_t for t in [1, T].
  const StageCost& at(int t) const;
  /// c_t .. c_{t+M-1}, truncated at T: exactly min(M, T - t + 1) entries.
  std::span<const StageCost> preview(int t, int M) const;

  int horizon() const { return static_cast<int>(stages_.size()); }
  int n() const { return n_; }
  int m() const { return m_; }
  std::uint64_t seed() const { return seed_; }
  const CostFamilyConfig& family() const { return family_; }

  /// Generates c_t without the cache; the cache is built from this.
  StageCost generate(int t) const;

 private:
  CostFamilyConfig family_;
  std::uint64_t seed_;
  int n_;
  int m_;
  std::vector<StageCost> stages_;
};

CostSequence make_example1(std::uint64_t seed, int T, int n, int m);
CostSequence make_example2(std::uint64_t seed, int T, int n, int m);
CostSequence make_example3(std::uint64_t seed, int T, int n, int m);

/// Lower and upper stage-cost / cost-to-go constants against
/// sigma(x) = |x|^2, estimated by sampling.
struct StabilityRatio {
  double alpha_lower = 0.0;
  double alpha_upper = 0.0;
  std::string sigma_kind = "squared_norm";
  int min_preview = 0;
  int samples_used = 0;
  double ratio() const { return alpha_upper / alpha_lower; }
};

/// ceil(ratio^2 + 1).
int min_preview_for_ratio(double ratio);

struct RatioSampling {
  int sample_count = 512;
  double box = 1.0;  // states drawn from [-box, box]^n
  std::uint64_t seed = 0;
};

/// alpha_lower = min over samples of min_u c_t(x, u) / |x|^2 and
/// alpha_upper = max over samples of V_t(x; theta) / |x|^2, with V_t the
/// M-step cost-to-go from the horizon solver. Sampled estimates only.
StabilityRatio estimate_stability_ratio(const CostSequence& seq,
                                        const SystemParams& theta, int M,
                                        const RatioSampling& sampling = {});

}  // namespace olmpc
