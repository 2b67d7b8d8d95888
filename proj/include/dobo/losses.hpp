#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "dobo/errors.hpp"
#include "dobo/geometry.hpp"
#include "dobo/rng.hpp"

namespace dobo {

// Time-varying multi-agent loss family f_{i,k}(x): one local loss per agent
// and round. Agents are 1-based, rounds are 1-based. Implementations must be
// pure given (agent, round, x) so they can be shared across threads.
class LossProcess {
 public:
  virtual ~LossProcess() = default;

  int agents() const { return agents_; }
  int dimension() const { return dimension_; }
  virtual bool differentiable() const { return false; }

  double value(int agent, int round, const Eigen::VectorXd& x) const {
    check(agent, round, x);
    return value_impl(agent, round, x);
  }

  Eigen::VectorXd gradient(int agent, int round, const Eigen::VectorXd& x) const {
    check(agent, round, x);
    if (!differentiable())
      throw CapabilityError("loss process does not expose gradients");
    return gradient_impl(agent, round, x);
  }

  // Sum over agents of the per-agent losses / gradients at x.
  double global_value(int round, const Eigen::VectorXd& x) const {
    double total = 0.0;
    for (int i = 1; i <= agents_; ++i) total += value(i, round, x);
    return total;
  }

  Eigen::VectorXd global_gradient(int round, const Eigen::VectorXd& x) const {
    Eigen::VectorXd total = Eigen::VectorXd::Zero(dimension_);
    for (int i = 1; i <= agents_; ++i) total += gradient(i, round, x);
    return total;
  }

 protected:
  LossProcess(int agents, int dimension) : agents_(agents), dimension_(dimension) {
    if (agents < 1) throw UsageError("loss process needs at least one agent");
    if (dimension < 1) throw UsageError("loss process dimension must be >= 1");
  }

  virtual double value_impl(int agent, int round, const Eigen::VectorXd& x) const = 0;
  virtual Eigen::VectorXd gradient_impl(int, int, const Eigen::VectorXd&) const {
    throw CapabilityError("loss process does not expose gradients");
  }

  virtual void check_round(int round) const {
    if (round < 1) throw UsageError("round must be >= 1");
  }

 private:
  void check(int agent, int round, const Eigen::VectorXd& x) const {
    if (agent < 1 || agent > agents_) throw UsageError("agent index out of range");
    check_round(round);
    if (x.size() != dimension_) throw UsageError("point dimension mismatch");
    if (!x.allFinite()) throw InputError("non-finite coordinate");
  }

  int agents_;
  int dimension_;
};

// One step of the target's random walk. Round k must be >= 1 because the
// increment scales with 1/k; coin is the per-round fair Bernoulli draw.
inline Eigen::Vector2d advance_target(const Eigen::Vector2d& current, int k, bool coin) {
  if (k < 1) throw UsageError("target advances from round 1 on");
  const double kk = static_cast<double>(k);
  Eigen::Vector2d next = current;
  next[0] += (coin ? -1.0 : 1.0) * std::sin(kk / 50.0) / (10.0 * kk);
  next[1] += (coin ? -1.0 : 0.0) * std::cos(kk / 70.0) / (40.0 * kk);
  return next;
}

// Range-sensing target tracking: ten fixed sensors measure squared distances
// z_{i,k} to a slowly drifting target, and agent i pays
//   f_{i,k}(x) = ((|x - s_i|^2 - z_{i,k})^2) / 4.
// The target path is precomputed from path_seed for rounds 1..horizon+1, so
// evaluation is deterministic and thread-safe. The round-k global minimizer
// is the target position itself, where every local loss is zero.
class TargetTrackingLoss final : public LossProcess {
 public:
  TargetTrackingLoss(std::uint64_t path_seed, int horizon)
      : TargetTrackingLoss(default_sensors(), path_seed, horizon) {}

  TargetTrackingLoss(std::vector<Eigen::Vector2d> sensors, std::uint64_t path_seed, int horizon)
      : LossProcess(static_cast<int>(sensors.size()), 2),
        sensors_(std::move(sensors)),
        horizon_(horizon) {
    if (horizon < 1) throw UsageError("horizon must be >= 1");
    path_.reserve(static_cast<std::size_t>(horizon) + 1);
    path_.emplace_back(0.8, 0.95);
    for (int k = 1; k <= horizon; ++k) {
      rng::Stream coin_stream = rng::stream(path_seed, 0, 0, static_cast<std::uint64_t>(k),
                                            rng::Purpose::kTargetCoin);
      path_.push_back(advance_target(path_.back(), k, coin_stream.next_bernoulli(0.5)));
    }
  }

  static std::vector<Eigen::Vector2d> default_sensors() {
    return {{1, 3}, {2, 5}, {5, 1}, {2, 4}, {3, 1}, {2, 3}, {2, 6}, {4, 2}, {1, 2}, {1, 1}};
  }

  bool differentiable() const override { return true; }
  int horizon() const { return horizon_; }
  const std::vector<Eigen::Vector2d>& sensors() const { return sensors_; }

  // Target position x*_k, defined for 1 <= k <= horizon + 1.
  const Eigen::Vector2d& target(int round) const {
    check_round(round);
    return path_[static_cast<std::size_t>(round - 1)];
  }

 protected:
  void check_round(int round) const override {
    if (round < 1 || round > horizon_ + 1)
      throw UsageError("round outside the precomputed target path");
  }

  double value_impl(int agent, int round, const Eigen::VectorXd& x) const override {
    const double residual = range_residual(agent, round, x);
    return 0.25 * residual * residual;
  }

  Eigen::VectorXd gradient_impl(int agent, int round, const Eigen::VectorXd& x) const override {
    const Eigen::Vector2d& s = sensors_[static_cast<std::size_t>(agent - 1)];
    return range_residual(agent, round, x) * (x - s);
  }

 private:
  // |x - s_i|^2 - z_{i,k}
  double range_residual(int agent, int round, const Eigen::VectorXd& x) const {
    const Eigen::Vector2d& s = sensors_[static_cast<std::size_t>(agent - 1)];
    const Eigen::Vector2d& t = path_[static_cast<std::size_t>(round - 1)];
    return (x - s).squaredNorm() - (t - s).squaredNorm();
  }

  std::vector<Eigen::Vector2d> sensors_;
  std::vector<Eigen::Vector2d> path_;
  int horizon_;
};

// Nonconvex two-dimensional family
//   f_{i,k}(x) = (i/63) x1^3 + ((i-1)/15)(x1^2 + x2^2)
//              - (2(i-3)/3) r_{i,k} cos(x2),
// with drift r_{i,k} = atan(k)/2 + noise_std * xi_{i,k} / 2 and xi_{i,k} a
// standard normal fixed per (agent, round) by the noise seed: the adversary
// commits to one loss per round, so repeated queries within a round see the
// same function.
class CubicCosineLoss final : public LossProcess {
 public:
  CubicCosineLoss(int agents, std::uint64_t noise_seed, double noise_std = 1.0)
      : LossProcess(agents, 2), noise_seed_(noise_seed), noise_std_(noise_std) {
    if (noise_std < 0.0 || !std::isfinite(noise_std))
      throw UsageError("noise standard deviation must be >= 0");
  }

  bool differentiable() const override { return true; }

  double drift(int agent, int round) const {
    double xi = 0.0;
    if (noise_std_ > 0.0) {
      rng::Stream s = rng::stream(noise_seed_, 0, static_cast<std::uint64_t>(agent),
                                  static_cast<std::uint64_t>(round), rng::Purpose::kLossNoise);
      xi = s.next_gaussian();
    }
    return 0.5 * std::atan(static_cast<double>(round)) + 0.5 * noise_std_ * xi;
  }

 protected:
  double value_impl(int agent, int round, const Eigen::VectorXd& x) const override {
    const double i = static_cast<double>(agent);
    const double cubic = i / 63.0 * x[0] * x[0] * x[0];
    const double quad = (i - 1.0) / 15.0 * (x[0] * x[0] + x[1] * x[1]);
    const double wave = 2.0 * (i - 3.0) / 3.0 * drift(agent, round) * std::cos(x[1]);
    return cubic + quad - wave;
  }

  Eigen::VectorXd gradient_impl(int agent, int round, const Eigen::VectorXd& x) const override {
    const double i = static_cast<double>(agent);
    Eigen::VectorXd g(2);
    g[0] = i / 21.0 * x[0] * x[0] + 2.0 * (i - 1.0) / 15.0 * x[0];
    g[1] = 2.0 * (i - 1.0) / 15.0 * x[1] +
           2.0 * (i - 3.0) / 3.0 * drift(agent, round) * std::sin(x[1]);
    return g;
  }

 private:
  std::uint64_t noise_seed_;
  double noise_std_;
};

// Adapter for user-supplied callables, mainly for tests and library use.
class CustomLoss final : public LossProcess {
 public:
  using ValueFn = std::function<double(int agent, int round, const Eigen::VectorXd&)>;
  using GradientFn = std::function<Eigen::VectorXd(int agent, int round, const Eigen::VectorXd&)>;

  CustomLoss(int agents, int dimension, ValueFn value, GradientFn gradient = nullptr)
      : LossProcess(agents, dimension), value_(std::move(value)), gradient_(std::move(gradient)) {
    if (!value_) throw UsageError("custom loss needs a value callable");
  }

  bool differentiable() const override { return static_cast<bool>(gradient_); }

 protected:
  double value_impl(int agent, int round, const Eigen::VectorXd& x) const override {
    return value_(agent, round, x);
  }
  Eigen::VectorXd gradient_impl(int agent, int round, const Eigen::VectorXd& x) const override {
    return gradient_(agent, round, x);
  }

 private:
  ValueFn value_;
  GradientFn gradient_;
};

// Counts bandit-style function queries passing through value(); gradient
// calls are deliberately not counted. Used to audit estimator query budgets.
class QueryCountingLoss final : public LossProcess {
 public:
  explicit QueryCountingLoss(const LossProcess& inner)
      : LossProcess(inner.agents(), inner.dimension()), inner_(inner) {}

  bool differentiable() const override { return inner_.differentiable(); }
  long long count() const { return count_.load(std::memory_order_relaxed); }
  void reset() { count_.store(0, std::memory_order_relaxed); }

 protected:
  double value_impl(int agent, int round, const Eigen::VectorXd& x) const override {
    count_.fetch_add(1, std::memory_order_relaxed);
    return inner_.value(agent, round, x);
  }
  Eigen::VectorXd gradient_impl(int agent, int round, const Eigen::VectorXd& x) const override {
    return inner_.gradient(agent, round, x);
  }

 private:
  const LossProcess& inner_;
  mutable std::atomic<long long> count_{0};
};

// Largest observed per-round change sup_x |f_{i,t+1}(x) - f_{i,t}(x)| over
// t = 1..round_cap, maximized over the supplied feasible points. A grid
// lower-bounds the true supremum.
inline double theta_variation(const LossProcess& loss, int agent, int round_cap,
                              std::span<const Eigen::VectorXd> grid) {
  if (round_cap < 1) throw UsageError("round cap must be >= 1");
  if (grid.empty()) throw UsageError("variation grid must be non-empty");
  double worst = 0.0;
  for (int t = 1; t <= round_cap; ++t)
    for (const auto& x : grid)
      worst = std::max(worst, std::abs(loss.value(agent, t + 1, x) - loss.value(agent, t, x)));
  return worst;
}

// Total movement of a point sequence, sum of consecutive distances.
inline double path_length(std::span<const Eigen::VectorXd> points) {
  if (points.empty()) throw UsageError("path needs at least one point");
  double total = 0.0;
  for (std::size_t t = 0; t + 1 < points.size(); ++t)
    total += (points[t + 1] - points[t]).norm();
  return total;
}

// Monte-Carlo lower bound on the Lipschitz constant of f_{i,k} over the set.
inline double empirical_lipschitz(const LossProcess& loss, int agent, int round,
                                  const ConstraintSet& set, int pairs, rng::Stream& stream) {
  if (pairs < 1) throw UsageError("need at least one pair");
  double worst = 0.0;
  for (int p = 0; p < pairs; ++p) {
    const Eigen::VectorXd a = uniform_point(set, stream);
    const Eigen::VectorXd b = uniform_point(set, stream);
    const double gap = (a - b).norm();
    if (gap < 1e-12) continue;
    worst = std::max(worst, std::abs(loss.value(agent, round, a) - loss.value(agent, round, b)) / gap);
  }
  return worst;
}

}  // namespace dobo
