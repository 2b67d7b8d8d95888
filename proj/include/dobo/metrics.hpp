#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dobo/errors.hpp"
#include "dobo/geometry.hpp"
#include "dobo/losses.hpp"

namespace dobo {

enum class RegretKind { kConvexDynamic, kNonconvexDynamic };

inline const char* regret_kind_name(RegretKind kind) {
  return kind == RegretKind::kConvexDynamic ? "convex" : "nonconvex";
}

// Everything recorded about one round: the pre-update decisions of all
// agents, their local losses at those decisions, the tracked-agent regret
// increment, and diagnostics.
struct RoundRecord {
  std::int64_t k = 0;
  std::vector<Eigen::VectorXd> decisions;  // x_{i,k}, one per agent
  std::vector<double> local_losses;        // f_{i,k}(x_{i,k})
  double regret_increment = 0.0;
  double cumulative_regret = 0.0;          // filled by the ledger
  double consensus_error = 0.0;            // sum_i |x_{i,k} - mean|
  int function_queries = 0;                // bandit queries this round
  bool finite = true;
};

// Append-only per-round log. Rounds must arrive in order starting at 1; the
// cumulative regret column is maintained as the running prefix sum.
class RegretLedger {
 public:
  void append(RoundRecord record) {
    if (record.k != static_cast<std::int64_t>(rounds_.size()) + 1)
      throw UsageError("rounds must be appended consecutively starting at 1");
    record.cumulative_regret =
        (rounds_.empty() ? 0.0 : rounds_.back().cumulative_regret) + record.regret_increment;
    rounds_.push_back(std::move(record));
  }

  void mark_failed(std::int64_t round) { failed_round_ = round; }
  bool failed() const { return failed_round_ != 0; }
  std::int64_t failed_round() const { return failed_round_; }

  std::size_t size() const { return rounds_.size(); }
  bool empty() const { return rounds_.empty(); }
  const RoundRecord& operator[](std::size_t i) const { return rounds_[i]; }
  const std::vector<RoundRecord>& rounds() const { return rounds_; }

  double cumulative_regret_at(std::int64_t k) const {
    if (k < 1 || k > static_cast<std::int64_t>(rounds_.size()))
      throw UsageError("round outside ledger");
    return rounds_[static_cast<std::size_t>(k - 1)].cumulative_regret;
  }

  double final_cumulative_regret() const {
    if (rounds_.empty()) throw UsageError("ledger is empty");
    return rounds_.back().cumulative_regret;
  }

  // (1/k) sum_{t<=k} consensus error, the quantity whose decay certifies
  // agreement across agents.
  double average_consensus_through(std::int64_t k) const {
    if (k < 1 || k > static_cast<std::int64_t>(rounds_.size()))
      throw UsageError("round outside ledger");
    double total = 0.0;
    for (std::int64_t t = 0; t < k; ++t) total += rounds_[static_cast<std::size_t>(t)].consensus_error;
    return total / static_cast<double>(k);
  }

 private:
  std::vector<RoundRecord> rounds_;
  std::int64_t failed_round_ = 0;
};

// sum_i |x_i - mean_j x_j|
inline double consensus_error(std::span<const Eigen::VectorXd> decisions) {
  if (decisions.empty()) throw UsageError("need at least one decision");
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(decisions.front().size());
  for (const auto& x : decisions) {
    if (x.size() != mean.size()) throw UsageError("decision dimension mismatch");
    mean += x;
  }
  mean /= static_cast<double>(decisions.size());
  double total = 0.0;
  for (const auto& x : decisions) total += (x - mean).norm();
  return total;
}

// Convex benchmark: F_k(decision) - F_k(minimizer), with F_k the sum of the
// per-agent losses. Callers supply the round's global minimizer.
inline double convex_regret_increment(const LossProcess& loss, int round,
                                      const Eigen::VectorXd& decision,
                                      const Eigen::VectorXd& minimizer) {
  return loss.global_value(round, decision) - loss.global_value(round, minimizer);
}

// Nonconvex benchmark: the linearized suboptimality
//   <g, decision> - min_{x in set} <g, x>,  g = sum_i grad f_{i,k}(decision).
// Nonnegative for any feasible decision. The box case sums per-coordinate
// nonnegative terms so rounding cannot flip the sign; the ball cases clamp
// at most one ulp-scale negative residue.
inline double nonconvex_regret_increment(const LossProcess& loss, int round,
                                         const Eigen::VectorXd& decision,
                                         const ConstraintSet& set) {
  if (!set.contains(decision, 1e-7)) throw UsageError("decision must be feasible");
  const Eigen::VectorXd g = loss.global_gradient(round, decision);
  if (set.kind() == SetKind::kBox) {
    double total = 0.0;
    for (Eigen::Index c = 0; c < g.size(); ++c) {
      const double target = g[c] > 0.0 ? set.lower()[c] : (g[c] < 0.0 ? set.upper()[c] : decision[c]);
      total += g[c] * (decision[c] - target);
    }
    return total;
  }
  const Eigen::VectorXd vertex = set.linear_minimize(g);
  const double value = g.dot(decision) - g.dot(vertex);
  if (value < 0.0) {
    const double slack = 1e-12 * (1.0 + g.norm() * set.diameter());
    if (value < -slack) throw UsageError("linearized regret came out negative; decision infeasible?");
    return 0.0;
  }
  return value;
}

enum class MinimizerMethod { kAuto, kAnalytic, kGridThenDescent };

struct DescentOptions {
  int grid_points = 4096;
  double step = 1e-3;
  double tolerance = 1e-8;  // on the projected-gradient mapping norm
  int max_iterations = 10000;
};

// argmin over the set of the round-k global loss. kAnalytic uses a known
// closed-form minimizer (target-tracking's target position) and fails for
// families without one; kGridThenDescent seeds projected gradient descent
// from the best point of a low-discrepancy grid. kAuto prefers analytic.
inline Eigen::VectorXd per_round_minimizer(const LossProcess& loss, int round,
                                           const ConstraintSet& set,
                                           MinimizerMethod method = MinimizerMethod::kAuto,
                                           const DescentOptions& options = {}) {
  if (method != MinimizerMethod::kGridThenDescent) {
    if (const auto* tracking = dynamic_cast<const TargetTrackingLoss*>(&loss)) {
      const Eigen::Vector2d& t = tracking->target(round);
      if (!set.contains(t, 1e-9))
        throw CapabilityError("analytic minimizer lies outside the feasible set");
      return t;
    }
    if (method == MinimizerMethod::kAnalytic)
      throw CapabilityError("no analytic per-round minimizer for this loss family");
  }
  if (!loss.differentiable())
    throw CapabilityError("grid-then-descent needs gradients");

  const auto grid = feasible_grid(set, options.grid_points);
  const Eigen::VectorXd* best = &grid.front();
  double best_value = loss.global_value(round, *best);
  for (const auto& p : grid) {
    const double v = loss.global_value(round, p);
    if (v < best_value) {
      best_value = v;
      best = &p;
    }
  }
  Eigen::VectorXd x = *best;
  for (int it = 0; it < options.max_iterations; ++it) {
    const Eigen::VectorXd next = set.project(x - options.step * loss.global_gradient(round, x));
    const double mapping_norm = (x - next).norm() / options.step;
    x = next;
    if (mapping_norm <= options.tolerance) return x;
  }
  throw CapabilityError("projected gradient descent did not reach tolerance " +
                        std::to_string(options.tolerance) + " within " +
                        std::to_string(options.max_iterations) + " iterations");
}

}  // namespace dobo
