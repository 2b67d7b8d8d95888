#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "dobo/errors.hpp"
#include "dobo/geometry.hpp"
#include "dobo/graph.hpp"
#include "dobo/losses.hpp"
#include "dobo/metrics.hpp"
#include "dobo/rng.hpp"
#include "dobo/smoothing.hpp"

namespace dobo {

// Positive, non-increasing per-round sequence for step sizes and smoothing
// radii: either a constant or scale / (k + offset)^exponent.
class Schedule {
 public:
  enum class Kind { kConstant, kPower };

  static Schedule constant(double value) {
    if (!(value > 0.0) || !std::isfinite(value))
      throw UsageError("constant schedule needs a positive finite value");
    Schedule s;
    s.kind_ = Kind::kConstant;
    s.scale_ = value;
    return s;
  }

  static Schedule power(double scale, double exponent, double offset = 0.0) {
    if (!(scale > 0.0) || !std::isfinite(scale))
      throw UsageError("power schedule needs a positive finite scale");
    if (exponent < 0.0 || !std::isfinite(exponent))
      throw UsageError("power schedule needs a nonnegative exponent");
    if (offset <= -1.0 || !std::isfinite(offset))
      throw UsageError("power schedule offset must exceed -1");
    Schedule s;
    s.kind_ = Kind::kPower;
    s.scale_ = scale;
    s.exponent_ = exponent;
    s.offset_ = offset;
    return s;
  }

  double value(std::int64_t k) const {
    if (k < 1) throw UsageError("schedules are defined from round 1 on");
    if (kind_ == Kind::kConstant) return scale_;
    return scale_ / std::pow(static_cast<double>(k) + offset_, exponent_);
  }

  Kind kind() const { return kind_; }
  double scale() const { return scale_; }
  double exponent() const { return exponent_; }
  double offset() const { return offset_; }

 private:
  Schedule() = default;
  Kind kind_ = Kind::kConstant;
  double scale_ = 1.0;
  double exponent_ = 0.0;
  double offset_ = 0.0;
};

// Step-size constant from the convergence analysis, statement form:
//   M = 4 sqrt(3 d) n scale L0 decay / (1 - decay).
inline double theorem_step_scale(int dimension, int agents, MixingConstants mixing, double l0) {
  if (dimension < 1 || agents < 1) throw UsageError("dimension and agent count must be >= 1");
  if (!(l0 > 0.0) || !std::isfinite(l0)) throw UsageError("Lipschitz constant must be positive");
  if (!(mixing.decay > 0.0) || !(mixing.decay < 1.0)) throw UsageError("decay must lie in (0, 1)");
  if (!(mixing.scale >= 1.0)) throw UsageError("mixing scale must be >= 1");
  return 4.0 * std::sqrt(3.0 * dimension) * agents * mixing.scale * l0 * mixing.decay /
         (1.0 - mixing.decay);
}

// Alternative constant produced by the appendix-style derivation:
//   M = sqrt(3 d) (8 + 6 n scale) L0 / (decay (1 - decay)).
// Kept alongside the statement form because the two disagree; the statement
// form is the default.
inline double appendix_step_scale(int dimension, int agents, MixingConstants mixing, double l0) {
  if (dimension < 1 || agents < 1) throw UsageError("dimension and agent count must be >= 1");
  if (!(l0 > 0.0) || !std::isfinite(l0)) throw UsageError("Lipschitz constant must be positive");
  if (!(mixing.decay > 0.0) || !(mixing.decay < 1.0)) throw UsageError("decay must lie in (0, 1)");
  if (!(mixing.scale >= 1.0)) throw UsageError("mixing scale must be >= 1");
  return std::sqrt(3.0 * dimension) * (8.0 + 6.0 * agents * mixing.scale) * l0 /
         (mixing.decay * (1.0 - mixing.decay));
}

enum class InitKind { kProjectedOrigin, kUniformInSet, kGivenPoint };

struct InitSpec {
  InitKind kind = InitKind::kProjectedOrigin;
  Eigen::VectorXd point;  // kGivenPoint only; projected onto the set
};

struct AlgorithmConfig {
  EstimatorKind estimator = EstimatorKind::kOnePointResidual;
  Schedule alpha = Schedule::constant(1e-2);  // step sizes
  Schedule mu = Schedule::constant(1e-2);     // smoothing radii
  std::int64_t horizon = 0;                   // rounds, >= 1
  int tracked_agent = 1;                      // whose regret is reported
  InitSpec init;
  RegretKind regret = RegretKind::kConvexDynamic;
  MinimizerMethod minimizer = MinimizerMethod::kAuto;
};

struct AgentState {
  Eigen::VectorXd x;
  ResidualMemory memory;
};

struct StepOutcome {
  std::vector<Eigen::VectorXd> decisions;  // x_{i,k} before the update
  std::vector<Eigen::VectorXd> estimates;  // g_{i,k}
  int function_queries = 0;
  bool finite = true;
};

// One synchronous round k: every agent forms its gradient estimate at its
// current decision, takes the local step y_i = x_i - alpha_k g_i, and the
// new decisions are the projected mixtures
//   x_i <- project(sum_j W_k(i, j) y_j)
// using everyone's pre-update y. If any estimate comes back non-finite the
// states are left untouched and the outcome is flagged instead.
inline StepOutcome step(std::vector<AgentState>& states, std::int64_t k,
                        const GraphSequence& graph, const LossProcess& loss,
                        const ConstraintSet& set, const AlgorithmConfig& config,
                        const rng::StreamFactory& streams) {
  const int n = loss.agents();
  if (static_cast<int>(states.size()) != n)
    throw UsageError("state count does not match agent count");
  if (graph.size() != n) throw UsageError("graph size does not match agent count");
  if (k < 1) throw UsageError("rounds start at 1");

  const double alpha = config.alpha.value(k);
  const double mu = config.mu.value(k);

  StepOutcome out;
  out.decisions.reserve(static_cast<std::size_t>(n));
  out.estimates.reserve(static_cast<std::size_t>(n));

  std::vector<Eigen::VectorXd> mixed(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    AgentState& state = states[static_cast<std::size_t>(i)];
    rng::Stream stream = streams.make(static_cast<std::uint64_t>(i + 1),
                                      static_cast<std::uint64_t>(k),
                                      rng::Purpose::kPerturbation);
    GradientEstimate est = estimate_gradient(config.estimator, loss, i + 1,
                                             static_cast<int>(k), state.x, mu,
                                             state.memory, stream);
    out.function_queries += est.function_queries;
    out.finite = out.finite && est.finite;
    out.decisions.push_back(state.x);
    out.estimates.push_back(std::move(est.gradient));
  }
  if (!out.finite) return out;

  const Eigen::MatrixXd& w = graph.matrix_at(k);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd blend = Eigen::VectorXd::Zero(loss.dimension());
    for (int j = 0; j < n; ++j) {
      if (w(i, j) == 0.0) continue;
      blend += w(i, j) * (out.decisions[static_cast<std::size_t>(j)] -
                          alpha * out.estimates[static_cast<std::size_t>(j)]);
    }
    mixed[static_cast<std::size_t>(i)] = set.project(blend);
  }
  for (int i = 0; i < n; ++i) states[static_cast<std::size_t>(i)].x = std::move(mixed[static_cast<std::size_t>(i)]);
  return out;
}

inline std::vector<AgentState> initial_states(const AlgorithmConfig& config,
                                              const ConstraintSet& set, int agents,
                                              const rng::StreamFactory& streams) {
  std::vector<AgentState> states(static_cast<std::size_t>(agents));
  for (int i = 0; i < agents; ++i) {
    switch (config.init.kind) {
      case InitKind::kProjectedOrigin:
        states[static_cast<std::size_t>(i)].x = set.project(Eigen::VectorXd::Zero(set.dimension()));
        break;
      case InitKind::kUniformInSet: {
        rng::Stream stream = streams.make(static_cast<std::uint64_t>(i + 1), 0, rng::Purpose::kInit);
        states[static_cast<std::size_t>(i)].x = uniform_point(set, stream);
        break;
      }
      case InitKind::kGivenPoint:
        if (config.init.point.size() != set.dimension())
          throw UsageError("init point dimension mismatch");
        states[static_cast<std::size_t>(i)].x = set.project(config.init.point);
        break;
    }
  }
  return states;
}

// Full trajectory: T rounds of step() with per-round regret accounting.
// Convex regret compares the tracked agent's decision against the round's
// global minimizer; nonconvex regret uses the linearized suboptimality.
// Regret-oracle evaluations go to the raw loss, so the recorded function
// queries count only what the bandit estimators spent. A non-finite estimate
// stops the run early and marks the ledger failed at that round.
inline RegretLedger run(const AlgorithmConfig& config, const GraphSequence& graph,
                        const LossProcess& loss, const ConstraintSet& set,
                        std::uint64_t seed, std::uint64_t replicate = 0) {
  const int n = loss.agents();
  if (config.horizon < 1) throw UsageError("horizon must be >= 1");
  if (config.tracked_agent < 1 || config.tracked_agent > n)
    throw UsageError("tracked agent out of range");
  if (graph.size() != n) throw UsageError("graph size does not match agent count");
  if (set.dimension() != loss.dimension()) throw UsageError("set and loss dimensions differ");
  if (const auto* tracking = dynamic_cast<const TargetTrackingLoss*>(&loss))
    if (tracking->horizon() < config.horizon)
      throw UsageError("loss process horizon is shorter than the run horizon");

  const rng::StreamFactory streams{seed, replicate};
  std::vector<AgentState> states = initial_states(config, set, n, streams);
  QueryCountingLoss counting(loss);
  const int expected_queries = n * query_count(config.estimator);

  RegretLedger ledger;
  for (std::int64_t k = 1; k <= config.horizon; ++k) {
    counting.reset();
    StepOutcome outcome = step(states, k, graph, counting, set, config, streams);
    if (counting.count() != outcome.function_queries ||
        (outcome.finite && outcome.function_queries != expected_queries))
      throw UsageError("estimator query accounting mismatch");

    RoundRecord record;
    record.k = k;
    record.function_queries = outcome.function_queries;
    record.finite = outcome.finite;
    record.decisions = std::move(outcome.decisions);
    record.consensus_error = consensus_error(record.decisions);
    record.local_losses.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
      record.local_losses[static_cast<std::size_t>(i)] =
          loss.value(i + 1, static_cast<int>(k), record.decisions[static_cast<std::size_t>(i)]);

    const Eigen::VectorXd& tracked = record.decisions[static_cast<std::size_t>(config.tracked_agent - 1)];
    if (config.regret == RegretKind::kConvexDynamic) {
      const Eigen::VectorXd minimizer =
          per_round_minimizer(loss, static_cast<int>(k), set, config.minimizer);
      record.regret_increment = convex_regret_increment(loss, static_cast<int>(k), tracked, minimizer);
    } else {
      record.regret_increment = nonconvex_regret_increment(loss, static_cast<int>(k), tracked, set);
    }

    const bool round_finite = record.finite;
    ledger.append(std::move(record));
    if (!round_finite) {
      ledger.mark_failed(k);
      break;
    }
  }
  return ledger;
}

}  // namespace dobo
