#pragma once

#include <cmath>
#include <optional>
#include <string_view>

#include <Eigen/Core>

#include "dobo/errors.hpp"
#include "dobo/losses.hpp"
#include "dobo/rng.hpp"

namespace dobo {

enum class EstimatorKind { kFullGradient, kOnePoint, kTwoPoint, kOnePointResidual };

inline const char* estimator_name(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::kFullGradient: return "full_gradient";
    case EstimatorKind::kOnePoint: return "one_point";
    case EstimatorKind::kTwoPoint: return "two_point";
    case EstimatorKind::kOnePointResidual: return "one_point_residual";
  }
  return "?";
}

inline std::optional<EstimatorKind> parse_estimator(std::string_view name) {
  if (name == "full_gradient") return EstimatorKind::kFullGradient;
  if (name == "one_point") return EstimatorKind::kOnePoint;
  if (name == "two_point") return EstimatorKind::kTwoPoint;
  if (name == "one_point_residual") return EstimatorKind::kOnePointResidual;
  return std::nullopt;
}

// Function evaluations one estimate costs at one round.
inline int query_count(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::kFullGradient: return 0;
    case EstimatorKind::kOnePoint: return 1;
    case EstimatorKind::kOnePointResidual: return 1;
    case EstimatorKind::kTwoPoint: return 2;
  }
  return 0;
}

// Residual estimators reuse the previous round's perturbed evaluation. The
// cached direction and smoothing radius are kept for inspection; the estimate
// itself only needs the cached value.
struct ResidualMemory {
  bool initialized = false;
  double previous_value = 0.0;
  Eigen::VectorXd previous_direction;
  double previous_mu = 0.0;
};

struct GradientEstimate {
  Eigen::VectorXd gradient;
  int function_queries = 0;
  bool finite = true;  // false if the loss returned a non-finite value
};

// One gradient estimate for agent `agent` at round `round` and decision x.
//
//   kFullGradient:      exact gradient, no function queries.
//   kOnePoint:          (u/mu) f(x + mu u), one query.
//   kTwoPoint:          (u/mu) (f(x + mu u) - f(x)), two queries.
//   kOnePointResidual:  (u/mu) (f_k(x + mu u) - cached previous perturbed
//                       value), one query. The first call returns the zero
//                       vector and only primes the cache, since no previous
//                       round exists yet.
//
// The direction u is drawn from `stream`; pass a stream keyed by (seed,
// replicate, agent, round) for reproducible runs.
inline GradientEstimate estimate_gradient(EstimatorKind kind, const LossProcess& loss,
                                          int agent, int round, const Eigen::VectorXd& x,
                                          double mu, ResidualMemory& memory,
                                          rng::Stream& stream) {
  if (x.size() != loss.dimension()) throw UsageError("point dimension mismatch");
  if (!x.allFinite()) throw InputError("non-finite coordinate");
  GradientEstimate est;
  if (kind == EstimatorKind::kFullGradient) {
    est.gradient = loss.gradient(agent, round, x);
    est.function_queries = 0;
    est.finite = est.gradient.allFinite();
    return est;
  }
  if (!(mu > 0.0) || !std::isfinite(mu))
    throw UsageError("smoothing radius must be positive for bandit estimators");

  const Eigen::VectorXd u = stream.next_gaussian_vector(loss.dimension());
  switch (kind) {
    case EstimatorKind::kOnePoint: {
      const double v = loss.value(agent, round, x + mu * u);
      est.gradient = u * (v / mu);
      est.function_queries = 1;
      break;
    }
    case EstimatorKind::kTwoPoint: {
      const double forward = loss.value(agent, round, x + mu * u);
      const double base = loss.value(agent, round, x);
      est.gradient = u * ((forward - base) / mu);
      est.function_queries = 2;
      break;
    }
    case EstimatorKind::kOnePointResidual: {
      const double v = loss.value(agent, round, x + mu * u);
      if (memory.initialized)
        est.gradient = u * ((v - memory.previous_value) / mu);
      else
        est.gradient = Eigen::VectorXd::Zero(loss.dimension());
      memory.initialized = true;
      memory.previous_value = v;
      memory.previous_direction = u;
      memory.previous_mu = mu;
      est.function_queries = 1;
      break;
    }
    default:
      throw UsageError("unknown estimator kind");
  }
  est.finite = est.gradient.allFinite();
  return est;
}

// Monte-Carlo estimate of the Gaussian-smoothed value
// E_u[f(x + mu u)], u ~ N(0, I).
inline double smoothed_value(const LossProcess& loss, int agent, int round,
                             const Eigen::VectorXd& x, double mu, int samples,
                             rng::Stream& stream) {
  if (samples < 1) throw UsageError("need at least one sample");
  if (!(mu > 0.0) || !std::isfinite(mu)) throw UsageError("smoothing radius must be positive");
  double total = 0.0;
  for (int s = 0; s < samples; ++s) {
    const Eigen::VectorXd u = stream.next_gaussian_vector(loss.dimension());
    total += loss.value(agent, round, x + mu * u);
  }
  return total / static_cast<double>(samples);
}

}  // namespace dobo
