#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dobo/config.hpp"
#include "dobo/geometry.hpp"
#include "dobo/graph.hpp"
#include "dobo/losses.hpp"
#include "dobo/optimizer.hpp"
#include "dobo/rng.hpp"
#include "dobo/smoothing.hpp"

namespace dobo {

enum class VerifyLevel { kFast, kFull };

struct VerifyCheck {
  std::string name;
  bool passed = false;
  double measured = 0.0;  // worst observed quantity
  double bound = 0.0;     // what it had to stay under
  std::string details;
};

struct VerifyReport {
  std::vector<VerifyCheck> checks;
  bool all_passed() const {
    for (const auto& c : checks)
      if (!c.passed) return false;
    return true;
  }
};

namespace verify_detail {

// Geometric envelope on the deviation of weight products from uniform,
// checked over every window 1 <= s <= k <= horizon.
inline VerifyCheck mixing_check(int horizon) {
  const GraphSequence graph = ten_node_cyclic_topology();
  const auto constants = graph.mixing_constants();
  const double n = static_cast<double>(graph.size());
  const double slack = 1e-10;

  VerifyCheck check;
  check.name = "mixing_deviation_envelope";
  check.bound = slack;
  double worst_excess = -1.0;
  int worst_k = 0, worst_s = 0;
  for (int s = 1; s <= horizon; ++s) {
    Eigen::MatrixXd product = graph.matrix_at(s);
    for (int k = s; k <= horizon; ++k) {
      if (k > s) product = (graph.matrix_at(k) * product).eval();
      const double deviation = (product.array() - 1.0 / n).abs().maxCoeff();
      const double envelope = constants.scale * std::pow(constants.decay, k - s);
      const double excess = deviation - envelope;
      if (excess > worst_excess) {
        worst_excess = excess;
        worst_k = k;
        worst_s = s;
      }
    }
  }
  check.measured = worst_excess;
  check.passed = worst_excess <= slack;
  check.details = "worst window k=" + std::to_string(worst_k) + " s=" + std::to_string(worst_s);
  return check;
}

// |E f(x + mu u) - f(x)| against the Lipschitz and smooth-case envelopes.
inline VerifyCheck smoothing_gap_check(int samples) {
  const int d = 2;
  const double l0 = 2.0;  // scaled 1-norm below has this Lipschitz constant
  const auto points = feasible_grid(ConstraintSet::cube(d, 1.0), 20);
  const CustomLoss lipschitz(
      1, d, [&](int, int, const Eigen::VectorXd& x) { return l0 * x.lpNorm<1>() / std::sqrt(double(d)); });
  const CustomLoss quadratic(
      1, d, [](int, int, const Eigen::VectorXd& x) { return x.squaredNorm(); },
      [](int, int, const Eigen::VectorXd& x) { return Eigen::VectorXd(2.0 * x); });

  VerifyCheck check;
  check.name = "smoothing_bias_envelope";
  check.passed = true;
  double worst_ratio = 0.0;
  int probe = 0;
  for (const double mu : {0.5, 0.1, 0.01}) {
    for (const auto& x : points) {
      // Shared estimate of E f(x + mu u) with a standard-error cushion.
      auto measure = [&](const LossProcess& loss) {
        auto stream = rng::stream(90210, 0, 1, ++probe, rng::Purpose::kProbe);
        double mean = 0.0, m2 = 0.0;
        for (int i = 1; i <= samples; ++i) {
          const double v = loss.value(1, 1, x + mu * stream.next_gaussian_vector(d));
          const double delta = v - mean;
          mean += delta / i;
          m2 += delta * (v - mean);
        }
        const double se = std::sqrt(m2 / (samples - 1.0) / samples);
        return std::pair<double, double>(mean, se);
      };
      {
        const auto [mean, se] = measure(lipschitz);
        const double gap = std::abs(mean - lipschitz.value(1, 1, x));
        const double envelope = mu * l0 * std::sqrt(double(d)) + 3.0 * se;
        worst_ratio = std::max(worst_ratio, gap / envelope);
        if (gap > envelope) check.passed = false;
      }
      {
        const auto [mean, se] = measure(quadratic);
        const double gap = std::abs(mean - quadratic.value(1, 1, x));
        const double l1 = 2.0;
        const double envelope = mu * mu * l1 * d + 3.0 * se;
        worst_ratio = std::max(worst_ratio, gap / envelope);
        if (gap > envelope) check.passed = false;
      }
    }
  }
  check.measured = worst_ratio;
  check.bound = 1.0;
  check.details = "worst gap/envelope over 20 points, mu in {0.5,0.1,0.01}";
  return check;
}

// Sample means of the bandit estimators against the true gradient of
// functions whose smoothed gradient equals the plain gradient exactly.
inline VerifyCheck unbiasedness_check(int samples) {
  const int d = 2;
  const Eigen::Vector2d slope(1.25, -0.5);
  const CustomLoss linear(
      1, d, [&](int, int, const Eigen::VectorXd& x) { return slope.dot(x); },
      [&](int, int, const Eigen::VectorXd&) { return Eigen::VectorXd(slope); });
  const CustomLoss quadratic(
      1, d, [](int, int, const Eigen::VectorXd& x) { return x.squaredNorm(); },
      [](int, int, const Eigen::VectorXd& x) { return Eigen::VectorXd(2.0 * x); });

  VerifyCheck check;
  check.name = "estimator_unbiasedness";
  check.passed = true;
  check.bound = 4.0;
  double worst_z = 0.0;
  const Eigen::Vector2d x(0.3, -0.7);
  const double mu = 0.05;
  int probe = 100;
  for (const LossProcess* loss : {static_cast<const LossProcess*>(&linear),
                                  static_cast<const LossProcess*>(&quadratic)}) {
    const Eigen::VectorXd truth = loss->gradient(1, 1, x);
    for (const EstimatorKind kind : {EstimatorKind::kOnePoint, EstimatorKind::kOnePointResidual}) {
      ResidualMemory primer;
      {
        auto stream = rng::stream(777, 0, 1, ++probe, rng::Purpose::kProbe);
        estimate_gradient(kind, *loss, 1, 1, x, mu, primer, stream);
      }
      Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
      Eigen::VectorXd m2 = Eigen::VectorXd::Zero(d);
      auto stream = rng::stream(778, 0, 1, ++probe, rng::Purpose::kProbe);
      for (int i = 1; i <= samples; ++i) {
        ResidualMemory memory = primer;  // same primed state for every draw
        const auto est = estimate_gradient(kind, *loss, 1, 2, x, mu, memory, stream);
        const Eigen::VectorXd delta = est.gradient - mean;
        mean += delta / i;
        m2 += delta.cwiseProduct(est.gradient - mean);
      }
      for (int c = 0; c < d; ++c) {
        const double se = std::sqrt(m2[c] / (samples - 1.0) / samples);
        const double z = std::abs(mean[c] - truth[c]) / se;
        worst_z = std::max(worst_z, z);
        if (z > check.bound) check.passed = false;
      }
    }
  }
  check.measured = worst_z;
  check.details = "max per-coordinate z over linear and quadratic losses";
  return check;
}

// Two-round residual protocol on a static Lipschitz loss; the empirical
// second moment must stay under the decision-drift plus smoothing terms.
inline VerifyCheck second_moment_check(int samples) {
  const int d = 2;
  const double l0 = 1.0;
  const CustomLoss loss(
      1, d, [&](int, int, const Eigen::VectorXd& x) { return l0 * x.lpNorm<1>() / std::sqrt(double(d)); });
  const Eigen::Vector2d x_prev(0.3, -0.2);
  const Eigen::Vector2d x_curr(0.25, -0.1);

  VerifyCheck check;
  check.name = "residual_second_moment";
  check.passed = true;
  double worst_ratio = 0.0;
  int probe = 200;
  for (const double mu : {0.1, 0.01}) {
    auto stream = rng::stream(4242, 0, 1, ++probe, rng::Purpose::kProbe);
    double mean = 0.0, m2 = 0.0;
    for (int i = 1; i <= samples; ++i) {
      ResidualMemory memory;
      estimate_gradient(EstimatorKind::kOnePointResidual, loss, 1, 1, x_prev, mu, memory, stream);
      const auto est =
          estimate_gradient(EstimatorKind::kOnePointResidual, loss, 1, 2, x_curr, mu, memory, stream);
      const double v = est.gradient.squaredNorm();
      const double delta = v - mean;
      mean += delta / i;
      m2 += delta * (v - mean);
    }
    const double se = std::sqrt(m2 / (samples - 1.0) / samples);
    const double bound = 3.0 * d * l0 * l0 * (x_curr - x_prev).squaredNorm() / (mu * mu) +
                         12.0 * (d + 4.0) * (d + 4.0) * l0 * l0;
    worst_ratio = std::max(worst_ratio, mean / (bound + 3.0 * se));
    if (mean > bound + 3.0 * se) check.passed = false;
  }
  check.measured = worst_ratio;
  check.bound = 1.0;
  check.details = "mean ||g||^2 over bound, mu in {0.1,0.01}";
  return check;
}

// One tracking run; time-averaged disagreement must shrink as rounds grow.
inline VerifyCheck consensus_trend_check(std::int64_t horizon) {
  ExperimentConfig config = parse_config(preset_config("fig2"));
  config.horizon = horizon;
  config.replicates = 1;
  const ConstraintSet set = config.make_set();
  const GraphSequence graph = config.make_graph();
  const auto loss = config.make_loss();
  const RegretLedger ledger = run(config.algorithm_for(EstimatorKind::kOnePointResidual), graph,
                                  *loss, set, config.base_seed, 0);

  VerifyCheck check;
  check.name = "consensus_contraction";
  const std::int64_t early = std::max<std::int64_t>(1, horizon / 10);
  const double early_avg = ledger.average_consensus_through(early);
  const double late_avg = ledger.average_consensus_through(horizon);
  check.measured = late_avg;
  check.bound = early_avg;
  check.passed = !ledger.failed() && late_avg < early_avg;
  check.details = "time-averaged consensus error at k=" + std::to_string(horizon) +
                  " vs k=" + std::to_string(early);
  return check;
}

}  // namespace verify_detail

// Five self-checks tying the implementation to the quantities it is supposed
// to control. Fast level trims sample counts to stay interactive.
inline VerifyReport verify_suite(VerifyLevel level) {
  const int samples = level == VerifyLevel::kFast ? 20000 : 100000;
  const std::int64_t horizon = level == VerifyLevel::kFast ? 600 : 2000;
  VerifyReport report;
  report.checks.push_back(verify_detail::mixing_check(200));
  report.checks.push_back(verify_detail::smoothing_gap_check(samples));
  report.checks.push_back(verify_detail::unbiasedness_check(samples));
  report.checks.push_back(verify_detail::second_moment_check(samples));
  report.checks.push_back(verify_detail::consensus_trend_check(horizon));
  return report;
}

}  // namespace dobo
