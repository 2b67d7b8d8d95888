#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "dobo/errors.hpp"
#include "dobo/rng.hpp"

namespace dobo {

enum class SetKind { kBox, kL1Ball, kL2Ball };

inline const char* set_kind_name(SetKind kind) {
  switch (kind) {
    case SetKind::kBox: return "box";
    case SetKind::kL1Ball: return "l1_ball";
    case SetKind::kL2Ball: return "l2_ball";
  }
  return "?";
}

// Closed convex feasible region with exact Euclidean projection. Boxes are
// axis-aligned; balls are centered at the origin.
class ConstraintSet {
 public:
  static ConstraintSet box(Eigen::VectorXd lower, Eigen::VectorXd upper) {
    if (lower.size() == 0 || lower.size() != upper.size())
      throw UsageError("box bounds must be non-empty and of equal dimension");
    if (!lower.allFinite() || !upper.allFinite())
      throw InputError("box bounds must be finite");
    if ((lower.array() > upper.array()).any())
      throw UsageError("box lower bound exceeds upper bound");
    ConstraintSet s;
    s.kind_ = SetKind::kBox;
    s.lower_ = std::move(lower);
    s.upper_ = std::move(upper);
    return s;
  }

  static ConstraintSet cube(int dimension, double half_width) {
    if (half_width <= 0.0 || !std::isfinite(half_width))
      throw UsageError("cube half width must be positive and finite");
    check_dimension(dimension);
    return box(Eigen::VectorXd::Constant(dimension, -half_width),
               Eigen::VectorXd::Constant(dimension, half_width));
  }

  static ConstraintSet l1_ball(int dimension, double radius) {
    return ball(SetKind::kL1Ball, dimension, radius);
  }

  static ConstraintSet l2_ball(int dimension, double radius) {
    return ball(SetKind::kL2Ball, dimension, radius);
  }

  SetKind kind() const { return kind_; }
  int dimension() const {
    return kind_ == SetKind::kBox ? static_cast<int>(lower_.size()) : dimension_;
  }
  double radius() const { return radius_; }
  const Eigen::VectorXd& lower() const { return lower_; }
  const Eigen::VectorXd& upper() const { return upper_; }

  // Euclidean projection onto the set. Exact for all three kinds; the L1 case
  // uses the sort-then-threshold simplex reduction.
  Eigen::VectorXd project(const Eigen::VectorXd& point) const {
    check_point(point);
    switch (kind_) {
      case SetKind::kBox:
        return point.cwiseMax(lower_).cwiseMin(upper_);
      case SetKind::kL2Ball: {
        const double norm = point.norm();
        if (norm <= radius_) return point;
        return point * (radius_ / norm);
      }
      case SetKind::kL1Ball:
        return project_l1(point, radius_);
    }
    throw UsageError("unknown set kind");
  }

  bool contains(const Eigen::VectorXd& point, double tol = 1e-9) const {
    check_point(point);
    switch (kind_) {
      case SetKind::kBox:
        return (point.array() >= lower_.array() - tol).all() &&
               (point.array() <= upper_.array() + tol).all();
      case SetKind::kL2Ball:
        return point.norm() <= radius_ + tol;
      case SetKind::kL1Ball:
        return point.lpNorm<1>() <= radius_ + tol;
    }
    throw UsageError("unknown set kind");
  }

  // argmin over the set of <direction, x>. Zero direction returns the
  // canonical center. Ties in the L1 case break toward the lowest index.
  Eigen::VectorXd linear_minimize(const Eigen::VectorXd& direction) const {
    check_point(direction);
    if (direction.isZero(0.0)) return center();
    switch (kind_) {
      case SetKind::kBox: {
        Eigen::VectorXd out(direction.size());
        for (Eigen::Index c = 0; c < direction.size(); ++c) {
          if (direction[c] > 0.0)
            out[c] = lower_[c];
          else if (direction[c] < 0.0)
            out[c] = upper_[c];
          else
            out[c] = 0.5 * (lower_[c] + upper_[c]);
        }
        return out;
      }
      case SetKind::kL2Ball:
        return direction * (-radius_ / direction.norm());
      case SetKind::kL1Ball: {
        Eigen::Index best = 0;
        for (Eigen::Index c = 1; c < direction.size(); ++c)
          if (std::abs(direction[c]) > std::abs(direction[best])) best = c;
        Eigen::VectorXd out = Eigen::VectorXd::Zero(direction.size());
        out[best] = direction[best] > 0.0 ? -radius_ : radius_;
        return out;
      }
    }
    throw UsageError("unknown set kind");
  }

  double diameter() const {
    switch (kind_) {
      case SetKind::kBox: return (upper_ - lower_).norm();
      case SetKind::kL1Ball:
      case SetKind::kL2Ball: return 2.0 * radius_;
    }
    throw UsageError("unknown set kind");
  }

  // Canonical interior point: box midpoint, ball center.
  Eigen::VectorXd center() const {
    if (kind_ == SetKind::kBox) return 0.5 * (lower_ + upper_);
    return Eigen::VectorXd::Zero(dimension_);
  }

  // Axis-aligned bounding box, used for grids and uniform sampling.
  Eigen::VectorXd bounding_lower() const {
    if (kind_ == SetKind::kBox) return lower_;
    return Eigen::VectorXd::Constant(dimension_, -radius_);
  }
  Eigen::VectorXd bounding_upper() const {
    if (kind_ == SetKind::kBox) return upper_;
    return Eigen::VectorXd::Constant(dimension_, radius_);
  }

 private:
  ConstraintSet() = default;

  static void check_dimension(int dimension) {
    if (dimension < 1) throw UsageError("dimension must be >= 1");
  }

  static ConstraintSet ball(SetKind kind, int dimension, double radius) {
    check_dimension(dimension);
    if (!std::isfinite(radius)) throw InputError("radius must be finite");
    if (radius <= 0.0) throw UsageError("radius must be positive");
    ConstraintSet s;
    s.kind_ = kind;
    s.dimension_ = dimension;
    s.radius_ = radius;
    return s;
  }

  void check_point(const Eigen::VectorXd& point) const {
    if (point.size() != dimension())
      throw UsageError("point dimension does not match set dimension");
    if (!point.allFinite()) throw InputError("non-finite coordinate");
  }

  static Eigen::VectorXd project_l1(const Eigen::VectorXd& v, double radius) {
    if (v.lpNorm<1>() <= radius) return v;
    const Eigen::Index d = v.size();
    std::vector<double> mags(static_cast<std::size_t>(d));
    for (Eigen::Index c = 0; c < d; ++c) mags[static_cast<std::size_t>(c)] = std::abs(v[c]);
    std::sort(mags.begin(), mags.end(), std::greater<double>());
    double cumulative = 0.0;
    double threshold = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      cumulative += mags[static_cast<std::size_t>(j)];
      const double candidate = (cumulative - radius) / static_cast<double>(j + 1);
      if (mags[static_cast<std::size_t>(j)] > candidate)
        threshold = candidate;
      else
        break;
    }
    Eigen::VectorXd out(d);
    for (Eigen::Index c = 0; c < d; ++c) {
      const double m = std::max(std::abs(v[c]) - threshold, 0.0);
      out[c] = v[c] >= 0.0 ? m : -m;
    }
    return out;
  }

  SetKind kind_ = SetKind::kBox;
  int dimension_ = 0;       // balls only
  double radius_ = 0.0;     // balls only
  Eigen::VectorXd lower_;   // box only
  Eigen::VectorXd upper_;   // box only
};

namespace detail {

inline double radical_inverse(std::uint64_t index, int base) {
  double scale = 1.0;
  double value = 0.0;
  while (index > 0) {
    scale /= base;
    value += scale * static_cast<double>(index % static_cast<std::uint64_t>(base));
    index /= static_cast<std::uint64_t>(base);
  }
  return value;
}

inline std::vector<int> first_primes(int count) {
  std::vector<int> primes;
  for (int candidate = 2; static_cast<int>(primes.size()) < count; ++candidate) {
    bool is_prime = true;
    for (int p : primes) {
      if (p * p > candidate) break;
      if (candidate % p == 0) {
        is_prime = false;
        break;
      }
    }
    if (is_prime) primes.push_back(candidate);
  }
  return primes;
}

}  // namespace detail

// Deterministic low-discrepancy sample of the feasible set: a Halton sequence
// over the bounding box, projected onto the set. For boxes the points are
// already feasible; for balls projection biases some mass onto the boundary,
// which is acceptable for the lower-bound style estimates this feeds.
inline std::vector<Eigen::VectorXd> feasible_grid(const ConstraintSet& set,
                                                  int count) {
  if (count < 1) throw UsageError("grid point count must be >= 1");
  const int d = set.dimension();
  const std::vector<int> bases = detail::first_primes(d);
  const Eigen::VectorXd lo = set.bounding_lower();
  const Eigen::VectorXd hi = set.bounding_upper();
  std::vector<Eigen::VectorXd> points;
  points.reserve(static_cast<std::size_t>(count));
  for (int i = 1; i <= count; ++i) {
    Eigen::VectorXd p(d);
    for (int c = 0; c < d; ++c) {
      const double u = detail::radical_inverse(static_cast<std::uint64_t>(i), bases[static_cast<std::size_t>(c)]);
      p[c] = lo[c] + (hi[c] - lo[c]) * u;
    }
    points.push_back(set.project(p));
  }
  return points;
}

// Uniform draw over the bounding box, projected onto the set. Exact uniform
// sampling for boxes; for balls the projection concentrates some mass on the
// boundary, so use boxes where exact uniformity matters.
inline Eigen::VectorXd uniform_point(const ConstraintSet& set, rng::Stream& stream) {
  const int d = set.dimension();
  const Eigen::VectorXd lo = set.bounding_lower();
  const Eigen::VectorXd hi = set.bounding_upper();
  Eigen::VectorXd p(d);
  for (int c = 0; c < d; ++c) p[c] = stream.next_uniform(lo[c], hi[c]);
  return set.project(p);
}

}  // namespace dobo
