#pragma once

#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dobo/errors.hpp"

namespace dobo {

// Directed communication link (from, to), 0-based node ids.
using Edge = std::pair<int, int>;

enum class Weighting { kMetropolis, kLazyUniform, kInDegree };

inline const char* weighting_name(Weighting w) {
  switch (w) {
    case Weighting::kMetropolis: return "metropolis";
    case Weighting::kLazyUniform: return "lazy_uniform";
    case Weighting::kInDegree: return "in_degree";
  }
  return "?";
}

// Geometric envelope for products of mixing matrices:
//   max_ij |[W(k,s)]_ij - 1/n| <= scale * decay^(k-s).
struct MixingConstants {
  double scale = 0.0;  // multiplicative constant
  double decay = 0.0;  // per-round contraction rate, in (0, 1)
};

namespace detail {

// Strong connectivity of the directed graph where mask(i, j) != 0 means a
// link j -> i exists. Reachability from node 0 in both orientations.
inline bool strongly_connected(const Eigen::MatrixXd& mask) {
  const int n = static_cast<int>(mask.rows());
  auto reaches_all = [n, &mask](bool transpose) {
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    int found = 1;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      for (int w = 0; w < n; ++w) {
        const double entry = transpose ? mask(v, w) : mask(w, v);
        if (entry != 0.0 && !seen[static_cast<std::size_t>(w)]) {
          seen[static_cast<std::size_t>(w)] = 1;
          ++found;
          stack.push_back(w);
        }
      }
    }
    return found == n;
  };
  return reaches_all(false) && reaches_all(true);
}

}  // namespace detail

// Periodic sequence of per-round mixing matrices W_k, k >= 1, with
// W_k = snapshot[k mod period]. Carries the connectivity window (how many
// consecutive rounds are needed before the union of links is strongly
// connected) and the smallest positive weight across snapshots.
class GraphSequence {
 public:
  GraphSequence(std::vector<Eigen::MatrixXd> snapshots, int window)
      : snapshots_(std::move(snapshots)), window_(window) {
    if (snapshots_.empty()) throw UsageError("graph sequence needs at least one snapshot");
    if (window_ < 1) throw UsageError("connectivity window must be >= 1");
    const Eigen::Index n = snapshots_.front().rows();
    if (n < 1) throw UsageError("graph must have at least one node");
    for (const auto& w : snapshots_) {
      if (w.rows() != n || w.cols() != n)
        throw UsageError("all snapshots must be square with matching size");
      if (!w.allFinite()) throw InputError("snapshot contains a non-finite weight");
    }
    min_positive_ = 1.0;
    for (const auto& w : snapshots_)
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
          if (w(i, j) > 0.0) min_positive_ = std::min(min_positive_, w(i, j));
  }

  int size() const { return static_cast<int>(snapshots_.front().rows()); }
  int period() const { return static_cast<int>(snapshots_.size()); }
  int window() const { return window_; }
  double min_positive_weight() const { return min_positive_; }

  const Eigen::MatrixXd& matrix_at(std::int64_t round) const {
    if (round < 0) throw UsageError("round must be >= 0");
    return snapshots_[static_cast<std::size_t>(round % period())];
  }

  // W(k, s) = W_k W_{k-1} ... W_s for s <= k.
  Eigen::MatrixXd product(std::int64_t k, std::int64_t s) const {
    if (s > k) throw UsageError("transition product needs s <= k");
    if (s < 0) throw UsageError("round must be >= 0");
    Eigen::MatrixXd p = matrix_at(s);
    for (std::int64_t t = s + 1; t <= k; ++t) p = matrix_at(t) * p;
    return p;
  }

  // scale = (1 - zeta / (4 n^2))^(-2), decay = (1 - zeta / (4 n^2))^(1 / U),
  // with zeta the smallest positive weight and U the connectivity window.
  MixingConstants mixing_constants() const {
    const double n = static_cast<double>(size());
    const double base = 1.0 - min_positive_ / (4.0 * n * n);
    MixingConstants mc;
    mc.scale = 1.0 / (base * base);
    mc.decay = std::pow(base, 1.0 / static_cast<double>(window_));
    return mc;
  }

  // Returns one message per violated structural requirement: nonnegative
  // entries, positive diagonal, unit row and column sums, and strong
  // connectivity of every window-length union of links. Empty means clean.
  std::vector<std::string> validate(double tol = 1e-12) const {
    std::vector<std::string> issues;
    const int n = size();
    for (int t = 0; t < period(); ++t) {
      const Eigen::MatrixXd& w = snapshots_[static_cast<std::size_t>(t)];
      if ((w.array() < -tol).any())
        issues.push_back("snapshot " + std::to_string(t) + ": negative weight");
      for (int i = 0; i < n; ++i) {
        if (w(i, i) <= 0.0)
          issues.push_back("snapshot " + std::to_string(t) + ": node " +
                           std::to_string(i) + " has no self weight");
        const double row = w.row(i).sum();
        if (std::abs(row - 1.0) > tol)
          issues.push_back("snapshot " + std::to_string(t) + ": row " +
                           std::to_string(i) + " sums to " + std::to_string(row));
        const double col = w.col(i).sum();
        if (std::abs(col - 1.0) > tol)
          issues.push_back("snapshot " + std::to_string(t) + ": column " +
                           std::to_string(i) + " sums to " + std::to_string(col) +
                           " (not doubly stochastic)");
      }
    }
    for (int start = 0; start < period(); ++start) {
      Eigen::MatrixXd unioned = Eigen::MatrixXd::Zero(n, n);
      for (int t = 0; t < window_; ++t)
        unioned += snapshots_[static_cast<std::size_t>((start + t) % period())].cwiseAbs();
      if (!detail::strongly_connected(unioned))
        issues.push_back("links over rounds [" + std::to_string(start) + ", " +
                         std::to_string(start + window_ - 1) +
                         "] are not strongly connected");
    }
    return issues;
  }

 private:
  std::vector<Eigen::MatrixXd> snapshots_;
  int window_ = 1;
  double min_positive_ = 1.0;
};

namespace detail {

inline void check_edges(int n, const std::vector<Edge>& part) {
  for (const auto& [from, to] : part) {
    if (from < 0 || from >= n || to < 0 || to >= n)
      throw UsageError("edge endpoint out of range");
  }
}

// Symmetrized neighbor sets: j is a neighbor of i if either direction is
// present in the part. Self loops are implicit and not listed.
inline std::vector<std::set<int>> undirected_neighbors(int n, const std::vector<Edge>& part) {
  std::vector<std::set<int>> nbr(static_cast<std::size_t>(n));
  for (const auto& [from, to] : part) {
    if (from == to) continue;
    nbr[static_cast<std::size_t>(from)].insert(to);
    nbr[static_cast<std::size_t>(to)].insert(from);
  }
  return nbr;
}

// Metropolis rule on the symmetrized links: w_ij = 1 / (1 + max(deg_i, deg_j)),
// diagonal takes the remainder. Doubly stochastic for any link set.
inline Eigen::MatrixXd metropolis_matrix(int n, const std::vector<Edge>& part) {
  const auto nbr = undirected_neighbors(n, part);
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    double off = 0.0;
    for (int j : nbr[static_cast<std::size_t>(i)]) {
      const double deg_i = static_cast<double>(nbr[static_cast<std::size_t>(i)].size());
      const double deg_j = static_cast<double>(nbr[static_cast<std::size_t>(j)].size());
      w(i, j) = 1.0 / (1.0 + std::max(deg_i, deg_j));
      off += w(i, j);
    }
    w(i, i) = 1.0 - off;
  }
  return w;
}

}  // namespace detail

// Builds one mixing matrix per part (edge set) and cycles through them.
// Metropolis and LazyUniform symmetrize the links and are doubly stochastic
// by construction; LazyUniform is (I + Metropolis) / 2, which on regular
// graphs equals uniform averaging over the closed neighborhood with a 1/2
// self-weight floor. InDegree is the row-normalized rule
// w_ij = 1 / |in-neighbors of i, self included|; it follows link direction
// and is generally not doubly stochastic, which validate() reports.
//
// The connectivity window defaults to the period; pass a positive window to
// override.
inline GraphSequence periodic_topology(int n, const std::vector<std::vector<Edge>>& parts,
                                       Weighting weighting, int window = 0) {
  if (n < 1) throw UsageError("node count must be >= 1");
  if (parts.empty()) throw UsageError("need at least one edge set");
  std::vector<Eigen::MatrixXd> snapshots;
  snapshots.reserve(parts.size());
  for (const auto& part : parts) {
    detail::check_edges(n, part);
    switch (weighting) {
      case Weighting::kMetropolis:
        snapshots.push_back(detail::metropolis_matrix(n, part));
        break;
      case Weighting::kLazyUniform: {
        Eigen::MatrixXd m = detail::metropolis_matrix(n, part);
        snapshots.push_back(0.5 * (Eigen::MatrixXd::Identity(n, n) + m));
        break;
      }
      case Weighting::kInDegree: {
        Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
        for (int i = 0; i < n; ++i) {
          std::set<int> sources{i};
          for (const auto& [from, to] : part)
            if (to == i) sources.insert(from);
          const double share = 1.0 / static_cast<double>(sources.size());
          for (int j : sources) w(i, j) = share;
        }
        snapshots.push_back(w);
        break;
      }
    }
  }
  const int effective_window = window > 0 ? window : static_cast<int>(parts.size());
  return GraphSequence(std::move(snapshots), effective_window);
}

// Ten nodes, period four: a directed cycle, the reversed cycle, and two
// alternating perfect matchings. The union over any full period is strongly
// connected, and each matching pair alone already closes the ring.
inline GraphSequence ten_node_cyclic_topology(Weighting weighting = Weighting::kMetropolis) {
  constexpr int n = 10;
  std::vector<std::vector<Edge>> parts(4);
  for (int i = 0; i < n; ++i) {
    parts[0].push_back({i, (i + 1) % n});
    parts[1].push_back({i, (i + n - 1) % n});
  }
  for (int i = 0; i < n; i += 2) {
    parts[2].push_back({i, i + 1});
    parts[2].push_back({i + 1, i});
  }
  for (int i = 1; i < n; i += 2) {
    const int j = (i + 1) % n;
    parts[3].push_back({i, j});
    parts[3].push_back({j, i});
  }
  return periodic_topology(n, parts, weighting);
}

}  // namespace dobo
