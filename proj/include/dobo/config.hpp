#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dobo/errors.hpp"
#include "dobo/geometry.hpp"
#include "dobo/graph.hpp"
#include "dobo/losses.hpp"
#include "dobo/metrics.hpp"
#include "dobo/optimizer.hpp"
#include "dobo/smoothing.hpp"

namespace dobo {

enum class ProblemKind { kTargetTracking, kCubicCosine };

inline const char* problem_kind_name(ProblemKind kind) {
  return kind == ProblemKind::kTargetTracking ? "target_tracking" : "cubic_cosine";
}

// Fully validated experiment description. Parsed from a single declarative
// JSON document; `echo` keeps the original so outputs can reproduce it.
struct ExperimentConfig {
  std::string name = "experiment";

  ProblemKind problem = ProblemKind::kTargetTracking;
  std::uint64_t noise_seed = 1;
  double noise_std = 1.0;                 // cubic_cosine only
  std::vector<Eigen::Vector2d> sensors;   // target_tracking only; empty = builtin ten

  SetKind set_kind = SetKind::kBox;
  int dimension = 2;
  double radius = 1.0;                    // balls only
  Eigen::VectorXd lower, upper;           // box only

  std::string graph_builtin;              // empty when parts are explicit
  int nodes = 0;
  std::vector<std::vector<Edge>> parts;
  Weighting weighting = Weighting::kMetropolis;
  int window = 0;                         // 0 = period

  std::vector<EstimatorKind> estimators;
  Schedule alpha = Schedule::constant(1e-2);
  Schedule mu = Schedule::constant(1e-2);
  std::int64_t horizon = 1;
  int replicates = 20;
  std::uint64_t base_seed = 1;
  int tracked_agent = 1;
  RegretKind regret = RegretKind::kConvexDynamic;
  InitKind init = InitKind::kProjectedOrigin;
  Eigen::VectorXd init_point;             // kGivenPoint only
  bool variation_summary = true;

  nlohmann::json echo;

  int agents() const { return nodes; }

  ConstraintSet make_set() const {
    switch (set_kind) {
      case SetKind::kBox: return ConstraintSet::box(lower, upper);
      case SetKind::kL1Ball: return ConstraintSet::l1_ball(dimension, radius);
      case SetKind::kL2Ball: return ConstraintSet::l2_ball(dimension, radius);
    }
    throw UsageError("unknown set kind");
  }

  GraphSequence make_graph() const {
    if (graph_builtin == "ten_node_cyclic") return ten_node_cyclic_topology(weighting);
    return periodic_topology(nodes, parts, weighting, window);
  }

  std::unique_ptr<LossProcess> make_loss() const {
    switch (problem) {
      case ProblemKind::kTargetTracking: {
        auto s = sensors.empty() ? TargetTrackingLoss::default_sensors() : sensors;
        return std::make_unique<TargetTrackingLoss>(std::move(s), noise_seed,
                                                    static_cast<int>(horizon));
      }
      case ProblemKind::kCubicCosine:
        return std::make_unique<CubicCosineLoss>(nodes, noise_seed, noise_std);
    }
    throw UsageError("unknown problem kind");
  }

  AlgorithmConfig algorithm_for(EstimatorKind kind) const {
    AlgorithmConfig a;
    a.estimator = kind;
    a.alpha = alpha;
    a.mu = mu;
    a.horizon = horizon;
    a.tracked_agent = tracked_agent;
    a.init.kind = init;
    a.init.point = init_point;
    a.regret = regret;
    a.minimizer = MinimizerMethod::kAuto;
    return a;
  }
};

namespace detail {

class ConfigReader {
 public:
  explicit ConfigReader(const nlohmann::json& root) : root_(root) {}

  std::vector<std::string>& issues() { return issues_; }

  void fail(const std::string& message) { issues_.push_back(message); }

  const nlohmann::json* child(const nlohmann::json& obj, const std::string& where,
                              const char* key, bool required) {
    if (!obj.is_object()) {
      fail(where + ": expected an object");
      return nullptr;
    }
    if (!obj.contains(key)) {
      if (required) fail(where + ": missing key '" + key + "'");
      return nullptr;
    }
    return &obj.at(key);
  }

  template <typename T>
  std::optional<T> get(const nlohmann::json& obj, const std::string& where,
                       const char* key, bool required) {
    const nlohmann::json* node = child(obj, where, key, required);
    if (node == nullptr) return std::nullopt;
    try {
      return node->get<T>();
    } catch (const nlohmann::json::exception&) {
      fail(where + ": key '" + key + "' has the wrong type");
      return std::nullopt;
    }
  }

  const nlohmann::json& root() const { return root_; }

 private:
  const nlohmann::json& root_;
  std::vector<std::string> issues_;
};

inline void parse_problem(ConfigReader& r, const nlohmann::json& node, ExperimentConfig& cfg) {
  const auto kind = r.get<std::string>(node, "problem", "kind", true);
  if (!kind) return;
  if (*kind == "target_tracking") {
    cfg.problem = ProblemKind::kTargetTracking;
  } else if (*kind == "cubic_cosine") {
    cfg.problem = ProblemKind::kCubicCosine;
  } else {
    r.fail("problem.kind: unknown value '" + *kind + "'");
    return;
  }
  if (auto seed = r.get<std::uint64_t>(node, "problem", "noise_seed", false)) cfg.noise_seed = *seed;
  if (auto std_dev = r.get<double>(node, "problem", "noise_std", false)) {
    if (cfg.problem != ProblemKind::kCubicCosine)
      r.fail("problem.noise_std: only meaningful for cubic_cosine");
    else if (*std_dev < 0.0)
      r.fail("problem.noise_std: must be >= 0");
    else
      cfg.noise_std = *std_dev;
  }
  if (node.contains("sensors")) {
    if (cfg.problem != ProblemKind::kTargetTracking) {
      r.fail("problem.sensors: only meaningful for target_tracking");
    } else if (auto sensors = r.get<std::vector<std::vector<double>>>(node, "problem", "sensors", false)) {
      for (const auto& s : *sensors) {
        if (s.size() != 2) {
          r.fail("problem.sensors: each sensor needs exactly two coordinates");
          return;
        }
        cfg.sensors.emplace_back(s[0], s[1]);
      }
      if (cfg.sensors.empty()) r.fail("problem.sensors: must be non-empty when given");
    }
  }
}

inline void parse_constraint(ConfigReader& r, const nlohmann::json& node, ExperimentConfig& cfg) {
  const auto kind = r.get<std::string>(node, "constraint", "kind", true);
  if (!kind) return;
  if (*kind == "box") {
    cfg.set_kind = SetKind::kBox;
    if (node.contains("half_width")) {
      const auto half = r.get<double>(node, "constraint", "half_width", true);
      const auto dim = r.get<int>(node, "constraint", "dimension", true);
      if (half && dim) {
        if (*half <= 0.0 || *dim < 1) {
          r.fail("constraint: half_width must be > 0 and dimension >= 1");
          return;
        }
        cfg.dimension = *dim;
        cfg.lower = Eigen::VectorXd::Constant(*dim, -*half);
        cfg.upper = Eigen::VectorXd::Constant(*dim, *half);
      }
      return;
    }
    const auto lower = r.get<std::vector<double>>(node, "constraint", "lower", true);
    const auto upper = r.get<std::vector<double>>(node, "constraint", "upper", true);
    if (lower && upper) {
      if (lower->empty() || lower->size() != upper->size()) {
        r.fail("constraint: lower/upper must be non-empty arrays of equal length");
        return;
      }
      cfg.dimension = static_cast<int>(lower->size());
      cfg.lower = Eigen::Map<const Eigen::VectorXd>(lower->data(), static_cast<Eigen::Index>(lower->size()));
      cfg.upper = Eigen::Map<const Eigen::VectorXd>(upper->data(), static_cast<Eigen::Index>(upper->size()));
      if ((cfg.lower.array() > cfg.upper.array()).any())
        r.fail("constraint: lower bound exceeds upper bound");
    }
    return;
  }
  if (*kind == "l1_ball" || *kind == "l2_ball") {
    cfg.set_kind = *kind == "l1_ball" ? SetKind::kL1Ball : SetKind::kL2Ball;
    const auto dim = r.get<int>(node, "constraint", "dimension", true);
    const auto radius = r.get<double>(node, "constraint", "radius", true);
    if (dim) {
      if (*dim < 1) r.fail("constraint.dimension: must be >= 1");
      else cfg.dimension = *dim;
    }
    if (radius) {
      if (*radius <= 0.0) r.fail("constraint.radius: must be > 0");
      else cfg.radius = *radius;
    }
    return;
  }
  r.fail("constraint.kind: unknown value '" + *kind + "'");
}

inline void parse_graph(ConfigReader& r, const nlohmann::json& node, ExperimentConfig& cfg) {
  if (auto weighting = r.get<std::string>(node, "graph", "weighting", false)) {
    if (*weighting == "metropolis") cfg.weighting = Weighting::kMetropolis;
    else if (*weighting == "lazy_uniform") cfg.weighting = Weighting::kLazyUniform;
    else if (*weighting == "in_degree") cfg.weighting = Weighting::kInDegree;
    else r.fail("graph.weighting: unknown value '" + *weighting + "'");
  }
  if (node.contains("builtin")) {
    const auto builtin = r.get<std::string>(node, "graph", "builtin", true);
    if (!builtin) return;
    if (*builtin != "ten_node_cyclic") {
      r.fail("graph.builtin: unknown value '" + *builtin + "'");
      return;
    }
    cfg.graph_builtin = *builtin;
    cfg.nodes = 10;
    return;
  }
  const auto nodes = r.get<int>(node, "graph", "nodes", true);
  const auto parts = r.child(node, "graph", "parts", true);
  if (nodes) {
    if (*nodes < 1) r.fail("graph.nodes: must be >= 1");
    else cfg.nodes = *nodes;
  }
  if (parts != nullptr) {
    if (!parts->is_array() || parts->empty()) {
      r.fail("graph.parts: must be a non-empty array of edge lists");
      return;
    }
    for (const auto& part : *parts) {
      std::vector<Edge> edges;
      if (!part.is_array()) {
        r.fail("graph.parts: each part must be an array of [from, to] pairs");
        return;
      }
      for (const auto& e : part) {
        if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer()) {
          r.fail("graph.parts: each edge must be an integer pair [from, to]");
          return;
        }
        edges.emplace_back(e[0].get<int>(), e[1].get<int>());
      }
      cfg.parts.push_back(std::move(edges));
    }
  }
  if (auto window = r.get<int>(node, "graph", "window", false)) {
    if (*window < 1) r.fail("graph.window: must be >= 1");
    else cfg.window = *window;
  }
}

inline std::optional<Schedule> parse_schedule(ConfigReader& r, const nlohmann::json& node,
                                              const std::string& where) {
  const auto kind = r.get<std::string>(node, where, "kind", true);
  if (!kind) return std::nullopt;
  try {
    if (*kind == "constant") {
      const auto value = r.get<double>(node, where, "value", true);
      if (!value) return std::nullopt;
      return Schedule::constant(*value);
    }
    if (*kind == "power") {
      const auto scale = r.get<double>(node, where, "scale", true);
      const auto exponent = r.get<double>(node, where, "exponent", true);
      const double offset = r.get<double>(node, where, "offset", false).value_or(0.0);
      if (!scale || !exponent) return std::nullopt;
      return Schedule::power(*scale, *exponent, offset);
    }
  } catch (const UsageError& e) {
    r.fail(where + ": " + e.what());
    return std::nullopt;
  }
  if (*kind == "theorem") return std::nullopt;  // resolved by the caller
  r.fail(where + ".kind: unknown value '" + *kind + "'");
  return std::nullopt;
}

// Theorem-style step sizes alpha_k = 1 / (2 M k^a). M comes from the mixing
// constants of the configured graph and a caller-supplied Lipschitz constant,
// or from an explicit override.
inline std::optional<Schedule> resolve_theorem_alpha(ConfigReader& r, const nlohmann::json& node,
                                                     const ExperimentConfig& cfg) {
  const auto exponent = r.get<double>(node, "alpha", "exponent", true);
  if (!exponent) return std::nullopt;
  if (!(*exponent > 0.0) || !(*exponent < 1.0)) {
    r.fail("alpha.exponent: theorem mode needs 0 < exponent < 1");
    return std::nullopt;
  }
  double m = 0.0;
  if (auto override_m = r.get<double>(node, "alpha", "m_override", false)) {
    if (!(*override_m > 0.0)) {
      r.fail("alpha.m_override: must be > 0");
      return std::nullopt;
    }
    m = *override_m;
  } else {
    const auto l0 = r.get<double>(node, "alpha", "lipschitz", true);
    if (!l0) return std::nullopt;
    const std::string variant = r.get<std::string>(node, "alpha", "variant", false).value_or("statement");
    if (variant != "statement" && variant != "appendix") {
      r.fail("alpha.variant: expected 'statement' or 'appendix'");
      return std::nullopt;
    }
    try {
      const MixingConstants mixing = cfg.make_graph().mixing_constants();
      m = variant == "statement"
              ? theorem_step_scale(cfg.dimension, cfg.nodes, mixing, *l0)
              : appendix_step_scale(cfg.dimension, cfg.nodes, mixing, *l0);
    } catch (const std::exception& e) {
      r.fail(std::string{"alpha: could not derive step constant: "} + e.what());
      return std::nullopt;
    }
  }
  return Schedule::power(1.0 / (2.0 * m), *exponent, 0.0);
}

}  // namespace detail

inline ExperimentConfig parse_config(const nlohmann::json& root) {
  detail::ConfigReader r(root);
  ExperimentConfig cfg;
  cfg.echo = root;

  if (!root.is_object()) throw ConfigError("top level must be a JSON object");

  if (auto name = r.get<std::string>(root, "config", "name", false)) cfg.name = *name;

  const nlohmann::json* problem = r.child(root, "config", "problem", true);
  if (problem != nullptr) detail::parse_problem(r, *problem, cfg);

  const nlohmann::json* constraint = r.child(root, "config", "constraint", true);
  if (constraint != nullptr) detail::parse_constraint(r, *constraint, cfg);

  const nlohmann::json* graph = r.child(root, "config", "graph", true);
  if (graph != nullptr) detail::parse_graph(r, *graph, cfg);

  if (const auto estimators = r.get<std::vector<std::string>>(root, "config", "estimators", true)) {
    for (const auto& name : *estimators) {
      const auto kind = parse_estimator(name);
      if (!kind) {
        r.fail("estimators: unknown estimator '" + name + "'");
        continue;
      }
      for (EstimatorKind seen : cfg.estimators)
        if (seen == *kind) r.fail("estimators: duplicate entry '" + name + "'");
      cfg.estimators.push_back(*kind);
    }
    if (cfg.estimators.empty()) r.fail("estimators: need at least one estimator");
  }

  if (auto horizon = r.get<std::int64_t>(root, "config", "horizon", true)) {
    if (*horizon < 1) r.fail("horizon: must be >= 1");
    else cfg.horizon = *horizon;
  }
  if (auto replicates = r.get<int>(root, "config", "replicates", false)) {
    if (*replicates < 1) r.fail("replicates: must be >= 1");
    else cfg.replicates = *replicates;
  }
  if (auto seed = r.get<std::uint64_t>(root, "config", "base_seed", false)) cfg.base_seed = *seed;
  if (auto tracked = r.get<int>(root, "config", "tracked_agent", false)) cfg.tracked_agent = *tracked;

  if (auto metric = r.get<std::string>(root, "config", "metric", true)) {
    if (*metric == "convex") cfg.regret = RegretKind::kConvexDynamic;
    else if (*metric == "nonconvex") cfg.regret = RegretKind::kNonconvexDynamic;
    else r.fail("metric: expected 'convex' or 'nonconvex'");
  }

  if (const nlohmann::json* init = r.child(root, "config", "init", false)) {
    if (auto kind = r.get<std::string>(*init, "init", "kind", true)) {
      if (*kind == "projected_origin") cfg.init = InitKind::kProjectedOrigin;
      else if (*kind == "uniform") cfg.init = InitKind::kUniformInSet;
      else if (*kind == "point") {
        cfg.init = InitKind::kGivenPoint;
        if (auto point = r.get<std::vector<double>>(*init, "init", "point", true))
          cfg.init_point = Eigen::Map<const Eigen::VectorXd>(point->data(),
                                                             static_cast<Eigen::Index>(point->size()));
      } else {
        r.fail("init.kind: unknown value '" + *kind + "'");
      }
    }
  }

  if (auto variation = r.get<bool>(root, "config", "variation_summary", false))
    cfg.variation_summary = *variation;

  // Schedules last: theorem-mode alpha needs the graph.
  const nlohmann::json* alpha = r.child(root, "config", "alpha", true);
  const nlohmann::json* mu = r.child(root, "config", "mu", true);
  if (mu != nullptr)
    if (auto s = detail::parse_schedule(r, *mu, "mu")) cfg.mu = *s;
  bool theorem_mode = false;
  if (alpha != nullptr) {
    const auto kind = alpha->contains("kind") && alpha->at("kind").is_string()
                          ? alpha->at("kind").get<std::string>()
                          : std::string{};
    if (kind == "theorem") {
      theorem_mode = true;
      if (r.issues().empty()) {
        if (auto s = detail::resolve_theorem_alpha(r, *alpha, cfg)) cfg.alpha = *s;
      }
    } else if (auto s = detail::parse_schedule(r, *alpha, "alpha")) {
      cfg.alpha = *s;
    }
  }
  if (theorem_mode) {
    // The analysis assumes alpha_k ~ k^-a, mu_k ~ k^-b with 0 < b <= a < 1.
    if (cfg.mu.kind() != Schedule::Kind::kPower || !(cfg.mu.exponent() > 0.0) ||
        cfg.mu.exponent() > cfg.alpha.exponent() || !(cfg.mu.exponent() < 1.0))
      r.fail("mu: theorem mode needs a power schedule with 0 < exponent <= alpha.exponent < 1");
  }

  // Cross-field checks once the pieces are known.
  if (r.issues().empty()) {
    if (cfg.problem == ProblemKind::kTargetTracking) {
      const int sensor_count = cfg.sensors.empty()
                                   ? static_cast<int>(TargetTrackingLoss::default_sensors().size())
                                   : static_cast<int>(cfg.sensors.size());
      if (cfg.nodes != sensor_count)
        r.fail("graph: node count " + std::to_string(cfg.nodes) +
               " must match the sensor count " + std::to_string(sensor_count));
      if (cfg.dimension != 2) r.fail("constraint: target_tracking is two-dimensional");
    }
    if (cfg.problem == ProblemKind::kCubicCosine && cfg.dimension != 2)
      r.fail("constraint: cubic_cosine is two-dimensional");
    if (cfg.tracked_agent < 1 || cfg.tracked_agent > cfg.nodes)
      r.fail("tracked_agent: must lie in [1, node count]");
    if (cfg.init == InitKind::kGivenPoint && cfg.init_point.size() != cfg.dimension)
      r.fail("init.point: dimension mismatch");
    try {
      cfg.make_set();
      const GraphSequence g = cfg.make_graph();
      if (g.size() != cfg.nodes) r.fail("graph: inconsistent node count");
    } catch (const std::exception& e) {
      r.fail(std::string{"config: "} + e.what());
    }
  }

  if (!r.issues().empty()) throw ConfigError(r.issues());
  return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  nlohmann::json root;
  try {
    in >> root;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string{"config is not valid JSON: "} + e.what());
  }
  return parse_config(root);
}

// Built-in experiment presets, also shipped as files under configs/.
struct PresetInfo {
  const char* name;
  const char* description;
};

inline const std::vector<PresetInfo>& preset_list() {
  static const std::vector<PresetInfo> presets{
      {"fig2", "convex target tracking on the ten-node cyclic graph, all four estimators"},
      {"fig3", "nonconvex cubic-cosine family on the ten-node cyclic graph, all four estimators"},
  };
  return presets;
}

inline nlohmann::json preset_config(const std::string& name) {
  using nlohmann::json;
  if (name == "fig2") {
    return json{
        {"name", "fig2"},
        {"problem", {{"kind", "target_tracking"}, {"noise_seed", 2027}}},
        {"constraint", {{"kind", "l1_ball"}, {"dimension", 2}, {"radius", 3.0}}},
        {"graph", {{"builtin", "ten_node_cyclic"}, {"weighting", "metropolis"}}},
        {"estimators", {"one_point", "one_point_residual", "two_point", "full_gradient"}},
        {"alpha", {{"kind", "power"}, {"scale", 0.002}, {"exponent", 0.5}, {"offset", 1.0}}},
        {"mu", {{"kind", "power"}, {"scale", 1.0}, {"exponent", 0.5}, {"offset", 1.0}}},
        {"horizon", 2000},
        {"replicates", 20},
        {"base_seed", 42},
        {"tracked_agent", 1},
        {"metric", "convex"},
        {"init", {{"kind", "projected_origin"}}},
    };
  }
  if (name == "fig3") {
    return json{
        {"name", "fig3"},
        {"problem", {{"kind", "cubic_cosine"}, {"noise_seed", 4049}, {"noise_std", 1.0}}},
        {"constraint", {{"kind", "box"}, {"half_width", 3.0}, {"dimension", 2}}},
        {"graph", {{"builtin", "ten_node_cyclic"}, {"weighting", "metropolis"}}},
        {"estimators", {"one_point", "one_point_residual", "two_point", "full_gradient"}},
        {"alpha", {{"kind", "constant"}, {"value", 0.005}}},
        {"mu", {{"kind", "constant"}, {"value", 0.001}}},
        {"horizon", 2000},
        {"replicates", 20},
        {"base_seed", 42},
        {"tracked_agent", 1},
        {"metric", "nonconvex"},
        {"init", {{"kind", "uniform"}}},
    };
  }
  throw ConfigError("unknown preset: " + name);
}

}  // namespace dobo
