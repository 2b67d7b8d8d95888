#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dobo/config.hpp"
#include "dobo/experiment.hpp"

namespace fs = std::filesystem;
using dobo::ConfigError;
using dobo::ExperimentConfig;
using nlohmann::json;

namespace {

json minimal_config() {
  return json{
      {"problem", {{"kind", "cubic_cosine"}, {"noise_seed", 7}, {"noise_std", 0.5}}},
      {"constraint", {{"kind", "box"}, {"half_width", 3.0}, {"dimension", 2}}},
      {"graph", {{"nodes", 2}, {"parts", {{{0, 1}, {1, 0}}}}}},
      {"estimators", {"two_point"}},
      {"alpha", {{"kind", "constant"}, {"value", 0.01}}},
      {"mu", {{"kind", "constant"}, {"value", 0.001}}},
      {"horizon", 5},
      {"metric", "nonconvex"},
  };
}

std::vector<std::string> issues_of(const json& root) {
  try {
    dobo::parse_config(root);
  } catch (const ConfigError& e) {
    return e.issues();
  }
  return {};
}

bool mentions(const std::vector<std::string>& issues, const std::string& needle) {
  for (const auto& issue : issues)
    if (issue.find(needle) != std::string::npos) return true;
  return false;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

std::size_t line_count(const std::string& text) {
  std::size_t lines = 0;
  for (char c : text)
    if (c == '\n') ++lines;
  return lines;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("minimal config parses with defaults") {
  const ExperimentConfig cfg = dobo::parse_config(minimal_config());
  CHECK(cfg.name == "experiment");
  CHECK(cfg.problem == dobo::ProblemKind::kCubicCosine);
  CHECK(cfg.noise_seed == 7);
  CHECK(cfg.noise_std == 0.5);
  CHECK(cfg.set_kind == dobo::SetKind::kBox);
  CHECK(cfg.dimension == 2);
  CHECK((cfg.lower - Eigen::VectorXd::Constant(2, -3.0)).norm() == 0.0);
  CHECK((cfg.upper - Eigen::VectorXd::Constant(2, 3.0)).norm() == 0.0);
  CHECK(cfg.nodes == 2);
  CHECK(cfg.weighting == dobo::Weighting::kMetropolis);
  CHECK(cfg.estimators == std::vector<dobo::EstimatorKind>{dobo::EstimatorKind::kTwoPoint});
  CHECK(cfg.horizon == 5);
  CHECK(cfg.replicates == 20);
  CHECK(cfg.base_seed == 1);
  CHECK(cfg.tracked_agent == 1);
  CHECK(cfg.regret == dobo::RegretKind::kNonconvexDynamic);
  CHECK(cfg.init == dobo::InitKind::kProjectedOrigin);
  CHECK(cfg.variation_summary);
  CHECK(cfg.echo == minimal_config());

  const auto graph = cfg.make_graph();
  CHECK(graph.size() == 2);
  CHECK(graph.period() == 1);
}

TEST_CASE("invalid configs aggregate every issue") {
  const fs::path bad = fs::path(DOBO_REPO_DIR) / "tests" / "data" / "bad_config.json";
  try {
    dobo::load_config(bad);
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.issues().size() >= 3);
    CHECK(mentions(e.issues(), "problem.kind"));
    CHECK(mentions(e.issues(), "radius"));
    CHECK(std::string(e.what()).find("problem.kind") != std::string::npos);
  }
}

TEST_CASE("field validation failures") {
  auto base = minimal_config();

  auto missing_problem = base;
  missing_problem.erase("problem");
  CHECK(mentions(issues_of(missing_problem), "missing key 'problem'"));

  auto unknown_estimator = base;
  unknown_estimator["estimators"] = {"three_point"};
  CHECK(mentions(issues_of(unknown_estimator), "unknown estimator"));

  auto duplicate_estimator = base;
  duplicate_estimator["estimators"] = {"two_point", "two_point"};
  CHECK(mentions(issues_of(duplicate_estimator), "duplicate"));

  auto zero_horizon = base;
  zero_horizon["horizon"] = 0;
  CHECK(mentions(issues_of(zero_horizon), "horizon"));

  auto bad_tracked = base;
  bad_tracked["tracked_agent"] = 5;
  CHECK(mentions(issues_of(bad_tracked), "tracked_agent"));

  auto bad_radius = base;
  bad_radius["constraint"] = {{"kind", "l1_ball"}, {"dimension", 2}, {"radius", -1.0}};
  CHECK(mentions(issues_of(bad_radius), "radius"));

  auto inverted_box = base;
  inverted_box["constraint"] = {{"kind", "box"}, {"lower", {1.0, 1.0}}, {"upper", {0.0, 0.0}}};
  CHECK(mentions(issues_of(inverted_box), "lower bound exceeds"));

  auto sensors_on_cubic = base;
  sensors_on_cubic["problem"]["sensors"] = {{1.0, 2.0}};
  CHECK(mentions(issues_of(sensors_on_cubic), "sensors"));

  auto negative_noise = base;
  negative_noise["problem"]["noise_std"] = -0.5;
  CHECK(mentions(issues_of(negative_noise), "noise_std"));

  auto noise_on_tracking = base;
  noise_on_tracking["problem"] = {{"kind", "target_tracking"}, {"noise_std", 0.5}};
  CHECK(mentions(issues_of(noise_on_tracking), "only meaningful for cubic_cosine"));

  auto bad_init = base;
  bad_init["init"] = {{"kind", "point"}, {"point", {1.0, 2.0, 3.0}}};
  CHECK(mentions(issues_of(bad_init), "init.point"));

  auto wrong_node_count = base;
  wrong_node_count["problem"] = {{"kind", "target_tracking"}};
  wrong_node_count["metric"] = "convex";
  CHECK(mentions(issues_of(wrong_node_count), "sensor count"));

  CHECK_THROWS_AS(dobo::preset_config("nope"), ConfigError);
}

TEST_CASE("theorem-mode step sizes") {
  auto base = minimal_config();
  base["mu"] = {{"kind", "power"}, {"scale", 1.0}, {"exponent", 0.5}};

  auto with_override = base;
  with_override["alpha"] = {{"kind", "theorem"}, {"exponent", 0.75}, {"m_override", 100.0}};
  const ExperimentConfig cfg = dobo::parse_config(with_override);
  CHECK(cfg.alpha.kind() == dobo::Schedule::Kind::kPower);
  CHECK(cfg.alpha.scale() == Catch::Approx(0.005).epsilon(1e-15));
  CHECK(cfg.alpha.exponent() == 0.75);
  CHECK(cfg.alpha.value(1) == Catch::Approx(0.005));

  // the scale derived from a Lipschitz constant matches a direct computation
  auto derived = base;
  derived["graph"] = {{"builtin", "ten_node_cyclic"}};
  derived["tracked_agent"] = 1;
  derived["alpha"] = {{"kind", "theorem"}, {"exponent", 0.6}, {"lipschitz", 10.0}};
  const ExperimentConfig dcfg = dobo::parse_config(derived);
  const auto mixing = dobo::ten_node_cyclic_topology().mixing_constants();
  const double m = dobo::theorem_step_scale(2, 10, mixing, 10.0);
  CHECK(dcfg.alpha.scale() == Catch::Approx(1.0 / (2.0 * m)).epsilon(1e-14));

  auto appendix = derived;
  appendix["alpha"]["variant"] = "appendix";
  const ExperimentConfig acfg = dobo::parse_config(appendix);
  const double m2 = dobo::appendix_step_scale(2, 10, mixing, 10.0);
  CHECK(acfg.alpha.scale() == Catch::Approx(1.0 / (2.0 * m2)).epsilon(1e-14));

  // exponent must sit strictly inside (0, 1)
  auto bad_exponent = with_override;
  bad_exponent["alpha"]["exponent"] = 1.0;
  CHECK(mentions(issues_of(bad_exponent), "alpha.exponent"));

  // smoothing must shrink no faster than the step size
  auto constant_mu = with_override;
  constant_mu["mu"] = {{"kind", "constant"}, {"value", 0.01}};
  CHECK(mentions(issues_of(constant_mu), "mu: theorem mode"));

  auto fast_mu = with_override;
  fast_mu["mu"] = {{"kind", "power"}, {"scale", 1.0}, {"exponent", 0.9}};
  CHECK(mentions(issues_of(fast_mu), "mu: theorem mode"));
}

TEST_CASE("presets parse to the documented experiments") {
  CHECK(dobo::preset_list().size() == 2);
  CHECK(std::string(dobo::preset_list()[0].name) == "fig2");
  CHECK(std::string(dobo::preset_list()[1].name) == "fig3");

  const ExperimentConfig fig2 = dobo::parse_config(dobo::preset_config("fig2"));
  CHECK(fig2.name == "fig2");
  CHECK(fig2.problem == dobo::ProblemKind::kTargetTracking);
  CHECK(fig2.noise_seed == 2027);
  CHECK(fig2.set_kind == dobo::SetKind::kL1Ball);
  CHECK(fig2.radius == 3.0);
  CHECK(fig2.dimension == 2);
  CHECK(fig2.graph_builtin == "ten_node_cyclic");
  CHECK(fig2.nodes == 10);
  CHECK(fig2.weighting == dobo::Weighting::kMetropolis);
  const std::vector<dobo::EstimatorKind> all{
      dobo::EstimatorKind::kOnePoint, dobo::EstimatorKind::kOnePointResidual,
      dobo::EstimatorKind::kTwoPoint, dobo::EstimatorKind::kFullGradient};
  CHECK(fig2.estimators == all);
  CHECK(fig2.alpha.kind() == dobo::Schedule::Kind::kPower);
  CHECK(fig2.alpha.value(3) == Catch::Approx(0.001).epsilon(1e-15));  // 0.002 / sqrt(4)
  CHECK(fig2.mu.value(3) == Catch::Approx(0.5).epsilon(1e-15));      // 1 / sqrt(4)
  CHECK(fig2.horizon == 2000);
  CHECK(fig2.replicates == 20);
  CHECK(fig2.base_seed == 42);
  CHECK(fig2.tracked_agent == 1);
  CHECK(fig2.regret == dobo::RegretKind::kConvexDynamic);
  CHECK(fig2.init == dobo::InitKind::kProjectedOrigin);

  const ExperimentConfig fig3 = dobo::parse_config(dobo::preset_config("fig3"));
  CHECK(fig3.name == "fig3");
  CHECK(fig3.problem == dobo::ProblemKind::kCubicCosine);
  CHECK(fig3.noise_seed == 4049);
  CHECK(fig3.noise_std == 1.0);
  CHECK(fig3.set_kind == dobo::SetKind::kBox);
  CHECK((fig3.lower - Eigen::VectorXd::Constant(2, -3.0)).norm() == 0.0);
  CHECK((fig3.upper - Eigen::VectorXd::Constant(2, 3.0)).norm() == 0.0);
  CHECK(fig3.estimators == all);
  CHECK(fig3.alpha.kind() == dobo::Schedule::Kind::kConstant);
  CHECK(fig3.alpha.value(17) == 0.005);
  CHECK(fig3.mu.value(17) == 0.001);
  CHECK(fig3.regret == dobo::RegretKind::kNonconvexDynamic);
  CHECK(fig3.init == dobo::InitKind::kUniformInSet);

  // shipped preset files stay in sync with the builtins
  for (const char* name : {"fig2", "fig3"}) {
    const fs::path file = fs::path(DOBO_REPO_DIR) / "configs" / (std::string(name) + ".json");
    const json on_disk = json::parse(slurp(file));
    CHECK(on_disk == dobo::preset_config(name));
  }
}

TEST_CASE("experiment runner writes the documented files") {
  auto doc = minimal_config();
  doc["name"] = "tiny";
  doc["estimators"] = {"two_point", "full_gradient"};
  doc["replicates"] = 2;
  doc["base_seed"] = 9;
  const ExperimentConfig cfg = dobo::parse_config(doc);

  const fs::path dir = fresh_dir("dobo_harness_tiny");
  const dobo::ExperimentResult result = dobo::run_experiment(cfg, dir);
  CHECK(result.all_replicates_completed);
  CHECK(result.summary_path == dir / "summary.json");

  for (const char* stem : {"two_point_rep0", "two_point_rep1", "full_gradient_rep0",
                           "full_gradient_rep1", "two_point_mean", "full_gradient_mean"}) {
    CHECK(fs::exists(dir / (std::string(stem) + ".csv")));
  }

  const std::string rep = slurp(dir / "two_point_rep0.csv");
  CHECK(rep.rfind("k,agent,x0,x1,loss,regret_increment,cum_regret,consensus_error,fn_queries\n",
                  0) == 0);
  CHECK(line_count(rep) == 1 + 5 * 2);  // header + horizon * agents

  const std::string mean = slurp(dir / "two_point_mean.csv");
  CHECK(mean.rfind("k,mean_cum_regret,se_cum_regret,mean_consensus_error\n", 0) == 0);
  CHECK(line_count(mean) == 1 + 5);

  const json summary = json::parse(slurp(dir / "summary.json"));
  CHECK(summary == result.summary);
  CHECK(summary["name"] == "tiny");
  CHECK(summary["horizon"] == 5);
  CHECK(summary["replicates"] == 2);
  CHECK(summary["metric"] == "nonconvex");
  CHECK(summary["config"] == doc);
  for (const char* estimator : {"two_point", "full_gradient"}) {
    const json& block = summary["estimators"][estimator];
    CHECK(block["replicates_completed"] == 2);
    CHECK(block["failed_replicates"].empty());
    CHECK(block["errors"].empty());
    CHECK(block["final_mean_cumulative_regret"].is_number());
    CHECK(block["final_standard_error"].is_number());
  }
  CHECK(summary["variation"]["theta_per_agent"].size() == 2);
  CHECK(summary["variation"]["theta_times_horizon"].get<double>() >= 0.0);
  CHECK_FALSE(summary["variation"].contains("minimizer_path_length"));
  CHECK(summary["wall_time_seconds"].is_number());
  fs::remove_all(dir);
}

TEST_CASE("tracking experiments report the benchmark path length") {
  json doc{
      {"name", "track"},
      {"problem", {{"kind", "target_tracking"}, {"noise_seed", 2027}}},
      {"constraint", {{"kind", "l1_ball"}, {"dimension", 2}, {"radius", 3.0}}},
      {"graph", {{"builtin", "ten_node_cyclic"}}},
      {"estimators", {"full_gradient"}},
      {"alpha", {{"kind", "constant"}, {"value", 0.002}}},
      {"mu", {{"kind", "constant"}, {"value", 0.1}}},
      {"horizon", 3},
      {"replicates", 1},
      {"metric", "convex"},
  };
  const fs::path dir = fresh_dir("dobo_harness_track");
  const auto result = dobo::run_experiment(dobo::parse_config(doc), dir);
  CHECK(result.all_replicates_completed);
  CHECK(line_count(slurp(dir / "full_gradient_rep0.csv")) == 1 + 3 * 10);
  CHECK(result.summary["variation"]["minimizer_path_length"].get<double>() > 0.0);
  fs::remove_all(dir);
}

TEST_CASE("rerunning an experiment reproduces every output byte") {
  auto doc = minimal_config();
  doc["name"] = "repro";
  doc["estimators"] = {"one_point", "one_point_residual"};
  doc["replicates"] = 2;
  doc["horizon"] = 8;
  const ExperimentConfig cfg = dobo::parse_config(doc);

  const fs::path dir_a = fresh_dir("dobo_harness_repro_a");
  const fs::path dir_b = fresh_dir("dobo_harness_repro_b");
  dobo::run_experiment(cfg, dir_a, /*threads=*/1);
  dobo::run_experiment(cfg, dir_b, /*threads=*/2);  // scheduling must not matter

  int compared = 0;
  for (const auto& entry : fs::directory_iterator(dir_a)) {
    if (entry.path().extension() != ".csv") continue;
    const std::string a = slurp(entry.path());
    const std::string b = slurp(dir_b / entry.path().filename());
    CHECK(a == b);
    ++compared;
  }
  CHECK(compared == 6);  // 2 estimators x (2 replicates + 1 mean curve)
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
}

TEST_CASE("single agent single round still produces a spreadsheet") {
  json doc{
      {"name", "solo"},
      {"problem", {{"kind", "cubic_cosine"}, {"noise_seed", 3}, {"noise_std", 0.0}}},
      {"constraint", {{"kind", "box"}, {"half_width", 3.0}, {"dimension", 2}}},
      {"graph", {{"nodes", 1}, {"parts", {json::array()}}}},
      {"estimators", {"one_point"}},
      {"alpha", {{"kind", "constant"}, {"value", 0.01}}},
      {"mu", {{"kind", "constant"}, {"value", 0.001}}},
      {"horizon", 1},
      {"replicates", 1},
      {"metric", "nonconvex"},
  };
  const fs::path dir = fresh_dir("dobo_harness_solo");
  const auto result = dobo::run_experiment(dobo::parse_config(doc), dir);
  CHECK(result.all_replicates_completed);
  const std::string csv = slurp(dir / "one_point_rep0.csv");
  CHECK(line_count(csv) == 2);
  fs::remove_all(dir);
}

TEST_CASE("estimator summaries fold in failures and errors") {
  dobo::ReplicateOutcome good;
  good.replicate = 0;
  good.completed = true;
  good.cumulative_regret = {1.0, 2.5};
  dobo::ReplicateOutcome diverged;
  diverged.replicate = 1;
  diverged.completed = false;
  diverged.failed_round = 2;
  dobo::ReplicateOutcome threw;
  threw.replicate = 2;
  threw.error = "boom";

  const json block = dobo::summarize_estimator({good, diverged, threw});
  CHECK(block["replicates_completed"] == 1);
  CHECK(block["failed_replicates"] == json::array({1}));
  CHECK(block["errors"].size() == 1);
  CHECK(block["errors"][0].get<std::string>().find("boom") != std::string::npos);
  CHECK(block["final_mean_cumulative_regret"] == 2.5);
  CHECK(block["final_standard_error"] == 0.0);

  dobo::ReplicateOutcome other = good;
  other.replicate = 1;
  other.cumulative_regret = {1.0, 4.5};
  const json pair = dobo::summarize_estimator({good, other});
  CHECK(pair["final_mean_cumulative_regret"].get<double>() == Catch::Approx(3.5));
  CHECK(pair["final_standard_error"].get<double>() == Catch::Approx(1.0));

  const json none = dobo::summarize_estimator({diverged});
  CHECK(none["replicates_completed"] == 0);
  CHECK(none["final_mean_cumulative_regret"].is_null());
}

TEST_CASE("config loading failures") {
  CHECK_THROWS_AS(dobo::load_config("/definitely/not/here.json"), ConfigError);

  const fs::path dir = fresh_dir("dobo_harness_badjson");
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "broken.json");
    out << "{ this is not json";
  }
  try {
    dobo::load_config(dir / "broken.json");
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("not valid JSON") != std::string::npos);
  }
  fs::remove_all(dir);
}

TEST_CASE("ledger spreadsheet uses shortest round-trip numbers") {
  dobo::RegretLedger ledger;
  dobo::RoundRecord rec;
  rec.k = 1;
  Eigen::VectorXd x(2);
  x << 0.5, -0.25;
  rec.decisions = {x};
  rec.local_losses = {1.5};
  rec.regret_increment = 2.0;
  rec.consensus_error = 0.0;
  rec.function_queries = 3;
  ledger.append(rec);

  const fs::path dir = fresh_dir("dobo_harness_csv");
  fs::create_directories(dir);
  dobo::write_ledger_csv(ledger, 2, dir / "one.csv");
  CHECK(slurp(dir / "one.csv") ==
        "k,agent,x0,x1,loss,regret_increment,cum_regret,consensus_error,fn_queries\n"
        "1,1,0.5,-0.25,1.5,2,2,0,3\n");
  fs::remove_all(dir);
}
