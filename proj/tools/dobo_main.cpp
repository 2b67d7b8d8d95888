#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "dobo/config.hpp"
#include "dobo/experiment.hpp"
#include "dobo/verify.hpp"

namespace {

int do_run(const std::string& config_path, const std::string& preset_name,
           const std::string& out_dir, std::optional<std::uint64_t> seed,
           std::optional<int> replicates, int threads) {
  nlohmann::json root;
  if (!preset_name.empty()) {
    root = dobo::preset_config(preset_name);
  } else {
    root = nullptr;  // placeholder; load_config validates below
  }
  dobo::ExperimentConfig config =
      preset_name.empty() ? dobo::load_config(config_path) : dobo::parse_config(root);
  if (seed) {
    config.base_seed = *seed;
    config.echo["base_seed"] = config.base_seed;
  }
  if (replicates) {
    if (*replicates < 1) throw dobo::ConfigError("replicates must be >= 1");
    config.replicates = *replicates;
    config.echo["replicates"] = config.replicates;
  }

  const dobo::ExperimentResult result = dobo::run_experiment(config, out_dir, threads);
  for (const auto& [estimator, block] : result.summary.at("estimators").items()) {
    std::cout << estimator << ": final mean cumulative regret = "
              << block.at("final_mean_cumulative_regret").dump()
              << " (se " << block.at("final_standard_error").dump() << ", "
              << block.at("replicates_completed").get<std::size_t>() << "/"
              << config.replicates << " replicates completed)\n";
  }
  if (!result.all_replicates_completed)
    std::cout << "warning: some replicates stopped early on a non-finite value; "
                 "see summary.json\n";
  std::cout << "summary written to " << result.summary_path.string() << "\n";
  return 0;
}

int do_verify(const std::string& level_name) {
  const auto level = level_name == "full" ? dobo::VerifyLevel::kFull : dobo::VerifyLevel::kFast;
  const dobo::VerifyReport report = dobo::verify_suite(level);
  for (const auto& check : report.checks) {
    std::cout << (check.passed ? "[PASS] " : "[FAIL] ") << check.name
              << " measured=" << check.measured << " bound=" << check.bound << " ("
              << check.details << ")\n";
  }
  return report.all_passed() ? 0 : 1;
}

int do_presets_list() {
  for (const auto& preset : dobo::preset_list())
    std::cout << preset.name << "  " << preset.description << "\n";
  return 0;
}

int do_presets_dump(const std::string& name, const std::string& out_file) {
  const nlohmann::json root = dobo::preset_config(name);
  const std::string text = root.dump(2) + "\n";
  if (out_file.empty()) {
    std::cout << text;
  } else {
    std::ofstream file(out_file, std::ios::binary);
    if (!file) throw std::runtime_error("cannot write " + out_file);
    file << text;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"simulator for distributed online optimization with bandit feedback"};
  app.require_subcommand(1);

  auto* run_cmd = app.add_subcommand("run", "run an experiment and write CSV/JSON outputs");
  std::string config_path, preset_name, out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::optional<int> replicates;
  int threads = 0;
  auto* config_opt =
      run_cmd->add_option("--config", config_path, "path to a JSON experiment config")
          ->check(CLI::ExistingFile);
  auto* preset_opt = run_cmd->add_option("--preset", preset_name, "name of a built-in experiment");
  config_opt->excludes(preset_opt);
  preset_opt->excludes(config_opt);
  run_cmd->add_option("--out", out_dir, "output directory (created if missing)");
  run_cmd->add_option("--seed", seed, "override the config's base seed");
  run_cmd->add_option("--replicates", replicates, "override the config's replicate count");
  run_cmd->add_option("--threads", threads, "worker threads (default: hardware concurrency)");

  auto* verify_cmd = app.add_subcommand("verify", "run the built-in numerical self-checks");
  std::string level = "fast";
  verify_cmd->add_option("--level", level, "fast or full")
      ->check(CLI::IsMember({"fast", "full"}));

  auto* presets_cmd = app.add_subcommand("presets", "inspect built-in experiments");
  presets_cmd->require_subcommand(1);
  auto* list_cmd = presets_cmd->add_subcommand("list", "list preset names and descriptions");
  auto* dump_cmd = presets_cmd->add_subcommand("dump", "print a preset's config as JSON");
  std::string dump_name, dump_out;
  dump_cmd->add_option("name", dump_name, "preset name")->required();
  dump_cmd->add_option("--out", dump_out, "write to this file instead of stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      if (config_path.empty() && preset_name.empty())
        throw dobo::ConfigError("run needs either --config or --preset");
      return do_run(config_path, preset_name, out_dir, seed, replicates, threads);
    }
    if (verify_cmd->parsed()) return do_verify(level);
    if (list_cmd->parsed()) return do_presets_list();
    if (dump_cmd->parsed()) return do_presets_dump(dump_name, dump_out);
  } catch (const dobo::ConfigError& e) {
    nlohmann::json err{{"error", "invalid_config"}, {"issues", e.issues()}};
    std::cerr << err.dump(2) << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    nlohmann::json err{{"error", "invalid_argument"}, {"issues", {e.what()}}};
    std::cerr << err.dump(2) << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
