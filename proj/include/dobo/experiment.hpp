#pragma once

#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <system_error>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dobo/config.hpp"
#include "dobo/errors.hpp"
#include "dobo/metrics.hpp"
#include "dobo/optimizer.hpp"

namespace dobo {

namespace detail {

// Shortest round-trip decimal rendering; deterministic for identical bit
// patterns, which is what makes repeated runs byte-identical.
inline void append_number(std::string& out, double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  out.append(buf, res.ptr);
}

inline void append_number(std::string& out, std::int64_t value) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  out.append(buf, res.ptr);
}

inline std::string csv_header(int dimension) {
  std::string header = "k,agent";
  for (int c = 0; c < dimension; ++c) header += ",x" + std::to_string(c);
  header += ",loss,regret_increment,cum_regret,consensus_error,fn_queries\n";
  return header;
}

}  // namespace detail

// One row per (round, agent): the agent's decision and local loss, plus the
// round-level regret and diagnostics repeated on each agent row.
inline void write_ledger_csv(const RegretLedger& ledger, int dimension,
                             const std::filesystem::path& path) {
  std::string out = detail::csv_header(dimension);
  for (const RoundRecord& rec : ledger.rounds()) {
    for (std::size_t i = 0; i < rec.decisions.size(); ++i) {
      detail::append_number(out, rec.k);
      out.push_back(',');
      detail::append_number(out, static_cast<std::int64_t>(i + 1));
      for (int c = 0; c < dimension; ++c) {
        out.push_back(',');
        detail::append_number(out, rec.decisions[i][c]);
      }
      out.push_back(',');
      detail::append_number(out, rec.local_losses[i]);
      out.push_back(',');
      detail::append_number(out, rec.regret_increment);
      out.push_back(',');
      detail::append_number(out, rec.cumulative_regret);
      out.push_back(',');
      detail::append_number(out, rec.consensus_error);
      out.push_back(',');
      detail::append_number(out, static_cast<std::int64_t>(rec.function_queries));
      out.push_back('\n');
    }
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot write " + path.string());
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
}

struct ReplicateOutcome {
  EstimatorKind kind{};
  int replicate = 0;
  bool completed = false;          // ran to the horizon without a NaN
  std::int64_t failed_round = 0;   // 0 unless the run hit a non-finite value
  std::string error;               // non-empty if the run threw
  std::vector<double> cumulative_regret;
  std::vector<double> consensus;
};

// Aggregates one estimator's replicates into the summary block used by both
// the JSON summary and the acceptance checks.
inline nlohmann::json summarize_estimator(const std::vector<ReplicateOutcome>& outcomes) {
  nlohmann::json block;
  std::vector<int> failed;
  std::vector<std::string> errors;
  std::vector<double> finals;
  for (const auto& o : outcomes) {
    if (!o.error.empty()) {
      errors.push_back("replicate " + std::to_string(o.replicate) + ": " + o.error);
      continue;
    }
    if (!o.completed) {
      failed.push_back(o.replicate);
      continue;
    }
    finals.push_back(o.cumulative_regret.back());
  }
  block["replicates_completed"] = finals.size();
  block["failed_replicates"] = failed;
  block["errors"] = errors;
  if (!finals.empty()) {
    double mean = 0.0;
    for (double v : finals) mean += v;
    mean /= static_cast<double>(finals.size());
    double var = 0.0;
    for (double v : finals) var += (v - mean) * (v - mean);
    const double se = finals.size() > 1
                          ? std::sqrt(var / (static_cast<double>(finals.size()) - 1.0) /
                                      static_cast<double>(finals.size()))
                          : 0.0;
    block["final_mean_cumulative_regret"] = mean;
    block["final_standard_error"] = se;
  } else {
    block["final_mean_cumulative_regret"] = nullptr;
    block["final_standard_error"] = nullptr;
  }
  return block;
}

struct ExperimentResult {
  nlohmann::json summary;
  std::filesystem::path summary_path;
  bool all_replicates_completed = true;
};

// Runs every (estimator, replicate) pair from the config, writing one CSV per
// run, one mean-curve CSV per estimator, and a summary JSON. Replicates are
// distributed over a small worker pool; all randomness is keyed by
// (base_seed, replicate, agent, round), so thread scheduling cannot change
// any output byte. A NaN inside one replicate marks that run failed and
// leaves the others alone.
inline ExperimentResult run_experiment(const ExperimentConfig& config,
                                       const std::filesystem::path& out_dir,
                                       int threads = 0) {
  namespace fs = std::filesystem;
  const auto start = std::chrono::steady_clock::now();
  fs::create_directories(out_dir);

  const ConstraintSet set = config.make_set();
  const GraphSequence graph = config.make_graph();
  const std::unique_ptr<LossProcess> loss = config.make_loss();

  struct Job {
    EstimatorKind kind;
    int replicate;
  };
  std::vector<Job> jobs;
  for (EstimatorKind kind : config.estimators)
    for (int r = 0; r < config.replicates; ++r) jobs.push_back({kind, r});

  std::vector<ReplicateOutcome> outcomes(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t j = next.fetch_add(1);
      if (j >= jobs.size()) return;
      const Job& job = jobs[j];
      ReplicateOutcome& out = outcomes[j];
      out.kind = job.kind;
      out.replicate = job.replicate;
      try {
        const RegretLedger ledger = run(config.algorithm_for(job.kind), graph, *loss, set,
                                        config.base_seed, static_cast<std::uint64_t>(job.replicate));
        write_ledger_csv(ledger, config.dimension,
                         out_dir / (std::string{estimator_name(job.kind)} + "_rep" +
                                    std::to_string(job.replicate) + ".csv"));
        out.completed = !ledger.failed();
        out.failed_round = ledger.failed_round();
        out.cumulative_regret.reserve(ledger.size());
        out.consensus.reserve(ledger.size());
        for (const RoundRecord& rec : ledger.rounds()) {
          out.cumulative_regret.push_back(rec.cumulative_regret);
          out.consensus.push_back(rec.consensus_error);
        }
      } catch (const std::exception& e) {
        out.error = e.what();
      }
    }
  };

  int pool = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  pool = std::max(1, std::min<int>(pool, static_cast<int>(jobs.size())));
  std::vector<std::thread> crew;
  crew.reserve(static_cast<std::size_t>(pool - 1));
  for (int t = 0; t < pool - 1; ++t) crew.emplace_back(worker);
  worker();
  for (auto& thread : crew) thread.join();

  // Mean curves over completed replicates, written in estimator order.
  nlohmann::json estimator_blocks;
  bool all_completed = true;
  for (EstimatorKind kind : config.estimators) {
    std::vector<const ReplicateOutcome*> mine;
    std::vector<ReplicateOutcome> copies;
    for (const auto& o : outcomes)
      if (o.kind == kind) copies.push_back(o);
    for (const auto& o : copies)
      if (o.completed) mine.push_back(&o);
    all_completed = all_completed && mine.size() == copies.size();

    if (!mine.empty()) {
      const std::size_t t_max = mine.front()->cumulative_regret.size();
      std::string out = "k,mean_cum_regret,se_cum_regret,mean_consensus_error\n";
      for (std::size_t t = 0; t < t_max; ++t) {
        double mean = 0.0, mean_consensus = 0.0;
        for (const auto* o : mine) {
          mean += o->cumulative_regret[t];
          mean_consensus += o->consensus[t];
        }
        mean /= static_cast<double>(mine.size());
        mean_consensus /= static_cast<double>(mine.size());
        double var = 0.0;
        for (const auto* o : mine) var += (o->cumulative_regret[t] - mean) * (o->cumulative_regret[t] - mean);
        const double se = mine.size() > 1
                              ? std::sqrt(var / (static_cast<double>(mine.size()) - 1.0) /
                                          static_cast<double>(mine.size()))
                              : 0.0;
        detail::append_number(out, static_cast<std::int64_t>(t + 1));
        out.push_back(',');
        detail::append_number(out, mean);
        out.push_back(',');
        detail::append_number(out, se);
        out.push_back(',');
        detail::append_number(out, mean_consensus);
        out.push_back('\n');
      }
      std::ofstream file(out_dir / (std::string{estimator_name(kind)} + "_mean.csv"), std::ios::binary);
      file.write(out.data(), static_cast<std::streamsize>(out.size()));
    }
    estimator_blocks[estimator_name(kind)] = summarize_estimator(copies);
  }

  nlohmann::json summary;
  summary["name"] = config.name;
  summary["horizon"] = config.horizon;
  summary["replicates"] = config.replicates;
  summary["base_seed"] = config.base_seed;
  summary["tracked_agent"] = config.tracked_agent;
  summary["metric"] = regret_kind_name(config.regret);
  summary["estimators"] = estimator_blocks;
  summary["config"] = config.echo;

  // Environment variation diagnostics for the built-in families: the largest
  // per-round change of each local loss over a feasible grid, and the total
  // movement of the analytic minimizer where one exists.
  if (config.variation_summary) {
    nlohmann::json variation;
    const auto grid = feasible_grid(set, 256);
    double theta_sum = 0.0;
    nlohmann::json per_agent = nlohmann::json::array();
    for (int i = 1; i <= loss->agents(); ++i) {
      const double theta = theta_variation(*loss, i, static_cast<int>(config.horizon), grid);
      per_agent.push_back(theta);
      theta_sum += theta;
    }
    variation["theta_per_agent"] = per_agent;
    variation["theta_times_horizon"] = static_cast<double>(config.horizon) * theta_sum;
    if (const auto* tracking = dynamic_cast<const TargetTrackingLoss*>(loss.get())) {
      std::vector<Eigen::VectorXd> targets;
      targets.reserve(static_cast<std::size_t>(config.horizon) + 1);
      for (int k = 1; k <= static_cast<int>(config.horizon) + 1; ++k)
        targets.push_back(tracking->target(k));
      variation["minimizer_path_length"] = path_length(targets);
    }
    summary["variation"] = variation;
  }

  const auto end = std::chrono::steady_clock::now();
  summary["wall_time_seconds"] = std::chrono::duration<double>(end - start).count();

  ExperimentResult result;
  result.summary = summary;
  result.summary_path = out_dir / "summary.json";
  result.all_replicates_completed = all_completed;
  std::ofstream file(result.summary_path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot write " + result.summary_path.string());
  const std::string text = summary.dump(2);
  file.write(text.data(), static_cast<std::streamsize>(text.size()));
  file.put('\n');
  return result;
}

}  // namespace dobo
