#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "llql/trainer.hpp"

namespace llql {

/// One evaluation episode.
struct EvalRow {
  std::string method;
  std::uint64_t seed = 0;  // seed of the model under evaluation
  int run = 0;
  int steps = 0;
  bool success = false;
  std::optional<double> e_v;
  int s_out = 0;
  double reward = 0.0;
};

/// Per-method summary. Means and standard deviations are population
/// statistics; e_v statistics use only rows that carry a value.
struct EvalAggregate {
  std::string method;
  int runs = 0;
  int successes = 0;
  double mean_steps = 0.0;
  double std_steps = 0.0;
  std::optional<double> mean_e_v;
  std::optional<double> std_e_v;
  double mean_s_out = 0.0;
  double std_s_out = 0.0;
  double mean_reward = 0.0;
  double std_reward = 0.0;
};

struct EvalReport {
  std::string name;
  nlohmann::json metadata = nlohmann::json::object();
  std::vector<EvalRow> rows;

  /// One aggregate per method, in order of first appearance.
  [[nodiscard]] std::vector<EvalAggregate> aggregates() const;
};

[[nodiscard]] EvalAggregate aggregate(const std::string& method, const std::vector<EvalRow>& rows);

/// Header: method,seed,run,steps,success,e_v,s_out,reward
[[nodiscard]] std::string rows_to_csv(const std::vector<EvalRow>& rows);
/// Header: method,runs,successes,mean_steps,std_steps,mean_e_v,std_e_v,mean_s_out,std_s_out,mean_reward,std_reward
[[nodiscard]] std::string aggregates_to_csv(const std::vector<EvalAggregate>& aggs);
[[nodiscard]] nlohmann::json report_to_json(const EvalReport& report);
[[nodiscard]] EvalReport report_from_json(const nlohmann::json& doc);

/// Writes report.csv (rows), summary.csv (aggregates) and report.json into `dir`.
void write_report(const EvalReport& report, const std::filesystem::path& dir);

/// Writes `text` to `path`, creating parent directories; throws IoError.
void write_text(const std::filesystem::path& path, const std::string& text);

/// Indices of the k logs with the highest final cumulative reward, best
/// first; ties go to the lower seed.
[[nodiscard]] std::vector<std::size_t> top_k_logs(const std::vector<TrainLog>& logs, std::size_t k);

/// Per-episode mean and population std of the cumulative reward over the
/// top-k logs of each method. Header: episode,mean_reward,std_reward,method
[[nodiscard]] std::string curves_to_csv(const std::vector<TrainLog>& logs, std::size_t k = 5);

struct SweepRow {
  double value = 0.0;
  int runs = 0;
  int successes = 0;
  double mean_steps = 0.0;
  double std_steps = 0.0;
};

/// Header: value,runs,successes,mean_steps,std_steps
[[nodiscard]] std::string sweep_to_csv(const std::vector<SweepRow>& rows);

/// Spearman rank correlation with average ranks for ties; 0 when either
/// side is constant.
[[nodiscard]] double spearman(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace llql
