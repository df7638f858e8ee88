#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairfl/data.hpp"
#include "fairfl/federation.hpp"
#include "fairfl/finetune.hpp"
#include "fairfl/partition.hpp"
#include "fairfl/postprocess.hpp"

namespace fairfl {

enum class Method { fedavg, pp, ft };
enum class DegeneratePolicy { reject_and_redraw, keep };
enum class PpEvaluation { expected, sampled };

std::string to_string(Method m);
Method parse_method(const std::string& s);

struct ExperimentConfig {
  DataSource dataset = DataSource::synthetic;
  std::optional<std::filesystem::path> csv_path;
  SynthSpec synthetic;
  std::uint64_t synthetic_seed = 0;

  double alpha = 500.0;
  std::vector<std::uint64_t> seeds{0};
  Method method = Method::fedavg;
  FedConfig fed;
  FtConfig ft;
  /// Hidden layer widths; the input width comes from the data and the
  /// output width is 1. Empty means a single-layer (logistic) model.
  std::vector<std::size_t> hidden_dims;
  double train_fraction = 0.8;
  DegeneratePolicy degenerate_policy = DegeneratePolicy::reject_and_redraw;
  std::size_t max_partition_attempts = 200;
  PpEvaluation pp_evaluation = PpEvaluation::expected;

  void validate() const;
};

/// Defaults for a dataset (hyperparameters of the reference runs):
/// lr 0.01, batch 32; FT eta 5e-3, batch 256, alpha_ft 2.0 (COMPAS) or
/// 1.0 (Adult); T = 40 for COMPAS, 20 otherwise.
ExperimentConfig default_config(DataSource dataset);

/// Flat JSON document. Missing fields take default_config(dataset) values.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& c);
ExperimentConfig load_config(const std::filesystem::path& path);

struct ClientResult {
  int client = 0;  // 0 for the weighted-average row
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  std::optional<double> accuracy;
  std::optional<double> balanced_accuracy;
  std::optional<double> eod;
  /// "ok", or a reason a metric or the debiasing step was unavailable.
  std::string status = "ok";
  std::optional<DerivedPredictor> predictor;

  bool operator==(const ClientResult&) const = default;
};

struct SeedResult {
  std::uint64_t seed = 0;
  std::vector<ClientResult> clients;
  ClientResult average;
  std::size_t partition_attempts = 1;
  double train_seconds = 0;
  double debias_seconds = 0;
  double elapsed_seconds = 0;
  std::size_t comm_rounds = 0;

  bool operator==(const SeedResult&) const = default;
};

struct MetricSummary {
  double mean = 0;
  double std = 0;  // population
  std::size_t count = 0;

  bool operator==(const MetricSummary&) const = default;
};

struct SummaryRow {
  int client = 0;  // 0 = weighted average
  MetricSummary accuracy, balanced_accuracy, eod;

  bool operator==(const SummaryRow&) const = default;
};

struct Summary {
  std::vector<SummaryRow> rows;
  MetricSummary elapsed_seconds;

  bool operator==(const Summary&) const = default;
};

struct ExperimentReport {
  std::string dataset;
  std::string method;
  double alpha = 0;
  std::size_t clients = 0;
  std::size_t global_rounds = 0;
  std::vector<SeedResult> seeds;
  Summary summary;

  bool operator==(const ExperimentReport&) const = default;
};

/// Observation points for tests and for exporting manifests / round logs.
/// `after_split` may modify the partitions.
struct RunHooks {
  std::function<void(std::uint64_t seed, std::vector<ClientPartition>&)> after_split;
  std::function<void(std::uint64_t seed, const FedResult&)> after_training;
  /// Debiasing artifact of one client: the derived predictor (pp) or the
  /// fine-tuned weights (ft).
  std::function<void(std::uint64_t seed, int client, const nlohmann::json&)> after_debias;
};

/// Loads (or generates) the dataset named by the config.
Dataset load_dataset(const ExperimentConfig& config);

/// Dirichlet partition + per-client split for one seed, redrawing
/// degenerate partitions when the policy asks for it. Returns the number of
/// attempts used through `attempts`.
std::vector<ClientPartition> make_partitions(const Dataset& data, const ExperimentConfig& config,
                                             std::uint64_t seed, std::size_t* attempts = nullptr);

SeedResult run_seed(const Dataset& data, const ExperimentConfig& config, std::uint64_t seed,
                    const RunHooks& hooks = {});

ExperimentReport run_experiment(const ExperimentConfig& config, const RunHooks& hooks = {});

/// Mean and population standard deviation per metric across seeds, for the
/// weighted-average row and every client row.
Summary summarize(std::span<const SeedResult> seeds);

enum class ReportFormat { csv, json };

nlohmann::json to_json(const ExperimentReport& r);
ExperimentReport report_from_json(const nlohmann::json& j);

/// CSV columns: seed, client, n_train, n_test, accuracy, balanced_accuracy,
/// eod, method, alpha, comm_rounds, elapsed_s. One row per client plus an
/// "avg" row per seed. Undefined metrics are empty fields.
void write_report_csv(std::ostream& out, const ExperimentReport& r);
void write_report(const ExperimentReport& r, const std::filesystem::path& path, ReportFormat format);
ExperimentReport read_report_json(const std::filesystem::path& path);

/// Summary table: rows Acc./BA/EOD x (Avg, C1..CK), mean +- std.
std::string format_summary_table(const ExperimentReport& r);

}  // namespace fairfl
