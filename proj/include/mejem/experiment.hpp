#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mejem/checkpoint.hpp"
#include "mejem/config.hpp"
#include "mejem/data.hpp"
#include "mejem/metrics.hpp"
#include "mejem/scoring.hpp"

namespace mejem {

struct NamedBatch {
  std::string name;
  LabeledBatch batch;
};

/// All splits of one experiment, in raw (un-normalized) feature space.
struct Datasets {
  LabeledBatch id_train;
  LabeledBatch id_val;
  LabeledBatch id_test;
  std::optional<LabeledBatch> aux;
  std::vector<NamedBatch> ood;
  int num_classes = 0;
};

Datasets build_datasets(const ExperimentConfig& cfg);
Datasets normalize(const Datasets& raw, const Normalizer& norm);

/// Writes every split of the configured data as feature CSVs into dir.
std::vector<std::filesystem::path> materialize_datasets(const ExperimentConfig& cfg, const std::filesystem::path& dir);

/// Resolves cfg.output_dir against $MEJEM_OUTPUT_ROOT when it is relative.
std::filesystem::path resolve_output_dir(const std::string& output_dir);

inline constexpr const char* kOutputRootEnv = "MEJEM_OUTPUT_ROOT";

struct StepLog {
  int epoch = 0;
  long long step = 0;
  double lr = 0.0;
  double loss = 0.0;
  double cross_entropy = 0.0;
  double generative = 0.0;
  double margin = 0.0;
  double mean_id_energy = 0.0;
  double mean_ood_energy = 0.0;
  double mean_neg_energy = 0.0;

  nlohmann::json to_json() const;
};

struct TrainOptions {
  std::optional<std::filesystem::path> resume_from;
  // Stop after this many epochs in total (used to test resume); default: config epochs.
  std::optional<int> stop_after_epoch;
  std::ostream* progress = nullptr;
};

struct TrainResult {
  std::filesystem::path run_dir;
  std::filesystem::path checkpoint_path;
  Checkpoint checkpoint;
  std::vector<StepLog> log;
};

/// Full training loop. Writes config.json, config_hash.txt, train_log.jsonl and
/// checkpoint.bin (plus checkpoint_epoch_<e>.bin at checkpoint_every) into run_dir.
TrainResult train(const ExperimentConfig& cfg, const std::filesystem::path& run_dir, const TrainOptions& opts = {});

struct MetricsRecord {
  std::string model;
  std::string score_kind;
  std::string ood_dataset;
  double auroc = 0.0;
  double fpr95 = 0.0;
  double precision = 0.0;
  std::size_t n_id = 0;
  std::size_t n_ood = 0;
  double threshold = 0.0;
  double id_val_rejection = 0.0;
  std::string config_hash;

  nlohmann::json to_json() const;
  static MetricsRecord from_json(const nlohmann::json& j);
};

struct RunReport {
  std::string model;
  std::string config_hash;
  double precision = 0.0;
  std::vector<MetricsRecord> metrics;
  std::vector<std::filesystem::path> artifacts;

  const MetricsRecord& find(const std::string& score_kind, const std::string& ood_dataset) const;
  double auroc(ScoreKind kind, const std::string& ood_dataset) const;
};

/// Scores, thresholds and metrics for a trained checkpoint. Emits
/// scores_<ood>_<kind>.csv, histogram_<ood>_<kind>.{csv,svg}, metrics.json and
/// report.json into out_dir.
RunReport evaluate(const ExperimentConfig& cfg, const Checkpoint& ckpt, const std::filesystem::path& out_dir);

/// Evaluation on already-normalized data, without writing anything.
RunReport evaluate_in_memory(const ExperimentConfig& cfg, const ModelParams& params, const Datasets& normalized);

struct AblationCell {
  std::string name;
  ExperimentFlags flags;
};

/// {generative} x {margin} with SAM on, plus the SAM-off plain classifier.
std::vector<AblationCell> ablation_grid();

struct AblationRow {
  std::string cell;
  std::string score_kind;
  std::string ood_dataset;
  double auroc = 0.0;
  double fpr95 = 0.0;
  double precision = 0.0;
  std::size_t n_seeds = 0;
};

struct AblationResult {
  std::vector<std::vector<RunReport>> reports;  // [cell][seed]
  std::vector<AblationRow> rows;                // seed-averaged

  const AblationRow& row(const std::string& cell, ScoreKind kind, const std::string& ood_dataset) const;
};

/// Runs every grid cell for seeds base.seed .. base.seed + n_seeds - 1.
/// Writes <out>/<cell>/seed_<s>/ run directories and ablation.{csv,md,json}.
AblationResult ablate(const ExperimentConfig& base, const std::filesystem::path& out_dir, int n_seeds = 1,
                      std::ostream* progress = nullptr);

/// Markdown comparison table of metrics.json files found under the given run directories.
std::string report_table(const std::vector<std::filesystem::path>& run_dirs);

}  // namespace mejem
