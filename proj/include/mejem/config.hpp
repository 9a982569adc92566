#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "mejem/losses.hpp"
#include "mejem/sam.hpp"
#include "mejem/sgld.hpp"

namespace mejem {

struct RingSpec {
  std::string name = "ring";
  int n = 1000;
  double radius = 8.0;
  double noise_std = 0.5;
  std::uint64_t seed = 4;
};

struct SyntheticDataConfig {
  int num_classes = 3;
  std::size_t dim = 2;
  int train_per_class = 1000;  // id_val is carved from this pool
  int test_per_class = 200;
  double mean_radius = 4.0;
  double class_std = 1.0;
  int aux_n = 3000;
  double aux_box_halfwidth = 10.0;
  double aux_exclusion_radius = 6.5;
  std::vector<RingSpec> ood{RingSpec{}};
  std::uint64_t seed = 1234;
};

struct CsvOodSource {
  std::string name;
  std::string path;
};

struct CsvDataConfig {
  int num_classes = 0;
  std::string id_train;
  std::string id_test;
  std::string aux_ood;  // optional
  std::vector<CsvOodSource> ood;
};

enum class DataSource { Synthetic, Csv };

struct DataConfig {
  DataSource source = DataSource::Synthetic;
  SyntheticDataConfig synthetic;
  CsvDataConfig csv;
  double val_fraction = 0.2;

  int num_classes() const { return source == DataSource::Synthetic ? synthetic.num_classes : csv.num_classes; }
};

struct ExperimentFlags {
  bool generative = true;
  bool margin = true;
  bool sam = true;
  bool aux_data = true;
};

struct ScheduleConfig {
  int epochs = 60;
  int batch_size = 128;
  int warmup_steps = 200;
  std::vector<int> decay_epochs{35, 70, 100};
  double decay_factor = 0.2;
  int checkpoint_every = 0;  // epochs; 0 = final checkpoint only
};

struct EvalConfig {
  double target_tpr = 0.95;
  std::size_t histogram_bins = 50;
};

struct ExperimentConfig {
  std::string name = "mejem";
  std::uint64_t seed = 0;
  std::string output_dir = "runs/mejem";
  std::vector<std::size_t> hidden_sizes{128, 128};
  DataConfig data;
  LossWeights weights;
  MarginConfig margin;
  // Buffer box is filled in from the training data at run time.
  SgldConfig sgld;
  std::size_t buffer_capacity = 10000;
  SamConfig sam;
  ScheduleConfig schedule;
  ExperimentFlags flags;
  EvalConfig eval;

  /// Throws ConfigError on any violated constraint.
  void validate() const;

  /// Generative/margin terms are active only when flagged and weighted.
  bool generative_active() const { return flags.generative && weights.generative > 0.0; }
  bool margin_active() const { return flags.margin && weights.margin > 0.0; }

  /// SamConfig with the schedule and the sam flag folded in.
  SamConfig effective_sam() const;
};

nlohmann::json to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const nlohmann::json& j);

ExperimentConfig load_config(const std::filesystem::path& path);
void save_config(const std::filesystem::path& path, const ExperimentConfig& cfg);

/// 16 hex digits of FNV-1a over the canonical JSON, excluding output_dir.
std::string config_hash(const ExperimentConfig& cfg);

std::uint64_t fnv1a64(std::string_view bytes);

/// Independent sub-seed for a named stream.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace mejem
