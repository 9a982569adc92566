// mejem: train, evaluate and ablate margin-enhanced joint energy models.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "mejem/checkpoint.hpp"
#include "mejem/config.hpp"
#include "mejem/errors.hpp"
#include "mejem/experiment.hpp"

namespace fs = std::filesystem;

namespace {

enum ExitCode { kOk = 0, kConfigError = 1, kDataError = 2, kDivergence = 3 };

mejem::ExperimentConfig load_or_default(const std::string& path) {
  return path.empty() ? mejem::ExperimentConfig{} : mejem::load_config(path);
}

fs::path output_dir(const mejem::ExperimentConfig& cfg, const std::string& override_dir) {
  return mejem::resolve_output_dir(override_dir.empty() ? cfg.output_dir : override_dir);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Margin-enhanced joint energy models for out-of-distribution detection"};
  app.require_subcommand(1);

  std::string init_out;
  auto* init_cmd = app.add_subcommand("init-config", "Write the default experiment config");
  init_cmd->add_option("-o,--output", init_out, "Destination file (stdout if omitted)");

  std::string gen_config, gen_out;
  auto* gen_cmd = app.add_subcommand("gen-data", "Materialize the configured datasets as feature CSVs");
  gen_cmd->add_option("-c,--config", gen_config, "Experiment config (defaults if omitted)");
  gen_cmd->add_option("-o,--out", gen_out, "Output directory (default <output_dir>/data)");

  std::string train_config, train_out, train_resume;
  bool train_quiet = false;
  auto* train_cmd = app.add_subcommand("train", "Train a model and evaluate it");
  train_cmd->add_option("-c,--config", train_config, "Experiment config (defaults if omitted)");
  train_cmd->add_option("-o,--out", train_out, "Run directory (default: config output_dir)");
  train_cmd->add_option("--resume", train_resume, "Continue from a training checkpoint")->check(CLI::ExistingFile);
  train_cmd->add_flag("-q,--quiet", train_quiet, "No per-epoch progress");

  std::string eval_config, eval_ckpt, eval_out;
  auto* eval_cmd = app.add_subcommand("evaluate", "Score datasets with a checkpoint and emit metrics");
  eval_cmd->add_option("-k,--checkpoint", eval_ckpt, "Checkpoint file")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("-c,--config", eval_config, "Config override (default: the one stored in the checkpoint)");
  eval_cmd->add_option("-o,--out", eval_out, "Output directory (default: checkpoint directory)");

  std::string abl_config, abl_out;
  int abl_seeds = 1;
  auto* abl_cmd = app.add_subcommand("ablate", "Run the generative x margin ablation grid plus the SAM-off baseline");
  abl_cmd->add_option("-c,--config", abl_config, "Base experiment config (defaults if omitted)");
  abl_cmd->add_option("-o,--out", abl_out, "Output directory (default <output_dir>/ablation)");
  abl_cmd->add_option("-s,--seeds", abl_seeds, "Seeds per cell, averaged")->check(CLI::PositiveNumber);

  std::vector<std::string> report_dirs;
  std::string report_out;
  auto* report_cmd = app.add_subcommand("report", "Tabulate metrics.json files from run directories");
  report_cmd->add_option("runs", report_dirs, "Run or ablation directories")->required();
  report_cmd->add_option("-o,--output", report_out, "Write the markdown table here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  try {
    if (*init_cmd) {
      const auto text = mejem::to_json(mejem::ExperimentConfig{}).dump(2) + "\n";
      if (init_out.empty()) {
        std::cout << text;
      } else {
        const fs::path dest(init_out);
        if (dest.has_parent_path()) fs::create_directories(dest.parent_path());
        std::ofstream out(dest);
        if (!out) throw mejem::ConfigError("cannot write " + init_out);
        out << text;
      }
    } else if (*gen_cmd) {
      const auto cfg = load_or_default(gen_config);
      const fs::path dir = gen_out.empty() ? output_dir(cfg, "") / "data" : fs::path(gen_out);
      for (const auto& p : mejem::materialize_datasets(cfg, dir)) std::cout << p.string() << '\n';
    } else if (*train_cmd) {
      const auto cfg = load_or_default(train_config);
      const auto dir = output_dir(cfg, train_out);
      mejem::TrainOptions opts;
      if (!train_resume.empty()) opts.resume_from = train_resume;
      if (!train_quiet) opts.progress = &std::cerr;
      const auto trained = mejem::train(cfg, dir, opts);
      const auto report = mejem::evaluate(cfg, trained.checkpoint, dir);
      std::cout << "checkpoint: " << trained.checkpoint_path.string() << '\n';
      std::cout << "closed-set accuracy: " << report.precision << '\n';
      for (const auto& m : report.metrics) {
        std::cout << m.score_kind << " score vs " << m.ood_dataset << ": AUROC " << m.auroc << ", FPR95 " << m.fpr95
                  << '\n';
      }
    } else if (*eval_cmd) {
      const auto ckpt = mejem::read_checkpoint(eval_ckpt);
      const auto cfg = eval_config.empty() ? mejem::config_from_json(nlohmann::json::parse(ckpt.config_json))
                                           : mejem::load_config(eval_config);
      const fs::path dir = eval_out.empty() ? fs::path(eval_ckpt).parent_path() : fs::path(eval_out);
      const auto report = mejem::evaluate(cfg, ckpt, dir.empty() ? fs::path(".") : dir);
      std::cout << "closed-set accuracy: " << report.precision << '\n';
      for (const auto& m : report.metrics) {
        std::cout << m.score_kind << " score vs " << m.ood_dataset << ": AUROC " << m.auroc << ", FPR95 " << m.fpr95
                  << '\n';
      }
    } else if (*abl_cmd) {
      const auto cfg = load_or_default(abl_config);
      const fs::path dir = abl_out.empty() ? output_dir(cfg, "") / "ablation" : fs::path(abl_out);
      mejem::ablate(cfg, dir, abl_seeds, &std::cerr);
      std::ifstream table(dir / "ablation.md");
      std::cout << table.rdbuf();
    } else if (*report_cmd) {
      std::vector<fs::path> dirs(report_dirs.begin(), report_dirs.end());
      const auto table = mejem::report_table(dirs);
      if (report_out.empty()) {
        std::cout << table;
      } else {
        std::ofstream out(report_out);
        if (!out) throw mejem::DataError("cannot write " + report_out);
        out << table;
      }
    }
  } catch (const mejem::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const mejem::DivergenceError& e) {
    std::cerr << "numerical divergence: " << e.what() << '\n';
    return kDivergence;
  } catch (const std::exception& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kDataError;
  }
  return kOk;
}
