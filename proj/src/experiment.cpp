#include "mejem/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <sstream>

#include "mejem/errors.hpp"
#include "mejem/losses.hpp"
#include "mejem/model.hpp"
#include "mejem/sam.hpp"
#include "mejem/sgld.hpp"

namespace mejem {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Generator streams derived from the experiment seed.
enum Stream : std::uint64_t { kInit = 10, kShuffle = 11, kAux = 12, kSgld = 13 };

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

std::vector<std::size_t> layer_sizes_for(const ExperimentConfig& cfg, std::size_t dim, int num_classes) {
  std::vector<std::size_t> sizes{dim};
  sizes.insert(sizes.end(), cfg.hidden_sizes.begin(), cfg.hidden_sizes.end());
  sizes.push_back(static_cast<std::size_t>(num_classes));
  return sizes;
}

void check_dim(const LabeledBatch& b, std::size_t d, const std::string& what) {
  if (b.dim() != d) {
    throw DataError(what + " has feature dimension " + std::to_string(b.dim()) + ", expected " + std::to_string(d));
  }
}

}  // namespace

Datasets build_datasets(const ExperimentConfig& cfg) {
  Datasets ds;
  ds.num_classes = cfg.data.num_classes();
  if (cfg.data.source == DataSource::Synthetic) {
    const auto& s = cfg.data.synthetic;
    auto pool = gen_gaussian_mixture(s.num_classes, s.train_per_class, s.mean_radius, s.class_std,
                                     derive_seed(s.seed, 0), s.dim, Split::IdTrain);
    std::tie(ds.id_train, ds.id_val) = carve(pool, cfg.data.val_fraction, derive_seed(s.seed, 1), Split::IdVal);
    ds.id_test = gen_gaussian_mixture(s.num_classes, s.test_per_class, s.mean_radius, s.class_std,
                                      derive_seed(s.seed, 2), s.dim, Split::IdTest);
    ds.aux = gen_aux_outliers(s.aux_n, s.aux_box_halfwidth, s.aux_exclusion_radius, derive_seed(s.seed, 3), s.dim);
    for (const auto& ring : s.ood) {
      ds.ood.push_back({ring.name, gen_ring_ood(ring.n, ring.radius, ring.noise_std,
                                                derive_seed(s.seed, 16 + ring.seed), s.dim)});
    }
  } else {
    const auto& c = cfg.data.csv;
    const int k = c.num_classes;
    auto pool = load_feature_csv(c.id_train, k, Split::IdTrain);
    std::tie(ds.id_train, ds.id_val) = carve(pool, cfg.data.val_fraction, derive_seed(cfg.seed, 1), Split::IdVal);
    ds.id_test = load_feature_csv(c.id_test, k, Split::IdTest);
    if (!c.aux_ood.empty()) ds.aux = load_feature_csv(c.aux_ood, k, Split::AuxOod);
    for (const auto& o : c.ood) ds.ood.push_back({o.name, load_feature_csv(o.path, k, Split::OodTest)});
  }
  const auto d = ds.id_train.dim();
  if (ds.id_train.size() == 0) throw DataError("id_train split is empty");
  check_dim(ds.id_test, d, "id_test");
  if (ds.aux) check_dim(*ds.aux, d, "aux_ood");
  for (const auto& o : ds.ood) check_dim(o.batch, d, "ood set '" + o.name + "'");
  return ds;
}

Datasets normalize(const Datasets& raw, const Normalizer& norm) {
  Datasets out;
  out.num_classes = raw.num_classes;
  out.id_train = apply_normalizer(norm, raw.id_train);
  out.id_val = apply_normalizer(norm, raw.id_val);
  out.id_test = apply_normalizer(norm, raw.id_test);
  if (raw.aux) out.aux = apply_normalizer(norm, *raw.aux);
  for (const auto& o : raw.ood) out.ood.push_back({o.name, apply_normalizer(norm, o.batch)});
  return out;
}

std::vector<fs::path> materialize_datasets(const ExperimentConfig& cfg, const fs::path& dir) {
  fs::create_directories(dir);
  const auto ds = build_datasets(cfg);
  std::vector<fs::path> written;
  auto emit = [&](const std::string& name, const LabeledBatch& b) {
    const auto path = dir / (name + ".csv");
    write_feature_csv(path, b);
    written.push_back(path);
  };
  emit("id_train", ds.id_train);
  emit("id_val", ds.id_val);
  emit("id_test", ds.id_test);
  if (ds.aux) emit("aux_ood", *ds.aux);
  for (const auto& o : ds.ood) emit("ood_" + o.name, o.batch);
  return written;
}

fs::path resolve_output_dir(const std::string& output_dir) {
  fs::path p(output_dir);
  if (p.is_absolute()) return p;
  if (const char* root = std::getenv(kOutputRootEnv); root && *root) return fs::path(root) / p;
  return p;
}

json StepLog::to_json() const {
  return {{"epoch", epoch},
          {"step", step},
          {"lr", lr},
          {"loss", loss},
          {"ce", cross_entropy},
          {"gen", generative},
          {"margin", margin},
          {"mean_id_energy", mean_id_energy},
          {"mean_ood_energy", mean_ood_energy},
          {"mean_neg_energy", mean_neg_energy}};
}

TrainResult train(const ExperimentConfig& cfg, const fs::path& run_dir, const TrainOptions& opts) {
  cfg.validate();
  fs::create_directories(run_dir);
  const std::string cfg_json = to_json(cfg).dump(2);
  const std::string hash = config_hash(cfg);
  write_text(run_dir / "config.json", cfg_json + "\n");
  write_text(run_dir / "config_hash.txt", hash + "\n");

  const auto raw = build_datasets(cfg);
  const Normalizer norm = fit_normalizer(raw.id_train);
  const auto data = normalize(raw, norm);
  const auto d = data.id_train.dim();
  if (cfg.flags.aux_data && !data.aux) throw ConfigError("flags.aux_data set but no auxiliary outliers available");

  ModelParams params = init_mlp(layer_sizes_for(cfg, d, data.num_classes), derive_seed(cfg.seed, kInit));
  OptimizerState state = init_optimizer_state(params);
  ReplayBuffer buffer(cfg.buffer_capacity, d);
  SgldConfig sgld = cfg.sgld;
  std::tie(sgld.box_lo, sgld.box_hi) = feature_box(data.id_train);
  const SamConfig sam = cfg.effective_sam();
  Rng shuffle_rng(derive_seed(cfg.seed, kShuffle));
  Rng aux_rng(derive_seed(cfg.seed, kAux));
  Rng sgld_rng(derive_seed(cfg.seed, kSgld));

  auto make_checkpoint = [&] {
    return Checkpoint{cfg_json, hash, params.clone(), norm, state, buffer,
                      {rng_state(shuffle_rng), rng_state(aux_rng), rng_state(sgld_rng)}};
  };

  bool resumed = false;
  if (opts.resume_from) {
    auto ck = read_checkpoint(*opts.resume_from);
    if (ck.config_hash != hash) {
      throw ConfigError("resume: checkpoint config hash " + ck.config_hash + " does not match " + hash);
    }
    if (ck.params.layer_sizes != params.layer_sizes || ck.rng_states.size() != 3 || !ck.buffer) {
      throw DataError("resume: checkpoint is not a training checkpoint for this config");
    }
    params = std::move(ck.params);
    state = std::move(ck.optimizer);
    buffer = std::move(*ck.buffer);
    restore_rng(shuffle_rng, ck.rng_states[0]);
    restore_rng(aux_rng, ck.rng_states[1]);
    restore_rng(sgld_rng, ck.rng_states[2]);
    resumed = true;
  }

  std::ofstream log_out(run_dir / "train_log.jsonl", resumed ? std::ios::app : std::ios::trunc);
  if (!log_out) throw DataError("cannot write training log in " + run_dir.string());

  TrainResult result;
  result.run_dir = run_dir;
  const ObjectiveFlags obj_flags{cfg.generative_active(), cfg.margin_active()};
  const int last_epoch = std::min(cfg.schedule.epochs, opts.stop_after_epoch.value_or(cfg.schedule.epochs));
  const auto n_train = data.id_train.size();
  const auto bs = static_cast<std::size_t>(cfg.schedule.batch_size);

  for (int epoch = state.epoch; epoch < last_epoch; ++epoch) {
    state.epoch = epoch;
    std::vector<std::size_t> order(n_train);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss = 0.0;
    std::size_t epoch_steps = 0;

    for (std::size_t start = 0; start < n_train; start += bs) {
      const std::span<const std::size_t> rows(order.data() + start, std::min(bs, n_train - start));
      const auto id = data.id_train.subset(rows);

      ObjectiveBatch batch{id.features, id.labels, Tensor::zeros(Shape{0, d}), Tensor::zeros(Shape{0, d})};
      if (cfg.flags.aux_data) {
        std::uniform_int_distribution<std::size_t> pick(0, data.aux->size() - 1);
        std::vector<std::size_t> aux_rows(rows.size());
        for (auto& r : aux_rows) r = pick(aux_rng);
        batch.aux_x = data.aux->subset(aux_rows).features;
      }
      if (obj_flags.generative) {
        batch.neg_x = sample_negatives(params, buffer, static_cast<int>(rows.size()), sgld, sgld_rng);
      }

      std::optional<ObjectiveTerms> first;
      const LossFn loss_fn = [&](const ModelParams& p) {
        auto terms = mejem_objective(p, batch, cfg.weights, cfg.margin, obj_flags);
        if (!first) first = terms;
        return terms.total;
      };
      StepLog entry;
      entry.epoch = epoch;
      entry.step = state.step;
      SamStepResult res;
      try {
        res = sam_step(params, loss_fn, state, sam);
      } catch (const DivergenceError& e) {
        std::ostringstream os;
        os << e.what() << "; epoch " << epoch << ", mean ID energy "
           << (first ? first->mean_id_energy : std::nan("")) << ", mean negative energy "
           << (first ? first->mean_neg_energy : std::nan(""));
        throw DivergenceError(os.str());
      }
      if (!params.is_finite()) {
        throw DivergenceError("parameters became non-finite at step " + std::to_string(entry.step));
      }
      entry.lr = res.lr;
      entry.loss = res.loss;
      entry.cross_entropy = first->cross_entropy;
      entry.generative = first->generative;
      entry.margin = first->margin;
      entry.mean_id_energy = first->mean_id_energy;
      entry.mean_ood_energy = first->mean_ood_energy;
      entry.mean_neg_energy = first->mean_neg_energy;
      log_out << entry.to_json().dump() << '\n';
      result.log.push_back(entry);
      epoch_loss += res.loss;
      ++epoch_steps;
    }

    state.epoch = epoch + 1;
    if (opts.progress) {
      *opts.progress << "[" << cfg.name << "] epoch " << epoch + 1 << "/" << cfg.schedule.epochs << " loss "
                     << epoch_loss / static_cast<double>(std::max<std::size_t>(epoch_steps, 1)) << '\n';
    }
    if (cfg.schedule.checkpoint_every > 0 && (epoch + 1) % cfg.schedule.checkpoint_every == 0) {
      write_checkpoint(run_dir / ("checkpoint_epoch_" + std::to_string(epoch + 1) + ".bin"), make_checkpoint());
    }
  }

  result.checkpoint = make_checkpoint();
  result.checkpoint_path = run_dir / "checkpoint.bin";
  write_checkpoint(result.checkpoint_path, result.checkpoint);
  return result;
}

json MetricsRecord::to_json() const {
  return {{"model", model},       {"score_kind", score_kind}, {"ood_dataset", ood_dataset},
          {"auroc", auroc},       {"fpr95", fpr95},           {"precision", precision},
          {"n_id", n_id},         {"n_ood", n_ood},           {"threshold", threshold},
          {"id_val_rejection", id_val_rejection},             {"config_hash", config_hash}};
}

MetricsRecord MetricsRecord::from_json(const json& j) {
  MetricsRecord r;
  try {
    r.model = j.at("model").get<std::string>();
    r.score_kind = j.at("score_kind").get<std::string>();
    r.ood_dataset = j.at("ood_dataset").get<std::string>();
    r.auroc = j.at("auroc").get<double>();
    r.fpr95 = j.at("fpr95").get<double>();
    r.precision = j.at("precision").get<double>();
    r.n_id = j.at("n_id").get<std::size_t>();
    r.n_ood = j.at("n_ood").get<std::size_t>();
    r.threshold = j.at("threshold").get<double>();
    r.id_val_rejection = j.at("id_val_rejection").get<double>();
    r.config_hash = j.at("config_hash").get<std::string>();
  } catch (const json::exception& e) {
    throw DataError(std::string("metrics record: ") + e.what());
  }
  score_kind_from_string(r.score_kind);
  if (r.auroc < 0.0 || r.auroc > 1.0 || r.fpr95 < 0.0 || r.fpr95 > 1.0) {
    throw DataError("metrics record: auroc/fpr95 outside [0, 1]");
  }
  return r;
}

const MetricsRecord& RunReport::find(const std::string& score_kind, const std::string& ood_dataset) const {
  for (const auto& m : metrics)
    if (m.score_kind == score_kind && m.ood_dataset == ood_dataset) return m;
  throw std::out_of_range("no metrics for " + score_kind + "/" + ood_dataset);
}

double RunReport::auroc(ScoreKind kind, const std::string& ood_dataset) const {
  return find(to_string(kind), ood_dataset).auroc;
}

namespace {

constexpr ScoreKind kKinds[] = {ScoreKind::Softmax, ScoreKind::Energy};

struct SplitScores {
  Tensor logits;
  std::vector<double> scores[2];  // indexed like kKinds
  std::vector<int> argmax;
};

SplitScores score_split(const ModelParams& frozen, const LabeledBatch& b) {
  SplitScores s{forward(frozen, b.features), {}, {}};
  s.scores[0] = softmax_score(s.logits);
  s.scores[1] = energy_score(s.logits);
  s.argmax = argmax_rows(s.logits);
  return s;
}

struct Evaluation {
  RunReport report;
  SplitScores id_test;
  std::vector<SplitScores> ood;
  Threshold thresholds[2];
};

Evaluation run_evaluation(const ExperimentConfig& cfg, const ModelParams& params, const Datasets& data) {
  if (data.id_val.size() == 0 || data.id_test.size() == 0) throw ConfigError("evaluation needs id_val and id_test");
  if (data.ood.empty()) throw ConfigError("evaluation needs at least one OOD test set");
  const ModelParams frozen = params.frozen();
  Evaluation ev;
  ev.report.model = cfg.name;
  ev.report.config_hash = config_hash(cfg);
  const auto val = score_split(frozen, data.id_val);
  ev.id_test = score_split(frozen, data.id_test);
  ev.report.precision = closed_set_precision(ev.id_test.argmax, data.id_test.labels);
  for (const auto& o : data.ood) ev.ood.push_back(score_split(frozen, o.batch));

  for (std::size_t k = 0; k < 2; ++k) {
    ev.thresholds[k] = calibrate_threshold(val.scores[k], cfg.eval.target_tpr, kKinds[k]);
    const double delta = ev.thresholds[k].delta;
    const auto rejected =
        std::count_if(val.scores[k].begin(), val.scores[k].end(), [delta](double s) { return s < delta; });
    for (std::size_t o = 0; o < data.ood.size(); ++o) {
      MetricsRecord r;
      r.model = cfg.name;
      r.score_kind = to_string(kKinds[k]);
      r.ood_dataset = data.ood[o].name;
      r.auroc = auroc(ev.id_test.scores[k], ev.ood[o].scores[k]);
      r.fpr95 = fpr_at_tpr(ev.id_test.scores[k], ev.ood[o].scores[k], cfg.eval.target_tpr);
      r.precision = ev.report.precision;
      r.n_id = data.id_test.size();
      r.n_ood = data.ood[o].batch.size();
      r.threshold = delta;
      r.id_val_rejection = static_cast<double>(rejected) / static_cast<double>(val.scores[k].size());
      r.config_hash = ev.report.config_hash;
      ev.report.metrics.push_back(r);
    }
  }
  return ev;
}

void write_scores_csv(const fs::path& path, const SplitScores& id, const SplitScores& ood, const Threshold& th) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "sample_id,origin,softmax_score,energy_score,argmax_class,open_set_label\n" << std::setprecision(17);
  std::size_t sample_id = 0;
  auto emit = [&](const SplitScores& s, const char* origin) {
    const auto labels = predict_open_set(s.logits, th);
    for (std::size_t i = 0; i < s.argmax.size(); ++i) {
      out << sample_id++ << ',' << origin << ',' << s.scores[0][i] << ',' << s.scores[1][i] << ',' << s.argmax[i]
          << ',' << labels[i] << '\n';
    }
  };
  emit(id, "id");
  emit(ood, "ood");
}

}  // namespace

RunReport evaluate_in_memory(const ExperimentConfig& cfg, const ModelParams& params, const Datasets& normalized) {
  return run_evaluation(cfg, params, normalized).report;
}

RunReport evaluate(const ExperimentConfig& cfg, const Checkpoint& ckpt, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  const auto raw = build_datasets(cfg);
  if (ckpt.normalizer.mean.size() != raw.id_train.dim()) {
    throw DataError("checkpoint normalizer dimension does not match the evaluation data");
  }
  const auto data = normalize(raw, ckpt.normalizer);
  if (ckpt.params.input_dim() != raw.id_train.dim() ||
      ckpt.params.num_classes() != static_cast<std::size_t>(data.num_classes)) {
    throw DataError("checkpoint model shape does not match the evaluation data");
  }
  auto ev = run_evaluation(cfg, ckpt.params, data);
  auto& report = ev.report;

  for (std::size_t o = 0; o < data.ood.size(); ++o) {
    const auto& name = data.ood[o].name;
    for (std::size_t k = 0; k < 2; ++k) {
      const auto kind = to_string(kKinds[k]);
      const auto stem = name + "_" + kind;
      const auto scores_path = out_dir / ("scores_" + stem + ".csv");
      write_scores_csv(scores_path, ev.id_test, ev.ood[o], ev.thresholds[k]);
      report.artifacts.push_back(scores_path);

      HistogramSpec spec;
      spec.bin_count = cfg.eval.histogram_bins;
      const auto h = histogram({{"id", ev.id_test.scores[k]}, {"ood", ev.ood[o].scores[k]}}, spec);
      const auto csv_path = out_dir / ("histogram_" + stem + ".csv");
      const auto svg_path = out_dir / ("histogram_" + stem + ".svg");
      {
        std::ofstream out(csv_path);
        write_histogram_csv(out, h);
      }
      {
        std::ofstream out(svg_path);
        write_histogram_svg(out, h, cfg.name + ": " + kind + " score, id_test vs " + name);
      }
      report.artifacts.push_back(csv_path);
      report.artifacts.push_back(svg_path);
    }
  }

  json metrics = json::array();
  for (const auto& r : report.metrics) metrics.push_back(r.to_json());
  write_text(out_dir / "metrics.json", metrics.dump(2) + "\n");

  json artifacts = json::array();
  for (const auto& a : report.artifacts) artifacts.push_back(a.filename().string());
  const json rep = {{"model", report.model},
                    {"config_hash", report.config_hash},
                    {"closed_set_precision", report.precision},
                    {"metrics", metrics},
                    {"artifacts", artifacts}};
  write_text(out_dir / "report.json", rep.dump(2) + "\n");
  return report;
}

std::vector<AblationCell> ablation_grid() {
  return {
      {"mejem", {true, true, true, true}},
      {"generative_only", {true, false, true, false}},
      {"margin_only", {false, true, true, true}},
      {"none_sam", {false, false, true, false}},
      {"baseline", {false, false, false, false}},
  };
}

const AblationRow& AblationResult::row(const std::string& cell, ScoreKind kind, const std::string& ood) const {
  for (const auto& r : rows)
    if (r.cell == cell && r.score_kind == to_string(kind) && r.ood_dataset == ood) return r;
  throw std::out_of_range("no ablation row for " + cell + "/" + to_string(kind) + "/" + ood);
}

AblationResult ablate(const ExperimentConfig& base, const fs::path& out_dir, int n_seeds, std::ostream* progress) {
  if (n_seeds < 1) throw ConfigError("ablate: need at least one seed");
  base.validate();
  fs::create_directories(out_dir);
  AblationResult result;
  for (const auto& cell : ablation_grid()) {
    std::vector<RunReport> per_seed;
    for (int s = 0; s < n_seeds; ++s) {
      ExperimentConfig cfg = base;
      cfg.name = cell.name;
      cfg.flags = cell.flags;
      cfg.seed = base.seed + static_cast<std::uint64_t>(s);
      const auto run_dir = out_dir / cell.name / ("seed_" + std::to_string(cfg.seed));
      if (progress) *progress << "ablate: " << cell.name << " seed " << cfg.seed << '\n';
      const auto trained = train(cfg, run_dir, {});
      per_seed.push_back(evaluate(cfg, trained.checkpoint, run_dir));
    }
    for (const auto& m : per_seed.front().metrics) {
      AblationRow row{cell.name, m.score_kind, m.ood_dataset, 0.0, 0.0, 0.0, per_seed.size()};
      for (const auto& rep : per_seed) {
        const auto& r = rep.find(m.score_kind, m.ood_dataset);
        row.auroc += r.auroc;
        row.fpr95 += r.fpr95;
        row.precision += r.precision;
      }
      const double n = static_cast<double>(per_seed.size());
      row.auroc /= n;
      row.fpr95 /= n;
      row.precision /= n;
      result.rows.push_back(row);
    }
    result.reports.push_back(std::move(per_seed));
  }

  std::ostringstream csv, md;
  csv << "cell,score_kind,ood_dataset,auroc,fpr95,precision,n_seeds\n" << std::setprecision(17);
  md << "| cell | score | OOD set | AUROC | FPR95 | accuracy | seeds |\n|---|---|---|---|---|---|---|\n"
     << std::fixed << std::setprecision(4);
  json rows = json::array();
  for (const auto& r : result.rows) {
    csv << r.cell << ',' << r.score_kind << ',' << r.ood_dataset << ',' << r.auroc << ',' << r.fpr95 << ','
        << r.precision << ',' << r.n_seeds << '\n';
    md << "| " << r.cell << " | " << r.score_kind << " | " << r.ood_dataset << " | " << r.auroc << " | " << r.fpr95
       << " | " << r.precision << " | " << r.n_seeds << " |\n";
    rows.push_back({{"cell", r.cell},
                    {"score_kind", r.score_kind},
                    {"ood_dataset", r.ood_dataset},
                    {"auroc", r.auroc},
                    {"fpr95", r.fpr95},
                    {"precision", r.precision},
                    {"n_seeds", r.n_seeds}});
  }
  write_text(out_dir / "ablation.csv", csv.str());
  write_text(out_dir / "ablation.md", md.str());
  write_text(out_dir / "ablation.json", rows.dump(2) + "\n");
  return result;
}

std::string report_table(const std::vector<fs::path>& run_dirs) {
  std::vector<std::pair<fs::path, fs::path>> found;  // (run dir, metrics file)
  for (const auto& dir : run_dirs) {
    if (!fs::exists(dir)) throw DataError("report: no such directory " + dir.string());
    if (fs::is_regular_file(dir / "metrics.json")) {
      found.emplace_back(dir, dir / "metrics.json");
      continue;
    }
    std::vector<fs::path> nested;
    for (const auto& e : fs::recursive_directory_iterator(dir))
      if (e.is_regular_file() && e.path().filename() == "metrics.json") nested.push_back(e.path());
    std::sort(nested.begin(), nested.end());
    for (const auto& p : nested) found.emplace_back(p.parent_path(), p);
  }
  if (found.empty()) throw DataError("report: no metrics.json found");

  std::ostringstream md;
  md << "| run | model | score | OOD set | AUROC | FPR95 | accuracy |\n|---|---|---|---|---|---|---|\n"
     << std::fixed << std::setprecision(4);
  for (const auto& [dir, file] : found) {
    std::ifstream in(file);
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw DataError(file.string() + ": " + e.what());
    }
    for (const auto& rec : j) {
      const auto r = MetricsRecord::from_json(rec);
      md << "| " << dir.string() << " | " << r.model << " | " << r.score_kind << " | " << r.ood_dataset << " | "
         << r.auroc << " | " << r.fpr95 << " | " << r.precision << " |\n";
    }
  }
  return md.str();
}

}  // namespace mejem
