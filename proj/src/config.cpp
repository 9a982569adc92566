#include "mejem/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "mejem/errors.hpp"

namespace mejem {

using nlohmann::json;

namespace {

// Overwrites `out` with j[key] when present. Type errors become ConfigError.
template <typename T>
void read(const json& j, const char* key, T& out) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw ConfigError("config section '" + where + "' must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw ConfigError("unknown config key '" + where + "." + key + "'");
  }
}

const json& section(const json& j, const char* key) {
  static const json empty = json::object();
  auto it = j.find(key);
  return it == j.end() ? empty : *it;
}

}  // namespace

void ExperimentConfig::validate() const {
  for (auto h : hidden_sizes)
    if (h == 0) throw ConfigError("model.hidden_sizes entries must be positive");
  if (data.num_classes() < 1) throw ConfigError("data: num_classes must be >= 1");
  if (!(data.val_fraction > 0.0 && data.val_fraction < 1.0)) throw ConfigError("data.val_fraction must be in (0, 1)");
  if (data.source == DataSource::Synthetic) {
    const auto& s = data.synthetic;
    if (s.num_classes < 2) throw ConfigError("data.synthetic.num_classes must be >= 2");
    if (s.train_per_class < 1 || s.test_per_class < 1) throw ConfigError("data.synthetic sample counts must be >= 1");
    if (s.ood.empty()) throw ConfigError("data.synthetic.ood must list at least one OOD set");
    for (const auto& r : s.ood) {
      if (r.radius <= s.mean_radius) {
        throw ConfigError("OOD ring '" + r.name + "' radius must exceed the ID mean radius");
      }
    }
  } else {
    const auto& c = data.csv;
    if (c.id_train.empty() || c.id_test.empty()) throw ConfigError("data.csv needs id_train and id_test paths");
    if (c.ood.empty()) throw ConfigError("data.csv.ood must list at least one OOD file");
    if (flags.aux_data && c.aux_ood.empty()) throw ConfigError("flags.aux_data set but data.csv.aux_ood is empty");
  }
  if (weights.generative < 0.0 || weights.margin < 0.0) throw ConfigError("loss weights must be >= 0");
  if (!std::isfinite(margin.m_in) || !std::isfinite(margin.m_out)) throw ConfigError("margins must be finite");
  if (flags.margin && !flags.aux_data) throw ConfigError("flags.margin requires flags.aux_data");
  if (!(sgld.step_size > 0.0)) throw ConfigError("sgld.step_size must be > 0");
  if (sgld.n_steps < 1) throw ConfigError("sgld.n_steps must be >= 1");
  if (!(sgld.reinit_prob >= 0.0 && sgld.reinit_prob <= 1.0)) throw ConfigError("sgld.reinit_prob must be in [0, 1]");
  if (buffer_capacity < 1) throw ConfigError("sgld.buffer_capacity must be >= 1");
  if (schedule.epochs < 1) throw ConfigError("schedule.epochs must be >= 1");
  if (schedule.batch_size < 1) throw ConfigError("schedule.batch_size must be >= 1");
  if (schedule.checkpoint_every < 0) throw ConfigError("schedule.checkpoint_every must be >= 0");
  if (!(eval.target_tpr > 0.0 && eval.target_tpr <= 1.0)) throw ConfigError("eval.target_tpr must be in (0, 1]");
  if (eval.histogram_bins < 1) throw ConfigError("eval.histogram_bins must be >= 1");
  effective_sam().validate();
}

SamConfig ExperimentConfig::effective_sam() const {
  SamConfig s = sam;
  s.enabled = flags.sam;
  s.warmup_steps = schedule.warmup_steps;
  s.decay_epochs = schedule.decay_epochs;
  s.decay_factor = schedule.decay_factor;
  return s;
}

json to_json(const ExperimentConfig& c) {
  json ood = json::array();
  for (const auto& r : c.data.synthetic.ood) {
    ood.push_back({{"name", r.name}, {"n", r.n}, {"radius", r.radius}, {"noise_std", r.noise_std}, {"seed", r.seed}});
  }
  json csv_ood = json::array();
  for (const auto& o : c.data.csv.ood) csv_ood.push_back({{"name", o.name}, {"path", o.path}});
  const auto& s = c.data.synthetic;
  return {
      {"name", c.name},
      {"seed", c.seed},
      {"output_dir", c.output_dir},
      {"model", {{"hidden_sizes", c.hidden_sizes}}},
      {"data",
       {{"source", c.data.source == DataSource::Synthetic ? "synthetic" : "csv"},
        {"val_fraction", c.data.val_fraction},
        {"synthetic",
         {{"num_classes", s.num_classes},
          {"dim", s.dim},
          {"train_per_class", s.train_per_class},
          {"test_per_class", s.test_per_class},
          {"mean_radius", s.mean_radius},
          {"class_std", s.class_std},
          {"aux_n", s.aux_n},
          {"aux_box_halfwidth", s.aux_box_halfwidth},
          {"aux_exclusion_radius", s.aux_exclusion_radius},
          {"ood", ood},
          {"seed", s.seed}}},
        {"csv",
         {{"num_classes", c.data.csv.num_classes},
          {"id_train", c.data.csv.id_train},
          {"id_test", c.data.csv.id_test},
          {"aux_ood", c.data.csv.aux_ood},
          {"ood", csv_ood}}}}},
      {"loss",
       {{"lambda_generative", c.weights.generative},
        {"lambda_margin", c.weights.margin},
        {"m_in", c.margin.m_in},
        {"m_out", c.margin.m_out},
        {"id_margin_energy", c.margin.id_energy == IdMarginEnergy::Joint ? "joint" : "marginal"}}},
      {"sgld",
       {{"step_size", c.sgld.step_size},
        {"n_steps", c.sgld.n_steps},
        {"buffer_capacity", c.buffer_capacity},
        {"reinit_prob", c.sgld.reinit_prob},
        {"divergence_limit", c.sgld.divergence_limit}}},
      {"sam", {{"rho", c.sam.rho}, {"beta", c.sam.beta}, {"base_lr", c.sam.base_lr}, {"momentum", c.sam.momentum}}},
      {"schedule",
       {{"epochs", c.schedule.epochs},
        {"batch_size", c.schedule.batch_size},
        {"warmup_steps", c.schedule.warmup_steps},
        {"decay_epochs", c.schedule.decay_epochs},
        {"decay_factor", c.schedule.decay_factor},
        {"checkpoint_every", c.schedule.checkpoint_every}}},
      {"flags",
       {{"generative", c.flags.generative},
        {"margin", c.flags.margin},
        {"sam", c.flags.sam},
        {"aux_data", c.flags.aux_data}}},
      {"eval", {{"target_tpr", c.eval.target_tpr}, {"histogram_bins", c.eval.histogram_bins}}},
  };
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  reject_unknown(j, {"name", "seed", "output_dir", "model", "data", "loss", "sgld", "sam", "schedule", "flags", "eval"},
                 "");
  read(j, "name", c.name);
  read(j, "seed", c.seed);
  read(j, "output_dir", c.output_dir);

  const auto& model = section(j, "model");
  reject_unknown(model, {"hidden_sizes"}, "model");
  read(model, "hidden_sizes", c.hidden_sizes);

  const auto& data = section(j, "data");
  reject_unknown(data, {"source", "val_fraction", "synthetic", "csv"}, "data");
  std::string source = "synthetic";
  read(data, "source", source);
  if (source == "synthetic") {
    c.data.source = DataSource::Synthetic;
  } else if (source == "csv") {
    c.data.source = DataSource::Csv;
  } else {
    throw ConfigError("data.source must be 'synthetic' or 'csv'");
  }
  read(data, "val_fraction", c.data.val_fraction);

  const auto& syn = section(data, "synthetic");
  reject_unknown(syn,
                 {"num_classes", "dim", "train_per_class", "test_per_class", "mean_radius", "class_std", "aux_n",
                  "aux_box_halfwidth", "aux_exclusion_radius", "ood", "seed"},
                 "data.synthetic");
  auto& s = c.data.synthetic;
  read(syn, "num_classes", s.num_classes);
  read(syn, "dim", s.dim);
  read(syn, "train_per_class", s.train_per_class);
  read(syn, "test_per_class", s.test_per_class);
  read(syn, "mean_radius", s.mean_radius);
  read(syn, "class_std", s.class_std);
  read(syn, "aux_n", s.aux_n);
  read(syn, "aux_box_halfwidth", s.aux_box_halfwidth);
  read(syn, "aux_exclusion_radius", s.aux_exclusion_radius);
  read(syn, "seed", s.seed);
  if (syn.contains("ood")) {
    s.ood.clear();
    for (const auto& r : syn.at("ood")) {
      reject_unknown(r, {"name", "n", "radius", "noise_std", "seed"}, "data.synthetic.ood[]");
      RingSpec spec;
      read(r, "name", spec.name);
      read(r, "n", spec.n);
      read(r, "radius", spec.radius);
      read(r, "noise_std", spec.noise_std);
      read(r, "seed", spec.seed);
      s.ood.push_back(spec);
    }
  }

  const auto& csv = section(data, "csv");
  reject_unknown(csv, {"num_classes", "id_train", "id_test", "aux_ood", "ood"}, "data.csv");
  read(csv, "num_classes", c.data.csv.num_classes);
  read(csv, "id_train", c.data.csv.id_train);
  read(csv, "id_test", c.data.csv.id_test);
  read(csv, "aux_ood", c.data.csv.aux_ood);
  if (csv.contains("ood")) {
    for (const auto& o : csv.at("ood")) {
      reject_unknown(o, {"name", "path"}, "data.csv.ood[]");
      CsvOodSource src;
      read(o, "name", src.name);
      read(o, "path", src.path);
      c.data.csv.ood.push_back(src);
    }
  }

  const auto& loss = section(j, "loss");
  reject_unknown(loss, {"lambda_generative", "lambda_margin", "m_in", "m_out", "id_margin_energy"}, "loss");
  read(loss, "lambda_generative", c.weights.generative);
  read(loss, "lambda_margin", c.weights.margin);
  read(loss, "m_in", c.margin.m_in);
  read(loss, "m_out", c.margin.m_out);
  std::string id_energy = "marginal";
  read(loss, "id_margin_energy", id_energy);
  if (id_energy == "marginal") {
    c.margin.id_energy = IdMarginEnergy::Marginal;
  } else if (id_energy == "joint") {
    c.margin.id_energy = IdMarginEnergy::Joint;
  } else {
    throw ConfigError("loss.id_margin_energy must be 'marginal' or 'joint'");
  }

  const auto& sgld = section(j, "sgld");
  reject_unknown(sgld, {"step_size", "n_steps", "buffer_capacity", "reinit_prob", "divergence_limit"}, "sgld");
  read(sgld, "step_size", c.sgld.step_size);
  read(sgld, "n_steps", c.sgld.n_steps);
  read(sgld, "buffer_capacity", c.buffer_capacity);
  read(sgld, "reinit_prob", c.sgld.reinit_prob);
  read(sgld, "divergence_limit", c.sgld.divergence_limit);

  const auto& sam = section(j, "sam");
  reject_unknown(sam, {"rho", "beta", "base_lr", "momentum"}, "sam");
  read(sam, "rho", c.sam.rho);
  read(sam, "beta", c.sam.beta);
  read(sam, "base_lr", c.sam.base_lr);
  read(sam, "momentum", c.sam.momentum);

  const auto& sched = section(j, "schedule");
  reject_unknown(sched, {"epochs", "batch_size", "warmup_steps", "decay_epochs", "decay_factor", "checkpoint_every"},
                 "schedule");
  read(sched, "epochs", c.schedule.epochs);
  read(sched, "batch_size", c.schedule.batch_size);
  read(sched, "warmup_steps", c.schedule.warmup_steps);
  read(sched, "decay_epochs", c.schedule.decay_epochs);
  read(sched, "decay_factor", c.schedule.decay_factor);
  read(sched, "checkpoint_every", c.schedule.checkpoint_every);

  const auto& flags = section(j, "flags");
  reject_unknown(flags, {"generative", "margin", "sam", "aux_data"}, "flags");
  read(flags, "generative", c.flags.generative);
  read(flags, "margin", c.flags.margin);
  read(flags, "sam", c.flags.sam);
  read(flags, "aux_data", c.flags.aux_data);

  const auto& ev = section(j, "eval");
  reject_unknown(ev, {"target_tpr", "histogram_bins"}, "eval");
  read(ev, "target_tpr", c.eval.target_tpr);
  read(ev, "histogram_bins", c.eval.histogram_bins);

  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

void save_config(const std::filesystem::path& path, const ExperimentConfig& cfg) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write config file " + path.string());
  out << to_json(cfg).dump(2) << '\n';
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash(const ExperimentConfig& cfg) {
  json j = to_json(cfg);
  j.erase("output_dir");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(j.dump())));
  return buf;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over (seed, stream)
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace mejem
