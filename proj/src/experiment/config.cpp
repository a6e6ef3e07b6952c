#include "fedcgau/experiment/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "fedcgau/data/io.hpp"
#include "fedcgau/data/split.hpp"
#include "fedcgau/error.hpp"
#include "fedcgau/seed.hpp"
#include "json.hpp"

namespace fedcgau::experiment {
namespace {

using nlohmann::json;
using ordered = nlohmann::ordered_json;

// Walks one JSON object, remembering which keys were read.
class Fields {
 public:
  Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) throw ConfigError(path_ + ": expected an object");
  }
  // Rejects keys that were never looked up.
  void finish() const {
    for (const auto& [key, _] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError(path_ + "." + key + ": unknown key");
    }
  }
  const json* find(const std::string& key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() || it->is_null() ? nullptr : &*it;
  }
  std::string at(const std::string& key) const { return path_ + "." + key; }

  template <class T>
  void get(const std::string& key, T& out) {
    const json* v = find(key);
    if (!v) return;
    try {
      if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
        if (!v->is_number_unsigned()) throw ConfigError(at(key) + ": expected a non-negative integer");
      } else if constexpr (std::is_same_v<T, double>) {
        if (!v->is_number()) throw ConfigError(at(key) + ": expected a number");
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!v->is_boolean()) throw ConfigError(at(key) + ": expected a boolean");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v->is_string()) throw ConfigError(at(key) + ": expected a string");
      }
      out = v->get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(at(key) + ": " + e.what());
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_relative() && !base.empty() ? base / path : path;
}

void parse_dataset(const json& j, const std::filesystem::path& base, DatasetConfig& d) {
  Fields f(j, "dataset");
  std::string kind = "synthetic";
  f.get("kind", kind);
  f.get("test_fraction", d.test_fraction);
  if (kind == "synthetic") {
    d.kind = DatasetKind::kSynthetic;
    auto& b = d.blobs;
    f.get("num_classes", b.num_classes);
    f.get("blobs_per_class", b.blobs_per_class);
    f.get("samples_per_blob", b.samples_per_blob);
    f.get("dim", b.dim);
    f.get("separation", b.separation);
    f.get("spread", b.spread);
    f.get("class_offset", b.class_offset);
    f.get("seed", b.seed);
  } else if (kind == "emb1" || kind == "csv") {
    d.kind = kind == "emb1" ? DatasetKind::kEmb1 : DatasetKind::kCsv;
    std::string train, test;
    f.get("train", train);
    f.get("test", test);
    if (train.empty()) throw ConfigError("dataset.train: required for file datasets");
    d.train_path = resolve(base, train);
    if (!test.empty()) d.test_path = resolve(base, test);
  } else {
    throw ConfigError("dataset.kind: expected synthetic, emb1 or csv, got " + kind);
  }
  f.finish();
}

void parse_model(const json& j, ModelConfig& m) {
  Fields f(j, "model");
  f.get("hidden_units", m.hidden_units);
  f.get("dropout", m.dropout);
  std::string task = "auto";
  f.get("task", task);
  if (task == "auto") {
    m.task = TaskChoice::kAuto;
  } else if (task == "binary") {
    m.task = TaskChoice::kBinary;
  } else if (task == "multiclass") {
    m.task = TaskChoice::kMulticlass;
  } else {
    throw ConfigError("model.task: expected auto, binary or multiclass, got " + task);
  }
  f.finish();
}

void parse_federated(const json& j, fed::FederatedConfig& c) {
  Fields f(j, "federated");
  f.get("num_clients", c.num_clients);
  c.clients_per_round = c.num_clients;
  f.get("clients_per_round", c.clients_per_round);
  f.get("local_steps", c.local_steps);
  f.get("batch_size", c.batch_size);
  f.get("rounds", c.rounds);
  f.get("learning_rate", c.learning_rate);
  std::string averaging = "sample_weighted";
  f.get("averaging", averaging);
  if (averaging == "sample_weighted") {
    c.averaging = fed::Averaging::kSampleWeighted;
  } else if (averaging == "uniform") {
    c.averaging = fed::Averaging::kUniform;
  } else {
    throw ConfigError("federated.averaging: expected sample_weighted or uniform, got " + averaging);
  }
  std::string metric = "accuracy";
  f.get("metric", metric);
  if (metric == "accuracy") {
    c.metric = fed::Metric::kAccuracy;
  } else if (metric == "auc") {
    c.metric = fed::Metric::kAuc;
  } else {
    throw ConfigError("federated.metric: expected accuracy or auc, got " + metric);
  }
  if (const json* m = f.find("momentum")) {
    Fields mf(*m, "federated.momentum");
    fed::MomentumConfig mc;
    mf.get("coefficient", mc.coefficient);
    mf.get("reset_each_round", mc.reset_each_round);
    mf.finish();
    c.momentum = mc;
  }
  f.finish();
}

void parse_simulation(const json& j, SimulationConfig& s) {
  Fields f(j, "simulation");
  f.get("pca_components", s.pca_components);
  std::string space = "pca";
  f.get("hetero_space", space);
  if (space == "pca") {
    s.hetero_space = HeteroSpace::kPca;
  } else if (space == "full") {
    s.hetero_space = HeteroSpace::kFull;
  } else {
    throw ConfigError("simulation.hetero_space: expected pca or full, got " + space);
  }
  f.finish();
}

void parse_xor(const json& j, XorConfig& x) {
  Fields f(j, "xor");
  f.get("samples_per_cluster", x.samples_per_cluster);
  f.get("spread", x.spread);
  f.get("rounds", x.rounds);
  f.get("local_steps", x.local_steps);
  f.get("batch_size", x.batch_size);
  f.get("learning_rate", x.learning_rate);
  f.get("mlp_restarts", x.mlp_restarts);
  f.get("grid_size", x.grid_size);
  f.get("grid_extent", x.grid_extent);
  f.finish();
}

std::string task_name(TaskChoice t) {
  switch (t) {
    case TaskChoice::kBinary: return "binary";
    case TaskChoice::kMulticlass: return "multiclass";
    default: return "auto";
  }
}

}  // namespace

ExperimentConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config: ") + e.what(), e.byte == 0 ? 0 : e.byte - 1);
  }
  ExperimentConfig c;
  {
    Fields f(j, "config");
    f.get("seed", c.seed);
    f.get("val_fraction", c.val_fraction);
    f.get("proportions", c.proportions);
    f.get("repetitions", c.repetitions);
    f.get("threads", c.threads);
    std::string out;
    f.get("output_dir", out);
    if (!out.empty()) c.output_dir = resolve(base_dir, out);
    if (const json* d = f.find("dataset")) parse_dataset(*d, base_dir, c.dataset);
    if (const json* m = f.find("model")) parse_model(*m, c.model);
    if (const json* fd = f.find("federated")) parse_federated(*fd, c.federated);
    if (const json* s = f.find("simulation")) parse_simulation(*s, c.simulation);
    if (const json* x = f.find("xor")) parse_xor(*x, c.xor_demo);
    f.finish();
  }
  c.federated.seed = c.seed;
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

void validate(const ExperimentConfig& c) {
  fed::validate(c.federated);
  if (c.repetitions == 0) throw ConfigError("repetitions must be at least 1");
  if (c.proportions.empty()) throw ConfigError("proportions must not be empty");
  for (double p : c.proportions) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("proportion " + std::to_string(p) + " outside [0, 1]");
  }
  if (!(c.val_fraction >= 0.0 && c.val_fraction < 1.0)) throw ConfigError("val_fraction must be in [0, 1)");
  if (c.model.hidden_units.empty()) throw ConfigError("model.hidden_units must list at least one layer");
  for (std::size_t u : c.model.hidden_units)
    if (u == 0) throw ConfigError("model.hidden_units entries must be positive");
  if (!(c.model.dropout >= 0.0 && c.model.dropout < 1.0)) throw ConfigError("model.dropout must be in [0, 1)");
  if (c.simulation.pca_components == 0) throw ConfigError("simulation.pca_components must be positive");
  if (!(c.dataset.test_fraction > 0.0 && c.dataset.test_fraction < 1.0)) {
    throw ConfigError("dataset.test_fraction must be in (0, 1)");
  }
  if (c.threads == 0) throw ConfigError("threads must be at least 1");
  const auto& x = c.xor_demo;
  if (x.samples_per_cluster == 0 || x.rounds == 0 || x.local_steps == 0 || x.batch_size == 0 || x.grid_size < 2 ||
      x.mlp_restarts == 0) {
    throw ConfigError("xor: counts must be positive and grid_size at least 2");
  }
  if (!(x.learning_rate > 0.0) || !(x.spread >= 0.0) || !(x.grid_extent > 0.0)) {
    throw ConfigError("xor: learning_rate and grid_extent must be positive, spread non-negative");
  }
}

std::string to_json(const ExperimentConfig& c) {
  ordered j;
  j["seed"] = c.seed;
  ordered d;
  switch (c.dataset.kind) {
    case DatasetKind::kSynthetic: {
      const auto& b = c.dataset.blobs;
      d["kind"] = "synthetic";
      d["num_classes"] = b.num_classes;
      d["blobs_per_class"] = b.blobs_per_class;
      d["samples_per_blob"] = b.samples_per_blob;
      d["dim"] = b.dim;
      d["separation"] = b.separation;
      d["spread"] = b.spread;
      d["class_offset"] = b.class_offset;
      d["seed"] = b.seed;
      break;
    }
    case DatasetKind::kEmb1:
    case DatasetKind::kCsv:
      d["kind"] = c.dataset.kind == DatasetKind::kEmb1 ? "emb1" : "csv";
      d["train"] = c.dataset.train_path.generic_string();
      if (!c.dataset.test_path.empty()) d["test"] = c.dataset.test_path.generic_string();
      break;
  }
  d["test_fraction"] = c.dataset.test_fraction;
  j["dataset"] = d;
  j["model"] = {{"hidden_units", c.model.hidden_units}, {"dropout", c.model.dropout}, {"task", task_name(c.model.task)}};
  const auto& f = c.federated;
  ordered fj;
  fj["num_clients"] = f.num_clients;
  fj["clients_per_round"] = f.clients_per_round;
  fj["local_steps"] = f.local_steps;
  fj["batch_size"] = f.batch_size;
  fj["rounds"] = f.rounds;
  fj["learning_rate"] = f.learning_rate;
  fj["averaging"] = f.averaging == fed::Averaging::kUniform ? "uniform" : "sample_weighted";
  fj["metric"] = std::string(fed::metric_name(f.metric));
  if (f.momentum) {
    fj["momentum"] = ordered{{"coefficient", f.momentum->coefficient}, {"reset_each_round", f.momentum->reset_each_round}};
  } else {
    fj["momentum"] = nullptr;
  }
  j["federated"] = fj;
  j["val_fraction"] = c.val_fraction;
  j["simulation"] = {{"pca_components", c.simulation.pca_components},
                     {"hetero_space", c.simulation.hetero_space == HeteroSpace::kPca ? "pca" : "full"}};
  j["proportions"] = c.proportions;
  j["repetitions"] = c.repetitions;
  return j.dump(2);
}

nn::Task resolve_task(TaskChoice choice, std::size_t num_classes) {
  switch (choice) {
    case TaskChoice::kBinary:
      if (num_classes != 2) throw ConfigError("binary task needs exactly 2 classes, got " + std::to_string(num_classes));
      return nn::Task::kBinary;
    case TaskChoice::kMulticlass: return nn::Task::kMulticlass;
    default: return num_classes == 2 ? nn::Task::kBinary : nn::Task::kMulticlass;
  }
}

TrainTest load_dataset(const ExperimentConfig& c) {
  data::EmbeddingDataset all;
  switch (c.dataset.kind) {
    case DatasetKind::kSynthetic: all = data::synth_blobs(c.dataset.blobs).dataset; break;
    case DatasetKind::kEmb1: all = data::load_emb1(c.dataset.train_path.string()); break;
    case DatasetKind::kCsv: all = data::load_csv(c.dataset.train_path.string()); break;
  }
  if (!c.dataset.test_path.empty()) {
    data::EmbeddingDataset test = c.dataset.kind == DatasetKind::kEmb1 ? data::load_emb1(c.dataset.test_path.string())
                                                                       : data::load_csv(c.dataset.test_path.string());
    if (test.dim() != all.dim()) throw DimensionError("test features have a different width than train features");
    test.num_classes = std::max(test.num_classes, all.num_classes);
    all.num_classes = test.num_classes;
    return {std::move(all), std::move(test)};
  }
  const double fractions[2] = {1.0 - c.dataset.test_fraction, c.dataset.test_fraction};
  const auto parts = data::split(all.labels, fractions, true, derive_seed(c.seed, "test-split"));
  return {data::subset(all, parts[0]), data::subset(all, parts[1])};
}

}  // namespace fedcgau::experiment
