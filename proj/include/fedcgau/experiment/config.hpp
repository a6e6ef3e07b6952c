#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fedcgau/data/dataset.hpp"
#include "fedcgau/data/synth.hpp"
#include "fedcgau/fed/federated.hpp"
#include "fedcgau/nn/model.hpp"

namespace fedcgau::experiment {

enum class DatasetKind { kSynthetic, kEmb1, kCsv };

struct DatasetConfig {
  DatasetKind kind = DatasetKind::kSynthetic;
  data::BlobSpec blobs;             // synthetic only
  std::filesystem::path train_path; // file datasets
  std::filesystem::path test_path;  // optional; split from train when empty
  double test_fraction = 0.2;
};

enum class TaskChoice { kAuto, kBinary, kMulticlass };

struct ModelConfig {
  std::vector<std::size_t> hidden_units{16};
  double dropout = 0.0;
  TaskChoice task = TaskChoice::kAuto;  // auto: binary head for two classes
};

enum class HeteroSpace { kPca, kFull };

struct SimulationConfig {
  std::size_t pca_components = 2;
  HeteroSpace hetero_space = HeteroSpace::kPca;
};

struct XorConfig {
  std::size_t samples_per_cluster = 200;
  double spread = 0.25;
  std::size_t rounds = 2000;
  std::size_t local_steps = 10;
  std::size_t batch_size = 32;
  double learning_rate = 0.1;
  // The two-unit ReLU net stalls in a non-separating solution from many
  // initializations; it is retrained from fresh seeds up to this many times.
  std::size_t mlp_restarts = 10;
  std::size_t grid_size = 41;
  double grid_extent = 2.0;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  DatasetConfig dataset;
  ModelConfig model;
  fed::FederatedConfig federated;
  double val_fraction = 0.05;
  SimulationConfig simulation;
  std::vector<double> proportions{0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
  std::size_t repetitions = 1;
  std::size_t threads = 1;
  XorConfig xor_demo;
  std::filesystem::path output_dir;  // may stay empty; --out sets it
};

// Strict parse: unknown keys and wrong types raise ConfigError. Relative file
// paths resolve against `base_dir`.
ExperimentConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);
// Throws ConfigError on violated invariants.
void validate(const ExperimentConfig& config);
// Canonical JSON form, keys in a fixed order.
std::string to_json(const ExperimentConfig& config);

nn::Task resolve_task(TaskChoice choice, std::size_t num_classes);

struct TrainTest {
  data::EmbeddingDataset train;
  data::EmbeddingDataset test;
};
// Loads or generates the dataset and applies the stratified test split when
// no separate test file is configured.
TrainTest load_dataset(const ExperimentConfig& config);

}  // namespace fedcgau::experiment
