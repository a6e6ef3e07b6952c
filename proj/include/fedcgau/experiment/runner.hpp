#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fedcgau/experiment/config.hpp"
#include "fedcgau/hetero/frechet.hpp"
#include "fedcgau/simclients/simulate.hpp"

namespace fedcgau::experiment {

enum class ModelKind { kCgau, kBaseline };
inline constexpr std::array<ModelKind, 2> kModelKinds{ModelKind::kCgau, ModelKind::kBaseline};
std::string_view model_kind_name(ModelKind kind) noexcept;

struct SweepRow {
  double proportion = 0.0;
  std::size_t proportion_index = 0;
  std::size_t repetition = 0;
  ModelKind model_kind = ModelKind::kCgau;
  double test_metric = 0.0;
  double gamma = 0.0;
  std::size_t best_round = 0;
};

struct SweepResult {
  std::vector<SweepRow> rows;  // proportion index, repetition, model kind order
  // Mean test metric per proportion index and model kind.
  double mean_metric(std::size_t proportion_index, ModelKind kind) const;
};

// Creates `out` and checks that it is writable. Throws Error otherwise.
void prepare_output_dir(const std::filesystem::path& out);

// Every (proportion, repetition, model kind) cell: simulate clients, shuffle,
// train federated, evaluate the best-validation model on the test split.
// Writes summary.csv, summary.json and rounds/<cell>.csv under `out`.
SweepResult run_sweep(const ExperimentConfig& config, const std::filesystem::path& out);

struct HeteroEntry {
  double proportion = 0.0;
  std::size_t repetition = 0;
  hetero::HeterogeneityReport report;
};

// Gamma per (proportion, repetition) in the configured space, or for one given
// training assignment. Writes hetero.json under `out` when it is non-empty.
std::vector<HeteroEntry> run_hetero(const ExperimentConfig& config, const std::filesystem::path& out,
                                    const std::optional<simclients::ClientAssignment>& assignment = std::nullopt);

// Client assignments (repetition 0) per proportion plus a class histogram.
void run_simulate(const ExperimentConfig& config, const std::filesystem::path& out);

struct XorReport {
  std::array<double, 2> mlp_accuracy{};
  std::array<double, 2> cgau_accuracy{};
  std::size_t mlp_attempts = 1;
  // max |logit(full) - logit(ablated)| over the grid and both clients
  double filter_ablation_change = 0.0;
  double gate_ablation_change = 0.0;
  std::size_t grid_rows = 0;
};

// Two-client XOR: a two-unit ReLU MLP and a one-unit CGAU model, both trained
// with FedAvg. Writes xor_report.json and xor_grid.csv when `out` is non-empty.
XorReport run_xor(const ExperimentConfig& config, const std::filesystem::path& out);

}  // namespace fedcgau::experiment
