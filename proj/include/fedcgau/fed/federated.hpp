#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "fedcgau/data/dataset.hpp"
#include "fedcgau/fed/metrics.hpp"
#include "fedcgau/nn/model.hpp"
#include "fedcgau/nn/optimizer.hpp"

namespace fedcgau::fed {

enum class Averaging { kUniform, kSampleWeighted };

struct MomentumConfig {
  double coefficient = 0.9;
  bool reset_each_round = true;
};

struct FederatedConfig {
  std::size_t num_clients = 10;        // K
  std::size_t clients_per_round = 10;
  std::size_t local_steps = 10;        // E
  std::size_t batch_size = 32;
  std::size_t rounds = 1000;
  double learning_rate = 0.01;
  std::uint64_t seed = 0;
  Averaging averaging = Averaging::kSampleWeighted;
  std::optional<MomentumConfig> momentum;
  Metric metric = Metric::kAccuracy;
  std::size_t threads = 1;
};

// Throws ConfigError on violated invariants.
void validate(const FederatedConfig& config);

struct ClientData {
  Matrix x_train;
  std::vector<int> y_train;
  Matrix x_val;
  std::vector<int> y_val;
};

// Conditioning rows a client owns: row k of V_f and V_g for one CGAU layer.
struct ConditioningRows {
  std::vector<double> filter;
  std::vector<double> gate;
};

struct ClientState {
  std::size_t client_id = 0;
  ClientData data;
  std::vector<ConditioningRows> conditioning;  // one entry per CGAU layer
  std::optional<nn::MomentumState> momentum;
  std::size_t times_sampled = 0;
};

// Splits a client-assigned training set into per-client train/validation
// slices (stratified holdout of `val_fraction` per client). Conditioning rows
// are taken from row k of the template's V matrices.
std::vector<ClientState> make_clients(const data::EmbeddingDataset& train, std::span<const std::uint32_t> assignment,
                                      const nn::ClassifierModel& model_template, double val_fraction,
                                      std::uint64_t seed);

struct RoundRecord {
  std::size_t round = 0;
  std::vector<std::size_t> participants;        // ascending client ids
  std::vector<double> client_train_loss;        // aligned with participants
  double mean_client_train_loss = 0.0;
  double val_loss = 0.0;                        // NaN without validation data
  double val_metric = 0.0;                      // NaN when undefined
};

struct FederatedResult {
  nn::ClassifierModel best_model;   // shared + every client's rows, lowest val loss
  std::size_t best_round = 0;
  double best_val_loss = 0.0;
  nn::ClassifierModel final_model;
  std::vector<RoundRecord> records;
  std::vector<ClientState> clients;
};

// Server-side FedAvg reduction. Overwrites the shared blocks of `target` with
// the weighted mean of the corresponding blocks of `params`; conditioning
// blocks of `target` are left as they are. The sum runs in list order and is
// anchored on the heaviest entry, so identical inputs come back unchanged and
// a weight of 1 on one entry returns it exactly.
void average_shared(nn::ModelParams& target, std::span<const nn::ModelParams> params, std::span<const double> weights);

// Global shared parameters combined with every client's conditioning rows.
nn::ClassifierModel assemble_model(const nn::ClassifierModel& global, std::span<const ClientState> clients);

FederatedResult run_federated(const nn::ClassifierModel& model_template, std::vector<ClientState> clients,
                              const FederatedConfig& config);

// Per-round metrics: round,mean_client_train_loss,val_loss,val_metric
void write_round_csv(std::span<const RoundRecord> records, std::ostream& out);

}  // namespace fedcgau::fed
