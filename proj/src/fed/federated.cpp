#include "fedcgau/fed/federated.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <string>

#include "fedcgau/data/split.hpp"
#include "fedcgau/error.hpp"
#include "fedcgau/parallel.hpp"
#include "fedcgau/seed.hpp"
#include "fedcgau/text.hpp"

namespace fedcgau::fed {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<nn::CgauLayer*> cgau_layers(nn::ModelParams& p) {
  std::vector<nn::CgauLayer*> out;
  for (auto& layer : p.hidden)
    if (auto* c = std::get_if<nn::CgauLayer>(&layer)) out.push_back(c);
  return out;
}

void inject_rows(nn::ModelParams& p, const ClientState& client) {
  const auto layers = cgau_layers(p);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& rows = client.conditioning[l];
    std::copy(rows.filter.begin(), rows.filter.end(), layers[l]->v_filter.row(client.client_id).begin());
    std::copy(rows.gate.begin(), rows.gate.end(), layers[l]->v_gate.row(client.client_id).begin());
  }
}

void extract_rows(nn::ModelParams& p, ClientState& client) {
  const auto layers = cgau_layers(p);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto f = layers[l]->v_filter.row(client.client_id);
    const auto g = layers[l]->v_gate.row(client.client_id);
    client.conditioning[l].filter.assign(f.begin(), f.end());
    client.conditioning[l].gate.assign(g.begin(), g.end());
  }
}

void zero_conditioning(nn::ModelParams& p) {
  for (auto& b : nn::param_blocks(p))
    if (b.role == nn::BlockRole::kConditioning) std::fill(b.values.begin(), b.values.end(), 0.0);
}

struct LocalUpdate {
  nn::ModelParams params;
  double mean_loss = 0.0;
};

LocalUpdate train_client(const nn::ClassifierModel& global, ClientState& client, const FederatedConfig& config,
                         std::size_t round) {
  nn::ClassifierModel local = global;
  inject_rows(local.params, client);

  if (client.momentum && config.momentum->reset_each_round) client.momentum->reset();

  const std::size_t n = client.data.y_train.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 batch_rng(derive_seed(config.seed, "local-batches", {round, client.client_id}));
  std::shuffle(order.begin(), order.end(), batch_rng);
  std::mt19937_64 dropout_rng(derive_seed(config.seed, "local-dropout", {round, client.client_id}));

  const nn::ClientOneHot h(client.client_id, config.num_clients);
  const std::size_t batches = (n + config.batch_size - 1) / config.batch_size;
  const std::size_t steps = std::min(config.local_steps, batches);
  double loss_sum = 0.0;
  std::vector<int> labels;
  for (std::size_t s = 0; s < steps; ++s) {
    const std::size_t begin = s * config.batch_size;
    const std::size_t end = std::min(n, begin + config.batch_size);
    std::vector<std::size_t> batch(order.begin() + static_cast<std::ptrdiff_t>(begin),
                                   order.begin() + static_cast<std::ptrdiff_t>(end));
    // canonical order inside a batch; a full batch is then the identity order
    std::sort(batch.begin(), batch.end());
    const Matrix x = client.data.x_train.select_rows(batch);
    labels.clear();
    for (std::size_t i : batch) labels.push_back(client.data.y_train[i]);
    auto lg = nn::loss_and_gradients(local, x, labels, h, dropout_rng);
    loss_sum += lg.loss;
    nn::sgd_step(local.params, lg.gradients, config.learning_rate, client.momentum ? &*client.momentum : nullptr);
  }
  extract_rows(local.params, client);
  ++client.times_sampled;
  return {std::move(local.params), steps > 0 ? loss_sum / static_cast<double>(steps) : kNaN};
}

}  // namespace

void validate(const FederatedConfig& c) {
  if (c.num_clients == 0) throw ConfigError("num_clients must be at least 1");
  if (c.clients_per_round == 0 || c.clients_per_round > c.num_clients) {
    throw ConfigError("clients_per_round " + std::to_string(c.clients_per_round) + " must be in [1, K=" +
                      std::to_string(c.num_clients) + "]");
  }
  if (c.local_steps == 0) throw ConfigError("local_steps must be at least 1");
  if (c.batch_size == 0) throw ConfigError("batch_size must be at least 1");
  if (!(c.learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (c.momentum && !(c.momentum->coefficient >= 0.0 && c.momentum->coefficient < 1.0)) {
    throw ConfigError("momentum coefficient must be in [0, 1)");
  }
}

std::vector<ClientState> make_clients(const data::EmbeddingDataset& train, std::span<const std::uint32_t> assignment,
                                      const nn::ClassifierModel& model_template, double val_fraction,
                                      std::uint64_t seed) {
  if (assignment.size() != train.size()) throw DimensionError("make_clients: assignment length differs from dataset");
  const std::size_t k = model_template.num_clients;
  std::vector<std::vector<std::size_t>> members(k);
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (assignment[i] >= k) throw RangeError("make_clients: client id " + std::to_string(assignment[i]) + " >= K");
    members[assignment[i]].push_back(i);
  }
  nn::ModelParams tmpl = model_template.params;
  const auto layers = cgau_layers(tmpl);

  std::vector<ClientState> clients(k);
  for (std::size_t c = 0; c < k; ++c) {
    auto& state = clients[c];
    state.client_id = c;
    std::vector<int> labels;
    for (std::size_t i : members[c]) labels.push_back(train.labels[i]);
    const auto holdout = data::stratified_holdout(labels, val_fraction, derive_seed(seed, "validation-holdout", {c}));
    std::vector<std::size_t> tr, va;
    for (std::size_t i : holdout.train) tr.push_back(members[c][i]);
    for (std::size_t i : holdout.validation) va.push_back(members[c][i]);
    state.data.x_train = train.features.select_rows(tr);
    state.data.x_val = train.features.select_rows(va);
    for (std::size_t i : tr) state.data.y_train.push_back(train.labels[i]);
    for (std::size_t i : va) state.data.y_val.push_back(train.labels[i]);
    for (const auto* layer : layers) {
      const auto f = layer->v_filter.row(c);
      const auto g = layer->v_gate.row(c);
      state.conditioning.push_back({{f.begin(), f.end()}, {g.begin(), g.end()}});
    }
  }
  return clients;
}

void average_shared(nn::ModelParams& target, std::span<const nn::ModelParams> params, std::span<const double> weights) {
  if (params.empty() || params.size() != weights.size()) {
    throw DimensionError("average_shared: need equally many (non-zero) parameter sets and weights");
  }
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw RangeError("average_shared: weights must be non-negative");
    total += w;
  }
  if (!(total > 0.0)) throw RangeError("average_shared: weights must have a positive sum");
  for (const auto& p : params) nn::require_same_structure(target, p);

  std::size_t anchor = 0;
  for (std::size_t i = 1; i < weights.size(); ++i)
    if (weights[i] > weights[anchor]) anchor = i;

  auto out = nn::param_blocks(target);
  std::vector<std::vector<nn::ConstParamBlock>> in;
  in.reserve(params.size());
  for (const auto& p : params) in.push_back(nn::param_blocks(p));

  for (std::size_t b = 0; b < out.size(); ++b) {
    if (out[b].role != nn::BlockRole::kShared) continue;
    auto dst = out[b].values;
    const auto ref = in[anchor][b].values;
    std::copy(ref.begin(), ref.end(), dst.begin());
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (i == anchor || weights[i] == 0.0) continue;
      const double w = weights[i] / total;
      const auto src = in[i][b].values;
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += w * (src[j] - ref[j]);
    }
  }
}

nn::ClassifierModel assemble_model(const nn::ClassifierModel& global, std::span<const ClientState> clients) {
  nn::ClassifierModel m = global;
  for (const auto& c : clients) inject_rows(m.params, c);
  return m;
}

FederatedResult run_federated(const nn::ClassifierModel& model_template, std::vector<ClientState> clients,
                              const FederatedConfig& config) {
  validate(config);
  nn::validate(model_template);
  if (clients.size() != config.num_clients) {
    throw ConfigError("got " + std::to_string(clients.size()) + " clients for K=" + std::to_string(config.num_clients));
  }
  if (model_template.num_clients != config.num_clients) {
    throw ConfigError("model conditioning dimension K=" + std::to_string(model_template.num_clients) +
                      " differs from config K=" + std::to_string(config.num_clients));
  }
  const std::size_t n_cgau = [&] {
    nn::ModelParams p = model_template.params;
    return cgau_layers(p).size();
  }();
  for (std::size_t k = 0; k < clients.size(); ++k) {
    auto& c = clients[k];
    if (c.client_id != k) throw ConfigError("clients must be ordered by id");
    if (c.data.y_train.empty()) throw ConfigError("client " + std::to_string(k) + " has an empty training dataset");
    if (c.data.x_train.cols() != model_template.input_dim()) {
      throw DimensionError("client " + std::to_string(k) + " data width differs from the model input");
    }
    if (c.conditioning.size() != n_cgau) throw ConfigError("client conditioning rows do not match the model");
    nn::validate_labels(model_template.task, model_template.num_classes, c.data.y_train);
    nn::validate_labels(model_template.task, model_template.num_classes, c.data.y_val);
    if (config.momentum) {
      c.momentum.emplace(config.momentum->coefficient);
    } else {
      c.momentum.reset();
    }
  }

  // pooled validation set, ascending client id
  std::vector<Matrix> val_parts;
  std::vector<int> val_labels;
  std::vector<std::uint32_t> val_clients;
  for (const auto& c : clients) {
    if (c.data.x_val.rows() > 0) val_parts.push_back(c.data.x_val);
    val_labels.insert(val_labels.end(), c.data.y_val.begin(), c.data.y_val.end());
    val_clients.insert(val_clients.end(), c.data.y_val.size(), static_cast<std::uint32_t>(c.client_id));
  }
  const Matrix val_x = val_parts.empty() ? Matrix() : vstack(val_parts);

  nn::ClassifierModel global = model_template;
  zero_conditioning(global.params);

  FederatedResult result;
  result.best_val_loss = std::numeric_limits<double>::infinity();
  bool have_best = false;

  std::vector<std::size_t> ids(config.num_clients);
  for (std::size_t round = 0; round < config.rounds; ++round) {
    std::iota(ids.begin(), ids.end(), 0);
    std::mt19937_64 pick_rng(derive_seed(config.seed, "round-participants", {round}));
    std::shuffle(ids.begin(), ids.end(), pick_rng);
    std::vector<std::size_t> selected(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(config.clients_per_round));
    std::sort(selected.begin(), selected.end());

    std::vector<LocalUpdate> updates(selected.size());
    parallel_for(selected.size(), config.threads,
                 [&](std::size_t i) { updates[i] = train_client(global, clients[selected[i]], config, round); });

    std::vector<nn::ModelParams> returned;
    std::vector<double> weights;
    RoundRecord rec;
    rec.round = round;
    rec.participants = selected;
    double loss_sum = 0.0;
    for (std::size_t i = 0; i < selected.size(); ++i) {
      weights.push_back(config.averaging == Averaging::kUniform
                            ? 1.0
                            : static_cast<double>(clients[selected[i]].data.y_train.size()));
      rec.client_train_loss.push_back(updates[i].mean_loss);
      loss_sum += updates[i].mean_loss;
      returned.push_back(std::move(updates[i].params));
    }
    rec.mean_client_train_loss = loss_sum / static_cast<double>(selected.size());
    average_shared(global.params, returned, weights);

    const nn::ClassifierModel snapshot = assemble_model(global, clients);
    rec.val_loss = kNaN;
    rec.val_metric = kNaN;
    if (!val_labels.empty()) {
      const Matrix logits = predict_by_client(snapshot, val_x, val_clients);
      const auto per = nn::cross_entropy(snapshot.task, logits, val_labels);
      rec.val_loss = std::accumulate(per.begin(), per.end(), 0.0) / static_cast<double>(per.size());
      try {
        rec.val_metric = metric_from_logits(config.metric, snapshot.task, logits, val_labels);
      } catch (const UndefinedMetricError&) {
        // metric stays NaN, e.g. AUC on a one-class validation pool
      }
    }
    if (!val_labels.empty() && rec.val_loss < result.best_val_loss) {
      result.best_val_loss = rec.val_loss;
      result.best_round = round;
      result.best_model = snapshot;
      have_best = true;
    }
    result.records.push_back(std::move(rec));
  }

  result.final_model = assemble_model(global, clients);
  if (!have_best) {
    result.best_model = result.final_model;
    result.best_round = config.rounds == 0 ? 0 : config.rounds - 1;
    result.best_val_loss = kNaN;
  }
  result.clients = std::move(clients);
  return result;
}

void write_round_csv(std::span<const RoundRecord> records, std::ostream& out) {
  out << "round,mean_client_train_loss,val_loss,val_metric\n";
  for (const auto& r : records) {
    out << r.round << ',' << format_double(r.mean_client_train_loss) << ',' << format_double(r.val_loss) << ','
        << format_double(r.val_metric) << '\n';
  }
}

}  // namespace fedcgau::fed
