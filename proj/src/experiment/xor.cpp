#include <cmath>
#include <fstream>

#include "fedcgau/data/synth.hpp"
#include "fedcgau/error.hpp"
#include "fedcgau/experiment/runner.hpp"
#include "fedcgau/fed/federated.hpp"
#include "fedcgau/seed.hpp"
#include "fedcgau/text.hpp"
#include "json.hpp"

namespace fedcgau::experiment {
namespace {

using ordered = nlohmann::ordered_json;

std::vector<fed::ClientState> xor_clients(const data::EmbeddingDataset& ds, const nn::ClassifierModel& model) {
  std::vector<fed::ClientState> clients(2);
  for (std::uint32_t k = 0; k < 2; ++k) {
    auto& c = clients[k];
    c.client_id = k;
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < ds.size(); ++i)
      if (ds.clients[i] == k) idx.push_back(i);
    c.data.x_train = ds.features.select_rows(idx);
    for (std::size_t i : idx) c.data.y_train.push_back(ds.labels[i]);
    for (const auto& layer : model.params.hidden) {
      if (const auto* g = std::get_if<nn::CgauLayer>(&layer)) {
        const auto f = g->v_filter.row(k);
        const auto gt = g->v_gate.row(k);
        c.conditioning.push_back({{f.begin(), f.end()}, {gt.begin(), gt.end()}});
      }
    }
  }
  return clients;
}

nn::ClassifierModel train(const ExperimentConfig& c, const data::EmbeddingDataset& ds, nn::UnitKind unit,
                          std::size_t units, std::uint64_t attempt, std::array<double, 2>& accuracy) {
  nn::ModelSpec spec;
  spec.input_dim = 2;
  spec.hidden_units = {units};
  spec.unit = unit;
  spec.task = nn::Task::kBinary;
  spec.num_classes = 2;
  spec.num_clients = 2;
  const std::uint64_t tag = unit == nn::UnitKind::kCgau ? 0 : 1;
  const auto model = nn::make_model(spec, derive_seed(c.seed, "xor-model-init", {tag, attempt}));
  const auto& x = c.xor_demo;
  fed::FederatedConfig fc;
  fc.num_clients = 2;
  fc.clients_per_round = 2;
  fc.local_steps = x.local_steps;
  fc.batch_size = x.batch_size;
  fc.rounds = x.rounds;
  fc.learning_rate = x.learning_rate;
  fc.seed = derive_seed(c.seed, "xor-federated", {tag, attempt});
  auto result = fed::run_federated(model, xor_clients(ds, model), fc);
  for (std::size_t k = 0; k < 2; ++k) {
    const auto& d = result.clients[k].data;
    const std::vector<std::uint32_t> ids(d.y_train.size(), static_cast<std::uint32_t>(k));
    accuracy[k] = fed::evaluate(result.final_model, d.x_train, d.y_train, ids, fed::Metric::kAccuracy);
  }
  return result.final_model;
}

nn::ClassifierModel ablated(nn::ClassifierModel m, bool filter) {
  for (auto& layer : m.params.hidden) {
    if (auto* g = std::get_if<nn::CgauLayer>(&layer)) {
      auto& v = filter ? g->v_filter : g->v_gate;
      std::fill(v.values().begin(), v.values().end(), 0.0);
    }
  }
  return m;
}

}  // namespace

XorReport run_xor(const ExperimentConfig& c, const std::filesystem::path& out) {
  validate(c);
  if (!out.empty()) prepare_output_dir(out);
  const auto& x = c.xor_demo;
  const auto ds = data::synth_xor(x.samples_per_cluster, x.spread, derive_seed(c.seed, "xor-data"));

  XorReport report;
  nn::ClassifierModel mlp;
  double best = -1.0;
  for (std::size_t attempt = 0; attempt < x.mlp_restarts; ++attempt) {
    std::array<double, 2> acc{};
    auto m = train(c, ds, nn::UnitKind::kRelu, 2, attempt, acc);
    if (acc[0] + acc[1] > best) {
      best = acc[0] + acc[1];
      mlp = std::move(m);
      report.mlp_accuracy = acc;
      report.mlp_attempts = attempt + 1;
    }
    if (acc[0] == 1.0 && acc[1] == 1.0) break;
  }
  const auto cgau = train(c, ds, nn::UnitKind::kCgau, 1, 0, report.cgau_accuracy);

  const std::size_t g = x.grid_size;
  Matrix grid(g * g, 2);
  for (std::size_t i = 0; i < g; ++i) {
    for (std::size_t j = 0; j < g; ++j) {
      grid(i * g + j, 0) = -x.grid_extent + 2.0 * x.grid_extent * static_cast<double>(j) / static_cast<double>(g - 1);
      grid(i * g + j, 1) = -x.grid_extent + 2.0 * x.grid_extent * static_cast<double>(i) / static_cast<double>(g - 1);
    }
  }

  struct Variant {
    const char* model;
    const char* ablation;
    nn::ClassifierModel params;
  };
  const std::vector<Variant> variants{{"mlp", "none", mlp},
                                      {"cgau", "none", cgau},
                                      {"cgau", "filter_zeroed", ablated(cgau, true)},
                                      {"cgau", "gate_zeroed", ablated(cgau, false)}};
  std::vector<std::array<Matrix, 2>> logits(variants.size());
  for (std::size_t v = 0; v < variants.size(); ++v)
    for (std::size_t k = 0; k < 2; ++k) logits[v][k] = nn::predict_logits(variants[v].params, grid, nn::ClientOneHot(k, 2));

  auto max_change = [&](std::size_t v) {
    double m = 0.0;
    for (std::size_t k = 0; k < 2; ++k)
      for (std::size_t i = 0; i < grid.rows(); ++i) m = std::max(m, std::abs(logits[v][k](i, 0) - logits[1][k](i, 0)));
    return m;
  };
  report.filter_ablation_change = max_change(2);
  report.gate_ablation_change = max_change(3);
  report.grid_rows = variants.size() * 2 * grid.rows();

  if (!out.empty()) {
    std::ofstream csv(out / "xor_grid.csv", std::ios::binary | std::ios::trunc);
    if (!csv) throw Error("cannot write " + (out / "xor_grid.csv").string());
    csv << "model,ablation,client,x1,x2,logit\n";
    for (std::size_t v = 0; v < variants.size(); ++v) {
      for (std::size_t k = 0; k < 2; ++k) {
        for (std::size_t i = 0; i < grid.rows(); ++i) {
          csv << variants[v].model << ',' << variants[v].ablation << ',' << k << ',' << format_double(grid(i, 0)) << ','
              << format_double(grid(i, 1)) << ',' << format_double(logits[v][k](i, 0)) << '\n';
        }
      }
    }
    ordered j;
    j["samples_per_cluster"] = x.samples_per_cluster;
    j["spread"] = x.spread;
    j["rounds"] = x.rounds;
    j["mlp_train_accuracy"] = report.mlp_accuracy;
    j["mlp_attempts"] = report.mlp_attempts;
    j["cgau_train_accuracy"] = report.cgau_accuracy;
    j["filter_ablation_max_logit_change"] = report.filter_ablation_change;
    j["gate_ablation_max_logit_change"] = report.gate_ablation_change;
    std::ofstream f(out / "xor_report.json", std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot write " + (out / "xor_report.json").string());
    f << j.dump(2) << '\n';
  }
  return report;
}

}  // namespace fedcgau::experiment
