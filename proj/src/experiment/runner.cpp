#include "fedcgau/experiment/runner.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "fedcgau/error.hpp"
#include "fedcgau/fed/federated.hpp"
#include "fedcgau/parallel.hpp"
#include "fedcgau/seed.hpp"
#include "fedcgau/text.hpp"
#include "json.hpp"

namespace fedcgau::experiment {
namespace {

using ordered = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
  if (!out) throw Error("write failed: " + path.string());
}

// NaN and infinities have no JSON literal.
ordered number(double v) { return std::isfinite(v) ? ordered(v) : ordered(nullptr); }

struct Prepared {
  TrainTest data;
  std::vector<simclients::SimulatedClients> sims;  // per repetition
};

Prepared prepare(const ExperimentConfig& c) {
  Prepared p;
  p.data = load_dataset(c);
  p.sims.resize(c.repetitions);
  parallel_for(c.repetitions, c.threads, [&](std::size_t r) {
    p.sims[r] = simclients::simulate_clients(p.data.train, p.data.test, c.federated.num_clients,
                                             derive_seed(c.seed, "simulate-clients", {r}),
                                             c.simulation.pca_components);
  });
  return p;
}

struct Shuffled {
  simclients::ClientAssignment train;
  simclients::ClientAssignment test;
};

Shuffled shuffled(const ExperimentConfig& c, const simclients::SimulatedClients& sim, std::size_t pi, std::size_t r) {
  const double p = c.proportions[pi];
  return {simclients::shuffle_assignment(sim.train, p, derive_seed(c.seed, "shuffle-train", {pi, r})),
          simclients::shuffle_assignment(sim.test, p, derive_seed(c.seed, "shuffle-test", {pi, r}))};
}

hetero::HeterogeneityReport gamma_for(const ExperimentConfig& c, const Prepared& prep,
                                      const simclients::SimulatedClients& sim,
                                      const simclients::ClientAssignment& a) {
  const Matrix& space = c.simulation.hetero_space == HeteroSpace::kPca ? sim.train_projected : prep.data.train.features;
  std::vector<Matrix> parts;
  for (const auto& idx : simclients::client_indices(a)) parts.push_back(space.select_rows(idx));
  return hetero::gamma(parts);
}

nn::ModelSpec model_spec(const ExperimentConfig& c, const data::EmbeddingDataset& train, ModelKind kind) {
  nn::ModelSpec s;
  s.input_dim = train.dim();
  s.hidden_units = c.model.hidden_units;
  s.unit = kind == ModelKind::kCgau ? nn::UnitKind::kCgau : nn::UnitKind::kRelu;
  s.task = resolve_task(c.model.task, train.num_classes);
  s.num_classes = train.num_classes;
  s.num_clients = c.federated.num_clients;
  s.dropout_rate = c.model.dropout;
  return s;
}

std::string cell_name(std::size_t pi, std::size_t r, ModelKind kind) {
  return "p" + std::to_string(pi) + "_r" + std::to_string(r) + "_" + std::string(model_kind_name(kind));
}

}  // namespace

std::string_view model_kind_name(ModelKind kind) noexcept { return kind == ModelKind::kCgau ? "cgau" : "baseline"; }

double SweepResult::mean_metric(std::size_t proportion_index, ModelKind kind) const {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& row : rows) {
    if (row.proportion_index == proportion_index && row.model_kind == kind) {
      sum += row.test_metric;
      ++n;
    }
  }
  return n == 0 ? std::nan("") : sum / static_cast<double>(n);
}

void prepare_output_dir(const fs::path& out) {
  if (out.empty()) throw ConfigError("no output directory given");
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec || !fs::is_directory(out)) throw Error("cannot create output directory " + out.string());
  const fs::path probe = out / ".write-probe";
  {
    std::ofstream f(probe);
    if (!f) throw Error("output directory is not writable: " + out.string());
  }
  fs::remove(probe, ec);
}

SweepResult run_sweep(const ExperimentConfig& c, const fs::path& out) {
  validate(c);
  prepare_output_dir(out);
  fs::create_directories(out / "rounds");

  const Prepared prep = prepare(c);
  const std::size_t np = c.proportions.size();
  const std::size_t nk = kModelKinds.size();

  // One shuffle and gamma per (proportion, repetition), shared by both model kinds.
  std::vector<Shuffled> assignments(np * c.repetitions);
  std::vector<double> gammas(np * c.repetitions);
  parallel_for(assignments.size(), c.threads, [&](std::size_t i) {
    const std::size_t pi = i / c.repetitions, r = i % c.repetitions;
    assignments[i] = shuffled(c, prep.sims[r], pi, r);
    gammas[i] = gamma_for(c, prep, prep.sims[r], assignments[i].train).gamma;
  });

  SweepResult result;
  result.rows.resize(np * c.repetitions * nk);
  parallel_for(result.rows.size(), c.threads, [&](std::size_t cell) {
    const std::size_t pr = cell / nk;
    const std::size_t pi = pr / c.repetitions, r = pr % c.repetitions;
    const ModelKind kind = kModelKinds[cell % nk];
    const auto k_index = static_cast<std::uint64_t>(cell % nk);
    const auto& a = assignments[pr];

    const auto model = nn::make_model(model_spec(c, prep.data.train, kind), derive_seed(c.seed, "model-init", {pi, r, k_index}));
    auto clients = fed::make_clients(prep.data.train, a.train.assignment, model, c.val_fraction,
                                     derive_seed(c.seed, "validation", {pi, r}));
    fed::FederatedConfig fc = c.federated;
    fc.seed = derive_seed(c.seed, "federated", {pi, r, k_index});
    fc.threads = 1;
    const auto fr = fed::run_federated(model, std::move(clients), fc);

    auto& row = result.rows[cell];
    row.proportion = c.proportions[pi];
    row.proportion_index = pi;
    row.repetition = r;
    row.model_kind = kind;
    row.gamma = gammas[pr];
    row.best_round = fr.best_round;
    row.test_metric =
        fed::evaluate(fr.best_model, prep.data.test.features, prep.data.test.labels, a.test.assignment, fc.metric);

    const std::string name = cell_name(pi, r, kind);
    {
      auto f = open_out(out / "rounds" / (name + ".csv"));
      fed::write_round_csv(fr.records, f);
    }
    ordered run;
    run["proportion"] = row.proportion;
    run["repetition"] = r;
    run["model_kind"] = std::string(model_kind_name(kind));
    run["seed"] = fc.seed;
    run["config"] = ordered::parse(to_json(c));
    run["best_round"] = fr.best_round;
    run["best_val_loss"] = number(fr.best_val_loss);
    run["test_metric"] = number(row.test_metric);
    write_text(out / "rounds" / (name + ".json"), run.dump(2) + "\n");
  });

  {
    auto f = open_out(out / "summary.csv");
    f << "proportion,repetition,model_kind,test_metric,gamma,best_round\n";
    for (const auto& row : result.rows) {
      f << format_double(row.proportion) << ',' << row.repetition << ',' << model_kind_name(row.model_kind) << ','
        << format_double(row.test_metric) << ',' << format_double(row.gamma) << ',' << row.best_round << '\n';
    }
  }

  ordered summary;
  summary["config"] = ordered::parse(to_json(c));
  summary["metric"] = std::string(fed::metric_name(c.federated.metric));
  ordered per = ordered::array();
  for (std::size_t pi = 0; pi < np; ++pi) {
    ordered e;
    e["proportion"] = c.proportions[pi];
    double g = 0.0;
    for (std::size_t r = 0; r < c.repetitions; ++r) g += gammas[pi * c.repetitions + r];
    e["mean_gamma"] = number(g / static_cast<double>(c.repetitions));
    for (ModelKind kind : kModelKinds) {
      e["mean_test_metric_" + std::string(model_kind_name(kind))] = number(result.mean_metric(pi, kind));
    }
    per.push_back(e);
  }
  summary["proportions"] = per;
  write_text(out / "summary.json", summary.dump(2) + "\n");
  return result;
}

std::vector<HeteroEntry> run_hetero(const ExperimentConfig& c, const fs::path& out,
                                    const std::optional<simclients::ClientAssignment>& assignment) {
  validate(c);
  if (c.federated.num_clients < 2) throw ConfigError("heterogeneity needs at least 2 clients");
  if (!out.empty()) prepare_output_dir(out);

  std::vector<HeteroEntry> entries;
  if (assignment) {
    const TrainTest data = load_dataset(c);
    if (assignment->size() != data.train.size()) {
      throw DimensionError("assignment covers " + std::to_string(assignment->size()) + " samples, training set has " +
                           std::to_string(data.train.size()));
    }
    const Matrix* space = &data.train.features;
    Matrix projected;
    if (c.simulation.hetero_space == HeteroSpace::kPca) {
      projected = pca_fit(data.train.features, c.simulation.pca_components).project(data.train.features);
      space = &projected;
    }
    std::vector<Matrix> parts;
    for (const auto& idx : simclients::client_indices(*assignment)) parts.push_back(space->select_rows(idx));
    entries.push_back({assignment->shuffle_proportion, 0, hetero::gamma(parts)});
  } else {
    const Prepared prep = prepare(c);
    entries.resize(c.proportions.size() * c.repetitions);
    parallel_for(entries.size(), c.threads, [&](std::size_t i) {
      const std::size_t pi = i / c.repetitions, r = i % c.repetitions;
      const auto a = shuffled(c, prep.sims[r], pi, r);
      entries[i] = {c.proportions[pi], r, gamma_for(c, prep, prep.sims[r], a.train)};
    });
  }

  if (!out.empty()) {
    ordered j;
    j["space"] = c.simulation.hetero_space == HeteroSpace::kPca ? "pca" : "full";
    j["pca_components"] = c.simulation.pca_components;
    j["num_clients"] = c.federated.num_clients;
    ordered list = ordered::array();
    for (const auto& e : entries) {
      ordered item;
      item["proportion"] = e.proportion;
      item["repetition"] = e.repetition;
      item["gamma"] = e.report.gamma;
      item["per_client"] = e.report.per_client;
      list.push_back(item);
    }
    j["entries"] = list;
    write_text(out / "hetero.json", j.dump(2) + "\n");
  }
  return entries;
}

void run_simulate(const ExperimentConfig& c, const fs::path& out) {
  validate(c);
  prepare_output_dir(out);
  const TrainTest data = load_dataset(c);
  const auto sim = simclients::simulate_clients(data.train, data.test, c.federated.num_clients,
                                                derive_seed(c.seed, "simulate-clients", {0}),
                                                c.simulation.pca_components);
  auto hist = open_out(out / "histogram.csv");
  hist << "proportion,client,class,count,fraction\n";
  for (std::size_t pi = 0; pi < c.proportions.size(); ++pi) {
    const auto a = shuffled(c, sim, pi, 0);
    {
      auto f = open_out(out / ("train_assignment_p" + std::to_string(pi) + ".csv"));
      simclients::write_assignment_csv(a.train, f);
    }
    {
      auto f = open_out(out / ("test_assignment_p" + std::to_string(pi) + ".csv"));
      simclients::write_assignment_csv(a.test, f);
    }
    const auto counts = simclients::class_histogram(a.train, data.train.labels, data.train.num_classes);
    const auto dist = simclients::class_distribution(counts);
    for (std::size_t k = 0; k < counts.size(); ++k) {
      for (std::size_t cls = 0; cls < counts[k].size(); ++cls) {
        hist << format_double(c.proportions[pi]) << ',' << k << ',' << cls << ',' << counts[k][cls] << ','
             << format_double(dist[k][cls]) << '\n';
      }
    }
  }
}

}  // namespace fedcgau::experiment
