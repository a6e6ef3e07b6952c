#include "fedcgau/simclients/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <string>

#include "fedcgau/error.hpp"
#include "fedcgau/linalg/kmeans.hpp"
#include "fedcgau/seed.hpp"
#include "fedcgau/text.hpp"

namespace fedcgau::simclients {
namespace {

std::vector<std::uint32_t> assign_nearest(const ClientAssignment& a, const Matrix& projected,
                                          std::span<const int> labels, const char* which) {
  std::vector<std::uint32_t> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto c = static_cast<std::size_t>(labels[i]);
    if (c >= a.centroids.size() || a.centroids[c].empty()) {
      throw InfeasibleError(std::string(which) + " sample " + std::to_string(i) + " has class " + std::to_string(c) +
                            " which has no training centroids");
    }
    const std::size_t nearest = nearest_centroid(a.centroids[c], projected.data() + i * projected.cols());
    out[i] = a.centroid_to_client[c][nearest];
  }
  return out;
}

}  // namespace

SimulatedClients simulate_clients(const data::EmbeddingDataset& train, const data::EmbeddingDataset& test,
                                  std::size_t k, std::uint64_t seed, std::size_t pca_components) {
  data::validate(train);
  data::validate(test);
  if (k == 0) throw ConfigError("simulate_clients: k must be at least 1");
  if (test.size() > 0 && test.dim() != train.dim()) throw DimensionError("simulate_clients: train/test widths differ");

  const auto counts = data::class_counts(train.labels, train.num_classes);
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] > 0 && counts[c] < k) {
      throw InfeasibleError("simulate_clients: class " + std::to_string(c) + " has " + std::to_string(counts[c]) +
                            " training samples, fewer than k=" + std::to_string(k));
    }
  }

  SimulatedClients sim;
  sim.pca = pca_fit(train.features, std::min(pca_components, train.dim()));
  sim.train_projected = sim.pca.project(train.features);
  sim.test_projected = test.size() > 0 ? sim.pca.project(test.features) : Matrix(0, sim.pca.num_components());

  ClientAssignment base;
  base.num_clients = k;
  base.seed = seed;
  base.centroids.resize(train.num_classes);
  base.centroid_to_client.resize(train.num_classes);
  for (std::size_t c = 0; c < train.num_classes; ++c) {
    if (counts[c] == 0) continue;
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < train.size(); ++i)
      if (static_cast<std::size_t>(train.labels[i]) == c) members.push_back(i);
    const auto fit = kmeans(sim.train_projected.select_rows(members), k, derive_seed(seed, "class-kmeans", {c}));
    base.centroids[c] = fit.centroids;

    std::vector<std::uint32_t> perm(k);
    std::iota(perm.begin(), perm.end(), 0u);
    std::mt19937_64 rng(derive_seed(seed, "centroid-to-client", {c}));
    std::shuffle(perm.begin(), perm.end(), rng);
    base.centroid_to_client[c] = std::move(perm);
  }

  sim.train = base;
  sim.train.assignment = assign_nearest(base, sim.train_projected, train.labels, "train");
  sim.test = base;
  sim.test.assignment = assign_nearest(base, sim.test_projected, test.labels, "test");
  return sim;
}

ClientAssignment shuffle_assignment(const ClientAssignment& a, double proportion, std::uint64_t seed) {
  if (!(proportion >= 0.0 && proportion <= 1.0)) {
    throw RangeError("shuffle proportion " + format_double(proportion) + " outside [0, 1]");
  }
  ClientAssignment out = a;
  out.shuffle_proportion = proportion;
  const std::size_t n = a.size();
  const auto picks = static_cast<std::size_t>(std::floor(proportion * static_cast<double>(n)));
  if (picks == 0) return out;
  if (a.num_clients == 0) throw ConfigError("shuffle_assignment: assignment has no clients");

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  // partial Fisher-Yates: the first `picks` entries are a uniform sample
  for (std::size_t i = 0; i < picks; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  std::uniform_int_distribution<std::uint32_t> client(0, static_cast<std::uint32_t>(a.num_clients - 1));
  for (std::size_t i = 0; i < picks; ++i) out.assignment[idx[i]] = client(rng);
  return out;
}

std::vector<std::vector<std::size_t>> class_histogram(const ClientAssignment& a, std::span<const int> labels,
                                                      std::size_t num_classes) {
  if (labels.size() != a.size()) {
    throw DimensionError("class_histogram: " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(a.size()) + " assignments");
  }
  std::vector<std::vector<std::size_t>> h(a.num_clients, std::vector<std::size_t>(num_classes, 0));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (a.assignment[i] >= a.num_clients) throw RangeError("class_histogram: client id out of range");
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= num_classes) {
      throw LabelError("class_histogram: label out of range at sample " + std::to_string(i));
    }
    ++h[a.assignment[i]][static_cast<std::size_t>(labels[i])];
  }
  return h;
}

std::vector<std::vector<double>> class_distribution(const std::vector<std::vector<std::size_t>>& histogram) {
  std::vector<std::vector<double>> p;
  p.reserve(histogram.size());
  for (const auto& row : histogram) {
    const double total = static_cast<double>(std::accumulate(row.begin(), row.end(), std::size_t{0}));
    std::vector<double> r(row.size(), 0.0);
    if (total > 0.0)
      for (std::size_t c = 0; c < row.size(); ++c) r[c] = static_cast<double>(row[c]) / total;
    p.push_back(std::move(r));
  }
  return p;
}

std::vector<std::vector<std::size_t>> client_indices(const ClientAssignment& a) {
  std::vector<std::vector<std::size_t>> out(a.num_clients);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.assignment[i] >= a.num_clients) throw RangeError("client_indices: client id out of range");
    out[a.assignment[i]].push_back(i);
  }
  return out;
}

void write_assignment_csv(const ClientAssignment& a, std::ostream& out) {
  out << "sample_index,client_id\n";
  for (std::size_t i = 0; i < a.size(); ++i) out << i << ',' << a.assignment[i] << '\n';
}

ClientAssignment read_assignment_csv(std::istream& in, std::size_t num_clients) {
  std::string line;
  std::size_t offset = 0;
  if (!std::getline(in, line) || trim(line) != "sample_index,client_id") {
    throw ParseError("assignment CSV must start with header 'sample_index,client_id'", 0);
  }
  offset += line.size() + 1;
  std::vector<std::pair<std::size_t, std::uint32_t>> rows;
  std::uint32_t max_client = 0;
  while (std::getline(in, line)) {
    const std::size_t at = offset;
    offset += line.size() + 1;
    if (trim(line).empty()) continue;
    const auto f = split_fields(trim(line));
    std::size_t idx = 0;
    std::uint32_t client = 0;
    if (f.size() != 2 || !parse_number(f[0], idx) || !parse_number(f[1], client)) {
      throw ParseError("malformed assignment row '" + line + "'", at);
    }
    rows.emplace_back(idx, client);
    max_client = std::max(max_client, client);
  }
  ClientAssignment a;
  a.num_clients = num_clients > 0 ? num_clients : (rows.empty() ? 0 : max_client + 1);
  a.assignment.assign(rows.size(), 0);
  std::vector<bool> seen(rows.size(), false);
  for (const auto& [idx, client] : rows) {
    if (idx >= rows.size() || seen[idx]) throw ParseError("sample index " + std::to_string(idx) + " duplicated or out of range", 0);
    if (client >= a.num_clients) throw ParseError("client id " + std::to_string(client) + " out of range", 0);
    seen[idx] = true;
    a.assignment[idx] = client;
  }
  return a;
}

}  // namespace fedcgau::simclients
