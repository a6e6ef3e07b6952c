#include "fedcgau/data/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "fedcgau/error.hpp"

namespace fedcgau::data {
namespace {

// Two orthonormal directions in R^dim (dim >= 2) via Gram-Schmidt.
std::pair<std::vector<double>, std::vector<double>> random_plane(std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  auto draw = [&] {
    std::vector<double> v(dim);
    for (double& x : v) x = normal(rng);
    return v;
  };
  auto normalize = [](std::vector<double>& v) {
    double n = 0.0;
    for (double x : v) n += x * x;
    n = std::sqrt(n);
    for (double& x : v) x /= n;
  };
  std::vector<double> u = draw();
  normalize(u);
  std::vector<double> w;
  double norm = 0.0;
  do {
    w = draw();
    double proj = 0.0;
    for (std::size_t i = 0; i < dim; ++i) proj += w[i] * u[i];
    for (std::size_t i = 0; i < dim; ++i) w[i] -= proj * u[i];
    norm = 0.0;
    for (double x : w) norm += x * x;
  } while (norm < 1e-12);
  normalize(w);
  return {u, w};
}

}  // namespace

SynthBlobs synth_blobs(const BlobSpec& spec) {
  if (spec.num_classes == 0 || spec.blobs_per_class == 0 || spec.samples_per_blob == 0 || spec.dim == 0) {
    throw ConfigError("synth_blobs: all counts must be at least 1");
  }
  if (!(spec.separation > 0.0)) throw ConfigError("synth_blobs: separation must be positive");
  if (!(spec.spread >= 0.0)) throw ConfigError("synth_blobs: spread must be non-negative");
  if (!(spec.class_offset >= 0.0)) throw ConfigError("synth_blobs: class_offset must be non-negative");

  std::mt19937_64 rng(spec.seed);
  const std::size_t total_blobs = spec.num_classes * spec.blobs_per_class;
  const bool shared_cells = spec.class_offset > 0.0;
  const std::size_t cells_needed = shared_cells ? spec.blobs_per_class : total_blobs;

  // Grid coordinates of the chosen cells.
  std::vector<std::pair<double, double>> cells;
  if (spec.dim == 1) {
    std::vector<std::size_t> idx(cells_needed);
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t i : idx) cells.emplace_back(static_cast<double>(i), 0.0);
  } else {
    const auto side = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(cells_needed))));
    std::vector<std::size_t> idx(side * side);
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t i = 0; i < cells_needed; ++i) {
      cells.emplace_back(static_cast<double>(idx[i] % side), static_cast<double>(idx[i] / side));
    }
  }

  std::vector<double> u(spec.dim, 0.0);
  std::vector<double> w(spec.dim, 0.0);
  if (spec.dim == 1) {
    u[0] = 1.0;
  } else {
    std::tie(u, w) = random_plane(spec.dim, rng);
  }

  SynthBlobs out;
  out.blob_means = Matrix(total_blobs, spec.dim);
  for (std::size_t c = 0; c < spec.num_classes; ++c) {
    for (std::size_t b = 0; b < spec.blobs_per_class; ++b) {
      const std::size_t id = c * spec.blobs_per_class + b;
      const auto [gx, gy] = shared_cells ? cells[b] : cells[id];
      const double ax = spec.separation * gx + (shared_cells ? spec.class_offset * static_cast<double>(c) : 0.0);
      const double ay = spec.separation * gy;
      for (std::size_t j = 0; j < spec.dim; ++j) out.blob_means(id, j) = ax * u[j] + ay * w[j];
    }
  }

  const std::size_t n = total_blobs * spec.samples_per_blob;
  auto& ds = out.dataset;
  ds.num_classes = spec.num_classes;
  ds.features = Matrix(n, spec.dim);
  ds.labels.resize(n);
  out.blob_ids.resize(n);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::size_t row = 0;
  for (std::size_t id = 0; id < total_blobs; ++id) {
    for (std::size_t s = 0; s < spec.samples_per_blob; ++s, ++row) {
      auto r = ds.features.row(row);
      for (std::size_t j = 0; j < spec.dim; ++j) {
        r[j] = out.blob_means(id, j) + (spec.spread > 0.0 ? spec.spread * normal(rng) : 0.0);
      }
      ds.labels[row] = static_cast<int>(id / spec.blobs_per_class);
      out.blob_ids[row] = id;
    }
  }
  return out;
}

EmbeddingDataset synth_xor(std::size_t samples_per_cluster, double spread, std::uint64_t seed) {
  if (samples_per_cluster == 0) throw ConfigError("synth_xor: samples_per_cluster must be at least 1");
  if (!(spread >= 0.0)) throw ConfigError("synth_xor: spread must be non-negative");

  // (x1 center, x2 center); client follows the sign of x2.
  constexpr std::pair<double, double> kCenters[] = {{1.0, 1.0}, {-1.0, 1.0}, {1.0, -1.0}, {-1.0, -1.0}};
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  EmbeddingDataset ds;
  ds.num_classes = 2;
  ds.class_names = {"negative", "positive"};
  ds.features = Matrix(4 * samples_per_cluster, 2);
  ds.labels.resize(4 * samples_per_cluster);
  ds.clients.resize(4 * samples_per_cluster);
  std::size_t row = 0;
  for (const auto& [cx, cy] : kCenters) {
    for (std::size_t s = 0; s < samples_per_cluster; ++s, ++row) {
      double x1 = cx;
      double x2 = cy;
      if (spread > 0.0) {
        do {
          x1 = cx + spread * normal(rng);
          x2 = cy + spread * normal(rng);
        } while (x1 * cx <= 0.0 || x2 * cy <= 0.0);
      }
      ds.features(row, 0) = x1;
      ds.features(row, 1) = x2;
      ds.labels[row] = (cx > 0.0) != (cy > 0.0) ? 1 : 0;
      ds.clients[row] = cy > 0.0 ? 0u : 1u;
    }
  }
  return ds;
}

}  // namespace fedcgau::data
