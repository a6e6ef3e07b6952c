#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "fedcgau/data/dataset.hpp"
#include "fedcgau/linalg/pca.hpp"

namespace fedcgau::simclients {

struct ClientAssignment {
  std::vector<std::uint32_t> assignment;  // sample index -> client id
  std::size_t num_clients = 0;
  // Per class: k x p centroids in PCA space (empty for classes absent from
  // the training data) and the client owning each centroid.
  std::vector<Matrix> centroids;
  std::vector<std::vector<std::uint32_t>> centroid_to_client;
  double shuffle_proportion = 0.0;  // 0 when purely centroid-derived
  std::uint64_t seed = 0;

  std::size_t size() const noexcept { return assignment.size(); }
};

struct SimulatedClients {
  ClientAssignment train;
  ClientAssignment test;
  Pca pca;                  // fitted on the training embeddings only
  Matrix train_projected;
  Matrix test_projected;
};

// PCA on the training features, per-class k-means in the projected space,
// a seeded random centroid-to-client permutation per class, and nearest
// same-class centroid assignment for train and test samples.
SimulatedClients simulate_clients(const data::EmbeddingDataset& train, const data::EmbeddingDataset& test,
                                  std::size_t k, std::uint64_t seed, std::size_t pca_components = 2);

// Reassigns floor(proportion * N) uniformly chosen samples to uniformly drawn
// clients (the original client included).
ClientAssignment shuffle_assignment(const ClientAssignment& a, double proportion, std::uint64_t seed);

// counts[client][class]
std::vector<std::vector<std::size_t>> class_histogram(const ClientAssignment& a, std::span<const int> labels,
                                                      std::size_t num_classes);

// Row-normalized histogram (p_k per client); all-zero rows stay zero.
std::vector<std::vector<double>> class_distribution(const std::vector<std::vector<std::size_t>>& histogram);

// Sample indices per client, ascending.
std::vector<std::vector<std::size_t>> client_indices(const ClientAssignment& a);

// "sample_index,client_id" CSV.
void write_assignment_csv(const ClientAssignment& a, std::ostream& out);
// Reads a CSV written by write_assignment_csv. Every index in [0, N) must
// appear exactly once; num_clients becomes max id + 1 unless given.
ClientAssignment read_assignment_csv(std::istream& in, std::size_t num_clients = 0);

}  // namespace fedcgau::simclients
