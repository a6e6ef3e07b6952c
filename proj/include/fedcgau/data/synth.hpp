#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "fedcgau/data/dataset.hpp"

namespace fedcgau::data {

struct BlobSpec {
  std::size_t num_classes = 2;
  std::size_t blobs_per_class = 2;
  std::size_t samples_per_blob = 100;
  std::size_t dim = 2;
  double separation = 10.0;  // grid spacing between blob means
  double spread = 0.25;      // per-coordinate standard deviation
  std::uint64_t seed = 0;
  // 0: every (class, blob) gets its own grid cell. > 0: blob b of every class
  // sits on the same cell b, and class c is displaced by c * class_offset
  // along the first grid axis. That gives features whose location is
  // shared across classes up to a small class-dependent shift.
  double class_offset = 0.0;
};

struct SynthBlobs {
  EmbeddingDataset dataset;
  std::vector<std::size_t> blob_ids;  // class * blobs_per_class + blob
  Matrix blob_means;                  // (C * B) x dim
};

// Isotropic Gaussian blobs with means on a seeded 2-D grid scaled by
// `separation`, embedded into `dim` dimensions by a seeded random rotation.
SynthBlobs synth_blobs(const BlobSpec& spec);

// Four clusters at (+-1, +-1). Negative class (0) where the coordinates share
// a sign, positive (1) otherwise. Client 0 holds the x2 > 0 clusters, client
// 1 the x2 < 0 clusters. Samples that would cross an axis are redrawn.
EmbeddingDataset synth_xor(std::size_t samples_per_cluster, double spread, std::uint64_t seed);

}  // namespace fedcgau::data
