#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "fedcgau/linalg/matrix.hpp"

namespace fedcgau {

struct KMeansResult {
  Matrix centroids;                 // k x d
  std::vector<std::size_t> labels;  // length N
  // Within-cluster SSE after every assignment step; first entry is the
  // k-means++ initialization.
  std::vector<double> sse_history;
  std::size_t iterations = 0;
  bool converged = false;
};

inline constexpr std::size_t kKMeansMaxIterations = 300;

// Lloyd's algorithm with k-means++ seeding. Runs until the assignment stops
// changing or max_iterations is hit. A cluster that goes empty is reseeded
// with the point farthest from its current centroid.
KMeansResult kmeans(const Matrix& x, std::size_t k, std::uint64_t seed,
                    std::size_t max_iterations = kKMeansMaxIterations);

// Index of the nearest row of `centroids` (lowest index on ties).
std::size_t nearest_centroid(const Matrix& centroids, const double* point);

}  // namespace fedcgau
