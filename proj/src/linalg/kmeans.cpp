#include "fedcgau/linalg/kmeans.hpp"

#include <algorithm>
#include <limits>
#include <random>
#include <string>

#include "fedcgau/error.hpp"
#include "fedcgau/simd/kernels.hpp"

namespace fedcgau {
namespace {

Matrix plus_plus_init(const Matrix& x, std::size_t k, std::mt19937_64& rng) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  Matrix centroids(k, d);
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());

  std::size_t pick = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  for (std::size_t c = 0; c < k; ++c) {
    std::copy_n(x.data() + pick * d, d, centroids.data() + c * d);
    if (c + 1 == k) break;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      dist[i] = std::min(dist[i], simd::sq_dist(x.data() + i * d, centroids.data() + c * d, d));
      total += dist[i];
    }
    if (total <= 0.0) {
      pick = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
      continue;
    }
    const double target = std::uniform_real_distribution<double>(0.0, total)(rng);
    double acc = 0.0;
    pick = n;
    for (std::size_t i = 0; i < n; ++i) {
      acc += dist[i];
      if (dist[i] > 0.0 && acc > target) {
        pick = i;
        break;
      }
    }
    if (pick == n) {
      // target landed on the rounding slack at the end; take the last candidate
      for (std::size_t i = n; i-- > 0;) {
        if (dist[i] > 0.0) {
          pick = i;
          break;
        }
      }
    }
  }
  return centroids;
}

// Returns SSE; fills labels and per-point squared distances.
double assign(const Matrix& x, const Matrix& centroids, std::vector<std::size_t>& labels, std::vector<double>& dist) {
  const std::size_t d = x.cols();
  double sse = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double* p = x.data() + i * d;
    std::size_t best = 0;
    double best_d = simd::sq_dist(p, centroids.data(), d);
    for (std::size_t c = 1; c < centroids.rows(); ++c) {
      const double dc = simd::sq_dist(p, centroids.data() + c * d, d);
      if (dc < best_d) {
        best_d = dc;
        best = c;
      }
    }
    labels[i] = best;
    dist[i] = best_d;
    sse += best_d;
  }
  return sse;
}

}  // namespace

std::size_t nearest_centroid(const Matrix& centroids, const double* point) {
  const std::size_t d = centroids.cols();
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.rows(); ++c) {
    const double dc = simd::sq_dist(point, centroids.data() + c * d, d);
    if (dc < best_d) {
      best_d = dc;
      best = c;
    }
  }
  return best;
}

KMeansResult kmeans(const Matrix& x, std::size_t k, std::uint64_t seed, std::size_t max_iterations) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  if (k == 0) throw InfeasibleError("kmeans: k must be at least 1");
  if (k > n) throw InfeasibleError("kmeans: k=" + std::to_string(k) + " exceeds sample count " + std::to_string(n));

  std::mt19937_64 rng(seed);
  KMeansResult result;
  result.centroids = plus_plus_init(x, k, rng);
  result.labels.assign(n, 0);
  std::vector<double> dist(n, 0.0);
  result.sse_history.push_back(assign(x, result.centroids, result.labels, dist));

  std::vector<std::size_t> counts(k);
  std::vector<std::size_t> next_labels(n);
  while (result.iterations < max_iterations) {
    ++result.iterations;
    Matrix sums(k, d);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      simd::axpy(1.0, x.data() + i * d, sums.data() + result.labels[i] * d, d);
      ++counts[result.labels[i]];
    }
    std::vector<bool> taken(n, false);
    for (std::size_t c = 0; c < k; ++c) {
      auto row = result.centroids.row(c);
      if (counts[c] > 0) {
        for (std::size_t j = 0; j < d; ++j) row[j] = sums(c, j) / static_cast<double>(counts[c]);
        continue;
      }
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (!taken[i] && dist[i] > far_d) {
          far_d = dist[i];
          far = i;
        }
      }
      taken[far] = true;
      dist[far] = 0.0;
      std::copy_n(x.data() + far * d, d, row.data());
    }

    const double sse = assign(x, result.centroids, next_labels, dist);
    result.sse_history.push_back(sse);
    const bool unchanged = next_labels == result.labels;
    result.labels.swap(next_labels);
    if (unchanged) {
      result.converged = true;
      break;
    }
  }
  return result;
}

}  // namespace fedcgau
