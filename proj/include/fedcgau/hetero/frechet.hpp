#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fedcgau/linalg/matrix.hpp"

namespace fedcgau::hetero {

// Gaussian moment summary of a set of embedding rows.
struct GaussianSummary {
  std::vector<double> mean;
  Matrix covariance;  // unbiased, divisor M - 1
  std::size_t sample_count = 0;

  std::size_t dim() const noexcept { return mean.size(); }
};

// Throws InsufficientDataError when fewer than 2 rows are given.
GaussianSummary summarize(const Matrix& embeddings);

// Squared Frechet (2-Wasserstein) distance between two Gaussians:
//   |mu1 - mu2|^2 + tr(S1) + tr(S2) - 2 tr((S1^1/2 S2 S1^1/2)^1/2)
// The cross term uses the symmetric similarity form, which has the same
// trace as (S1 S2)^1/2 but only needs PSD square roots. Clamped at 0.
double frechet_distance_sq(const GaussianSummary& a, const GaussianSummary& b);

// tr((S1 S2)^1/2) via the similarity form.
double cross_sqrt_trace(const Matrix& s1, const Matrix& s2);

struct HeterogeneityReport {
  double gamma = 0.0;
  std::vector<double> per_client;  // d^2(client k, pooled others)
};

// Mean over clients of the distance between each client's summary and the
// summary of all other clients pooled together. Reduction is in ascending
// client order.
HeterogeneityReport gamma(std::span<const Matrix> clients);

}  // namespace fedcgau::hetero
