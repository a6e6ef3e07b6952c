#include "fedcgau/hetero/frechet.hpp"

#include <algorithm>
#include <string>

#include "fedcgau/error.hpp"
#include "fedcgau/linalg/eigen.hpp"

namespace fedcgau::hetero {

GaussianSummary summarize(const Matrix& embeddings) {
  const std::size_t m = embeddings.rows();
  if (m < 2) throw InsufficientDataError("summarize: need at least 2 samples, got " + std::to_string(m));
  GaussianSummary s;
  s.sample_count = m;
  s.mean = column_means(embeddings);
  Matrix centered = embeddings;
  for (std::size_t r = 0; r < m; ++r) {
    auto row = centered.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] -= s.mean[c];
  }
  s.covariance = symmetrized((1.0 / static_cast<double>(m - 1)) * matmul_tn(centered, centered));
  return s;
}

double cross_sqrt_trace(const Matrix& s1, const Matrix& s2) {
  if (s1.rows() != s2.rows()) throw DimensionError("cross_sqrt_trace: covariance shapes differ");
  // s1 is checked by psd_sqrt; s2 could hide a negative direction in the null space of s1
  psd_sqrt_trace(s2);
  const Matrix root = psd_sqrt(s1);
  return psd_sqrt_trace(symmetrized(matmul(matmul(root, s2), root)));
}

double frechet_distance_sq(const GaussianSummary& a, const GaussianSummary& b) {
  if (a.dim() != b.dim() || a.covariance.rows() != a.dim() || b.covariance.rows() != b.dim()) {
    throw DimensionError("frechet_distance_sq: dimensions differ (" + std::to_string(a.dim()) + " vs " +
                         std::to_string(b.dim()) + ")");
  }
  double mean_term = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    const double d = a.mean[i] - b.mean[i];
    mean_term += d * d;
  }
  const double cov_term =
      trace(a.covariance) + trace(b.covariance) - 2.0 * cross_sqrt_trace(a.covariance, b.covariance);
  return std::max(0.0, mean_term + cov_term);
}

HeterogeneityReport gamma(std::span<const Matrix> clients) {
  const std::size_t k = clients.size();
  if (k < 2) throw ConfigError("gamma: need at least 2 clients, got " + std::to_string(k));
  HeterogeneityReport report;
  report.per_client.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    std::vector<Matrix> others;
    others.reserve(k - 1);
    for (std::size_t j = 0; j < k; ++j)
      if (j != i) others.push_back(clients[j]);
    const Matrix pooled = vstack(others);
    if (clients[i].rows() < 2 || pooled.rows() < 2) {
      throw InsufficientDataError("gamma: client " + std::to_string(i) + " or its complement has fewer than 2 samples");
    }
    report.per_client[i] = frechet_distance_sq(summarize(clients[i]), summarize(pooled));
  }
  double sum = 0.0;
  for (double d : report.per_client) sum += d;
  report.gamma = sum / static_cast<double>(k);
  return report;
}

}  // namespace fedcgau::hetero
