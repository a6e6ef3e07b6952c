#include "fedcgau/fed/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "fedcgau/error.hpp"

namespace fedcgau::fed {

std::string_view metric_name(Metric m) noexcept { return m == Metric::kAuc ? "auc" : "accuracy"; }

double accuracy(nn::Task task, const Matrix& logits, std::span<const int> labels) {
  if (labels.size() != logits.rows()) throw DimensionError("accuracy: label count differs from row count");
  if (labels.empty()) throw UndefinedMetricError("accuracy of an empty set");
  const auto pred = nn::predict_classes(task, logits);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) correct += pred[i] == labels[i] ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

double auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw DimensionError("auc: score count differs from label count");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // average ranks (1-based) over tie groups
  std::vector<double> rank(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) rank[order[t]] = r;
    i = j + 1;
  }
  double pos = 0.0;
  double neg = 0.0;
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] == 1) {
      pos += 1.0;
      rank_sum += rank[i];
    } else if (labels[i] == 0) {
      neg += 1.0;
    } else {
      throw LabelError("auc: labels must be 0 or 1");
    }
  }
  if (pos == 0.0 || neg == 0.0) throw UndefinedMetricError("auc: both classes must be present");
  return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

Matrix predict_by_client(const nn::ClassifierModel& model, const Matrix& x, std::span<const std::uint32_t> clients) {
  if (clients.size() != x.rows()) throw DimensionError("predict_by_client: client vector length differs from rows");
  std::vector<std::vector<std::size_t>> groups(model.num_clients);
  for (std::size_t i = 0; i < clients.size(); ++i) {
    if (clients[i] >= model.num_clients) {
      throw RangeError("sample " + std::to_string(i) + " has client id " + std::to_string(clients[i]) +
                       " but the model has K=" + std::to_string(model.num_clients));
    }
    groups[clients[i]].push_back(i);
  }
  Matrix logits(x.rows(), model.output_dim());
  for (std::size_t k = 0; k < groups.size(); ++k) {
    if (groups[k].empty()) continue;
    const Matrix part = nn::predict_logits(model, x.select_rows(groups[k]), nn::ClientOneHot(k, model.num_clients));
    for (std::size_t r = 0; r < groups[k].size(); ++r) {
      std::copy(part.row(r).begin(), part.row(r).end(), logits.row(groups[k][r]).begin());
    }
  }
  return logits;
}

double mean_cross_entropy(const nn::ClassifierModel& model, const Matrix& x, std::span<const int> labels,
                          std::span<const std::uint32_t> clients) {
  if (labels.empty()) throw UndefinedMetricError("cross-entropy of an empty set");
  const auto per = nn::cross_entropy(model.task, predict_by_client(model, x, clients), labels);
  double s = 0.0;
  for (double v : per) s += v;
  return s / static_cast<double>(per.size());
}

double metric_from_logits(Metric metric, nn::Task task, const Matrix& logits, std::span<const int> labels) {
  if (metric == Metric::kAccuracy) return accuracy(task, logits, labels);
  if (task != nn::Task::kBinary) throw ConfigError("AUC is only defined for the binary task");
  std::vector<double> scores(logits.rows());
  for (std::size_t i = 0; i < scores.size(); ++i) scores[i] = logits(i, 0);
  return auc(scores, labels);
}

double evaluate(const nn::ClassifierModel& model, const Matrix& x, std::span<const int> labels,
                std::span<const std::uint32_t> clients, Metric metric) {
  return metric_from_logits(metric, model.task, predict_by_client(model, x, clients), labels);
}

}  // namespace fedcgau::fed
