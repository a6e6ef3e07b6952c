#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "fedcgau/linalg/matrix.hpp"
#include "fedcgau/nn/model.hpp"

namespace fedcgau::fed {

enum class Metric { kAccuracy, kAuc };

std::string_view metric_name(Metric m) noexcept;

// Fraction of rows whose predicted class matches the label.
double accuracy(nn::Task task, const Matrix& logits, std::span<const int> labels);

// Mann-Whitney rank statistic; tied scores contribute 1/2. Throws
// UndefinedMetricError unless both classes are present.
double auc(std::span<const double> scores, std::span<const int> labels);

// Logits for every row, each evaluated with its own client's conditioning.
Matrix predict_by_client(const nn::ClassifierModel& model, const Matrix& x, std::span<const std::uint32_t> clients);

double mean_cross_entropy(const nn::ClassifierModel& model, const Matrix& x, std::span<const int> labels,
                          std::span<const std::uint32_t> clients);

// AUC requires a binary task (score = logit).
double metric_from_logits(Metric metric, nn::Task task, const Matrix& logits, std::span<const int> labels);

double evaluate(const nn::ClassifierModel& model, const Matrix& x, std::span<const int> labels,
                std::span<const std::uint32_t> clients, Metric metric);

}  // namespace fedcgau::fed
