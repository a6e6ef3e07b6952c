#include "fedcgau/data/dataset.hpp"

#include <cmath>

#include "fedcgau/error.hpp"

namespace fedcgau::data {

void validate(const EmbeddingDataset& ds) {
  if (ds.labels.size() != ds.features.rows()) {
    throw ValidationError("dataset has " + std::to_string(ds.features.rows()) + " rows but " +
                          std::to_string(ds.labels.size()) + " labels");
  }
  if (!ds.clients.empty() && ds.clients.size() != ds.labels.size()) {
    throw ValidationError("dataset client vector length differs from sample count");
  }
  if (!ds.class_names.empty() && ds.class_names.size() != ds.num_classes) {
    throw ValidationError("dataset class_names length differs from num_classes");
  }
  for (std::size_t i = 0; i < ds.labels.size(); ++i) {
    if (ds.labels[i] < 0 || static_cast<std::size_t>(ds.labels[i]) >= ds.num_classes) {
      throw LabelError("label " + std::to_string(ds.labels[i]) + " of sample " + std::to_string(i) +
                       " outside [0, " + std::to_string(ds.num_classes) + ")");
    }
  }
  for (std::size_t i = 0; i < ds.features.size(); ++i) {
    if (!std::isfinite(ds.features.data()[i])) {
      throw ValidationError("non-finite feature in sample " + std::to_string(i / std::max<std::size_t>(1, ds.dim())));
    }
  }
}

EmbeddingDataset subset(const EmbeddingDataset& ds, std::span<const std::size_t> indices) {
  EmbeddingDataset out;
  out.features = ds.features.select_rows(indices);
  out.num_classes = ds.num_classes;
  out.class_names = ds.class_names;
  out.labels.reserve(indices.size());
  for (std::size_t i : indices) out.labels.push_back(ds.labels[i]);
  if (!ds.clients.empty()) {
    out.clients.reserve(indices.size());
    for (std::size_t i : indices) out.clients.push_back(ds.clients[i]);
  }
  return out;
}

std::vector<std::size_t> class_counts(std::span<const int> labels, std::size_t num_classes) {
  std::vector<std::size_t> counts(num_classes, 0);
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= num_classes) throw LabelError("label out of range in class_counts");
    ++counts[static_cast<std::size_t>(y)];
  }
  return counts;
}

}  // namespace fedcgau::data
