#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fedcgau/linalg/matrix.hpp"

namespace fedcgau::data {

struct EmbeddingDataset {
  Matrix features;                       // N x D
  std::vector<int> labels;               // length N, each in [0, num_classes)
  std::size_t num_classes = 0;
  std::vector<std::string> class_names;  // optional
  std::vector<std::uint32_t> clients;    // optional, length N when present

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t dim() const noexcept { return features.cols(); }
};

// Throws ValidationError when the invariants do not hold.
void validate(const EmbeddingDataset& ds);

// Rows at `indices`, in order, with labels and clients carried along.
EmbeddingDataset subset(const EmbeddingDataset& ds, std::span<const std::size_t> indices);

std::vector<std::size_t> class_counts(std::span<const int> labels, std::size_t num_classes);

}  // namespace fedcgau::data
