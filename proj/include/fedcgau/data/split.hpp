#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace fedcgau::data {

// Seeded disjoint partition of [0, labels.size()) with part sizes given by
// `fractions` (positive, summing to 1 within 1e-9). With stratification the
// sizes are apportioned per class by largest remainder, and a part that would
// receive no samples of a present class raises StratificationError. Indices
// within each part are ascending.
std::vector<std::vector<std::size_t>> split(std::span<const int> labels, std::span<const double> fractions,
                                            bool stratified, std::uint64_t seed);

struct Holdout {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};

// Per-class holdout of round(fraction * class_count) samples, keeping at least
// one training sample per class. Never fails on small classes.
Holdout stratified_holdout(std::span<const int> labels, double fraction, std::uint64_t seed);

}  // namespace fedcgau::data
