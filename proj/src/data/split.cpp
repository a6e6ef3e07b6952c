#include "fedcgau/data/split.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <string>

#include "fedcgau/error.hpp"

namespace fedcgau::data {
namespace {

// Largest-remainder apportionment of `total` items; ties go to the lower part.
std::vector<std::size_t> apportion(std::size_t total, std::span<const double> fractions) {
  std::vector<std::size_t> counts(fractions.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t j = 0; j < fractions.size(); ++j) {
    const double exact = fractions[j] * static_cast<double>(total);
    counts[j] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    assigned += counts[j];
    remainders.emplace_back(exact - static_cast<double>(counts[j]), j);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; assigned < total; ++i, ++assigned) ++counts[remainders[i % remainders.size()].second];
  while (assigned > total) {
    // only reachable through the 1e-9 guard on exact multiples; trim the largest part
    auto it = std::max_element(counts.begin(), counts.end());
    --*it;
    --assigned;
  }
  return counts;
}

}  // namespace

std::vector<std::vector<std::size_t>> split(std::span<const int> labels, std::span<const double> fractions,
                                            bool stratified, std::uint64_t seed) {
  if (fractions.empty()) throw RangeError("split: no fractions given");
  double sum = 0.0;
  for (double f : fractions) {
    if (!(f > 0.0)) throw RangeError("split: fractions must be positive");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw RangeError("split: fractions must sum to 1");

  std::mt19937_64 rng(seed);
  std::vector<std::vector<std::size_t>> parts(fractions.size());

  // Groups are visited in ascending label order for determinism.
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < labels.size(); ++i) groups[stratified ? labels[i] : 0].push_back(i);

  for (auto& [label, members] : groups) {
    std::shuffle(members.begin(), members.end(), rng);
    const auto counts = apportion(members.size(), fractions);
    std::size_t pos = 0;
    for (std::size_t j = 0; j < fractions.size(); ++j) {
      if (stratified && counts[j] == 0) {
        throw StratificationError("split: part " + std::to_string(j) + " receives no samples of class " +
                                  std::to_string(label) + " (" + std::to_string(members.size()) + " available)");
      }
      parts[j].insert(parts[j].end(), members.begin() + static_cast<std::ptrdiff_t>(pos),
                      members.begin() + static_cast<std::ptrdiff_t>(pos + counts[j]));
      pos += counts[j];
    }
  }
  for (auto& p : parts) std::sort(p.begin(), p.end());
  return parts;
}

Holdout stratified_holdout(std::span<const int> labels, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction < 1.0)) throw RangeError("holdout fraction must be in [0, 1)");
  std::mt19937_64 rng(seed);
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < labels.size(); ++i) groups[labels[i]].push_back(i);

  Holdout out;
  for (auto& [label, members] : groups) {
    std::shuffle(members.begin(), members.end(), rng);
    auto n_val = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(members.size()) + 0.5));
    n_val = std::min(n_val, members.size() - 1);
    out.validation.insert(out.validation.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_val));
    out.train.insert(out.train.end(), members.begin() + static_cast<std::ptrdiff_t>(n_val), members.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.validation.begin(), out.validation.end());
  return out;
}

}  // namespace fedcgau::data
