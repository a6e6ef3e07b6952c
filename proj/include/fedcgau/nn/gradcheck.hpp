#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "fedcgau/nn/model.hpp"

namespace fedcgau::nn {

struct GradCheckOptions {
  double epsilon = 1e-5;     // central-difference step
  double tolerance = 1e-5;   // max allowed relative error
  double denominator_floor = 1e-8;
};

struct BlockCheck {
  std::string name;
  std::size_t entries = 0;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
};

struct GradCheckResult {
  std::vector<BlockCheck> blocks;
  double max_rel_error = 0.0;
  bool passed = true;
};

// Analytic gradient under test. Defaults to loss_and_gradients; tests swap in
// deliberately broken versions.
using GradientFn =
    std::function<ModelParams(const ClassifierModel&, const Matrix&, std::span<const int>, const ClientOneHot&)>;

// |analytic - numeric| / max(|analytic|, |numeric|, floor), per entry.
double relative_error(double analytic, double numeric, double floor) noexcept;

// Compares every parameter entry against central finite differences of the
// mean cross-entropy. The model must have dropout disabled.
GradCheckResult check_gradients(const ClassifierModel& model, const Matrix& x, std::span<const int> labels,
                                const ClientOneHot& h, const GradCheckOptions& options = {},
                                const GradientFn& analytic = {});

struct GradCheckCase {
  ClassifierModel model;
  Matrix x;
  std::vector<int> labels;
  std::size_t client = 0;
  std::string description;
};

// Small random configuration: D<=5, N<=4, K<=3, B<=8, one or two hidden
// layers of either kind, binary or multiclass head, all parameters random.
GradCheckCase random_gradcheck_case(std::uint64_t seed);

struct GradCheckSuiteResult {
  std::vector<GradCheckCase> cases;
  std::vector<GradCheckResult> results;
  double max_rel_error = 0.0;
  std::size_t failures = 0;

  bool passed() const noexcept { return failures == 0; }
};

GradCheckSuiteResult run_gradcheck_suite(std::uint64_t seed, std::size_t count = 100,
                                         const GradCheckOptions& options = {}, const GradientFn& analytic = {});

}  // namespace fedcgau::nn
