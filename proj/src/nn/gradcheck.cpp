#include "fedcgau/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "fedcgau/error.hpp"
#include "fedcgau/seed.hpp"

namespace fedcgau::nn {
namespace {

double mean_loss(const ClassifierModel& model, const Matrix& x, std::span<const int> labels, const ClientOneHot& h) {
  const auto per = cross_entropy(model.task, predict_logits(model, x, h), labels);
  double s = 0.0;
  for (double v : per) s += v;
  return s / static_cast<double>(per.size());
}

ModelParams default_gradient(const ClassifierModel& model, const Matrix& x, std::span<const int> labels,
                             const ClientOneHot& h) {
  std::mt19937_64 rng(0);
  return loss_and_gradients(model, x, labels, h, rng).gradients;
}

}  // namespace

double relative_error(double analytic, double numeric, double floor) noexcept {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

GradCheckResult check_gradients(const ClassifierModel& model, const Matrix& x, std::span<const int> labels,
                                const ClientOneHot& h, const GradCheckOptions& options, const GradientFn& analytic) {
  if (model.dropout_rate != 0.0) throw ConfigError("gradient check requires dropout_rate = 0");
  const ModelParams grads = analytic ? analytic(model, x, labels, h) : default_gradient(model, x, labels, h);
  require_same_structure(model.params, grads);

  GradCheckResult result;
  ClassifierModel probe = model;
  auto probe_blocks = param_blocks(probe.params);
  const auto grad_blocks = param_blocks(grads);
  for (std::size_t b = 0; b < probe_blocks.size(); ++b) {
    BlockCheck check{probe_blocks[b].name, probe_blocks[b].values.size()};
    auto values = probe_blocks[b].values;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + options.epsilon;
      const double up = mean_loss(probe, x, labels, h);
      values[i] = saved - options.epsilon;
      const double down = mean_loss(probe, x, labels, h);
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * options.epsilon);
      const double a = grad_blocks[b].values[i];
      check.max_abs_error = std::max(check.max_abs_error, std::abs(a - numeric));
      check.max_rel_error = std::max(check.max_rel_error, relative_error(a, numeric, options.denominator_floor));
    }
    result.max_rel_error = std::max(result.max_rel_error, check.max_rel_error);
    result.blocks.push_back(std::move(check));
  }
  result.passed = result.max_rel_error < options.tolerance;
  return result;
}

GradCheckCase random_gradcheck_case(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto pick = [&](std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng); };

  ModelSpec spec;
  spec.input_dim = pick(1, 5);
  spec.hidden_units.resize(pick(1, 2));
  for (auto& n : spec.hidden_units) n = pick(1, 4);
  spec.unit = pick(0, 1) == 0 ? UnitKind::kCgau : UnitKind::kRelu;
  spec.task = pick(0, 1) == 0 ? Task::kBinary : Task::kMulticlass;
  spec.num_classes = spec.task == Task::kBinary ? 2 : pick(2, 4);
  spec.num_clients = pick(1, 3);
  spec.dropout_rate = 0.0;

  GradCheckCase c;
  c.model = make_model(spec, derive_seed(seed, "gradcheck-init"));
  std::normal_distribution<double> normal(0.0, 0.5);
  for (auto& block : param_blocks(c.model.params))
    for (double& v : block.values) v = normal(rng);

  const std::size_t batch = pick(1, 8);
  c.x = Matrix(batch, spec.input_dim);
  std::normal_distribution<double> feature(0.0, 1.0);
  for (double& v : c.x.values()) v = feature(rng);
  c.labels.resize(batch);
  for (int& y : c.labels) y = static_cast<int>(pick(0, spec.num_classes - 1));
  c.client = pick(0, spec.num_clients - 1);

  c.description = std::string(spec.unit == UnitKind::kCgau ? "cgau" : "relu") + " D=" +
                  std::to_string(spec.input_dim) + " layers=" + std::to_string(spec.hidden_units.size()) +
                  " K=" + std::to_string(spec.num_clients) + " B=" + std::to_string(batch) +
                  (spec.task == Task::kBinary ? " binary" : " C=" + std::to_string(spec.num_classes));
  return c;
}

GradCheckSuiteResult run_gradcheck_suite(std::uint64_t seed, std::size_t count, const GradCheckOptions& options,
                                         const GradientFn& analytic) {
  GradCheckSuiteResult suite;
  for (std::size_t i = 0; i < count; ++i) {
    auto c = random_gradcheck_case(derive_seed(seed, "gradcheck-case", {i}));
    auto r = check_gradients(c.model, c.x, c.labels, ClientOneHot(c.client, c.model.num_clients), options, analytic);
    suite.max_rel_error = std::max(suite.max_rel_error, r.max_rel_error);
    if (!r.passed) ++suite.failures;
    suite.cases.push_back(std::move(c));
    suite.results.push_back(std::move(r));
  }
  return suite;
}

}  // namespace fedcgau::nn
