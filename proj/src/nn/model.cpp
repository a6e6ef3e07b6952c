#include "fedcgau/nn/model.hpp"

#include <algorithm>
#include <cmath>
#include <type_traits>

#include "fedcgau/error.hpp"
#include "fedcgau/simd/kernels.hpp"

namespace fedcgau::nn {
namespace {

double sigmoid(double v) noexcept {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

void glorot_fill(Matrix& w, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (double& v : w.values()) v = dist(rng);
}

Matrix affine(const Matrix& x, const Matrix& w, std::span<const double> b) {
  if (x.cols() != w.rows()) {
    throw DimensionError("layer expects input width " + std::to_string(w.rows()) + ", got " + std::to_string(x.cols()));
  }
  Matrix out = matmul(x, w);
  add_row_vector(out, b);
  return out;
}

template <class Block, class Layer>
void push_common(std::vector<Block>& out, const std::string& prefix, Layer& layer) {
  using Span = decltype(Block::values);
  out.push_back({prefix + ".weight", BlockRole::kShared, layer.weight.rows(), layer.weight.cols(),
                 Span(layer.weight.values())});
  out.push_back({prefix + ".bias", BlockRole::kShared, 1, layer.bias.size(), Span(layer.bias)});
}

template <class Block, class Params>
std::vector<Block> collect_blocks(Params& p) {
  using Span = decltype(Block::values);
  std::vector<Block> out;
  for (std::size_t i = 0; i < p.hidden.size(); ++i) {
    const std::string prefix = "hidden" + std::to_string(i);
    std::visit(
        [&](auto& layer) {
          using L = std::remove_const_t<std::remove_reference_t<decltype(layer)>>;
          if constexpr (std::is_same_v<L, CgauLayer>) {
            const std::size_t d = layer.input_dim();
            const std::size_t n = layer.units();
            const std::size_t k = layer.num_clients();
            out.push_back({prefix + ".w_filter", BlockRole::kShared, d, n, Span(layer.w_filter.values())});
            out.push_back({prefix + ".w_gate", BlockRole::kShared, d, n, Span(layer.w_gate.values())});
            out.push_back({prefix + ".b_filter", BlockRole::kShared, 1, n, Span(layer.b_filter)});
            out.push_back({prefix + ".b_gate", BlockRole::kShared, 1, n, Span(layer.b_gate)});
            out.push_back({prefix + ".v_filter", BlockRole::kConditioning, k, n, Span(layer.v_filter.values())});
            out.push_back({prefix + ".v_gate", BlockRole::kConditioning, k, n, Span(layer.v_gate.values())});
          } else {
            push_common(out, prefix, layer);
          }
        },
        p.hidden[i]);
  }
  push_common(out, "output", p.output);
  return out;
}

void check_one_hot(const CgauLayer& layer, const ClientOneHot& h) {
  if (h.k() != layer.num_clients()) {
    throw DimensionError("client code has K=" + std::to_string(h.k()) + " but layer expects K=" +
                         std::to_string(layer.num_clients()));
  }
}

}  // namespace

std::size_t input_dim(const HiddenLayer& layer) noexcept {
  return std::visit([](const auto& l) { return l.input_dim(); }, layer);
}

std::size_t units(const HiddenLayer& layer) noexcept {
  return std::visit([](const auto& l) { return l.units(); }, layer);
}

ModelParams zeros_like(const ModelParams& p) {
  ModelParams z = p;
  for (auto& b : param_blocks(z)) std::fill(b.values.begin(), b.values.end(), 0.0);
  return z;
}

std::vector<ParamBlock> param_blocks(ModelParams& p) { return collect_blocks<ParamBlock>(p); }
std::vector<ConstParamBlock> param_blocks(const ModelParams& p) { return collect_blocks<ConstParamBlock>(p); }

std::size_t parameter_count(const ModelParams& p) {
  std::size_t n = 0;
  for (const auto& b : param_blocks(p)) n += b.values.size();
  return n;
}

void require_same_structure(const ModelParams& a, const ModelParams& b) {
  const auto ba = param_blocks(a);
  const auto bb = param_blocks(b);
  if (ba.size() != bb.size()) throw DimensionError("parameter structures differ in block count");
  for (std::size_t i = 0; i < ba.size(); ++i) {
    if (ba[i].name != bb[i].name || ba[i].rows != bb[i].rows || ba[i].cols != bb[i].cols) {
      throw DimensionError("parameter block " + ba[i].name + " does not match " + bb[i].name);
    }
  }
}

std::size_t ClassifierModel::input_dim() const {
  return params.hidden.empty() ? params.output.input_dim() : nn::input_dim(params.hidden.front());
}

ClassifierModel make_model(const ModelSpec& spec, std::uint64_t seed) {
  if (spec.input_dim == 0) throw ConfigError("model input_dim must be positive");
  if (spec.num_clients == 0) throw ConfigError("model num_clients must be positive");
  if (spec.dropout_rate < 0.0 || spec.dropout_rate >= 1.0) throw ConfigError("dropout_rate must be in [0, 1)");
  if (spec.task == Task::kMulticlass && spec.num_classes < 2) throw ConfigError("multiclass task needs >= 2 classes");
  if (spec.task == Task::kBinary && spec.num_classes != 2) throw ConfigError("binary task needs exactly 2 classes");

  std::mt19937_64 rng(seed);
  ClassifierModel model;
  model.task = spec.task;
  model.num_classes = spec.num_classes;
  model.num_clients = spec.num_clients;
  model.dropout_rate = spec.dropout_rate;

  std::size_t in = spec.input_dim;
  for (std::size_t units : spec.hidden_units) {
    if (units == 0) throw ConfigError("hidden layer width must be positive");
    if (spec.unit == UnitKind::kCgau) {
      CgauLayer layer{Matrix(in, units), Matrix(in, units), std::vector<double>(units, 0.0),
                      std::vector<double>(units, 0.0), Matrix(spec.num_clients, units),
                      Matrix(spec.num_clients, units)};
      glorot_fill(layer.w_filter, rng);
      glorot_fill(layer.w_gate, rng);
      model.params.hidden.emplace_back(std::move(layer));
    } else {
      ReluLayer layer{Matrix(in, units), std::vector<double>(units, 0.0)};
      glorot_fill(layer.weight, rng);
      model.params.hidden.emplace_back(std::move(layer));
    }
    in = units;
  }
  const std::size_t out = spec.task == Task::kBinary ? 1 : spec.num_classes;
  model.params.output = AffineLayer{Matrix(in, out), std::vector<double>(out, 0.0)};
  glorot_fill(model.params.output.weight, rng);
  return model;
}

void validate(const ClassifierModel& model) {
  const auto& p = model.params;
  std::size_t in = model.input_dim();
  for (const auto& layer : p.hidden) {
    if (input_dim(layer) != in) throw DimensionError("hidden layer dimensions do not chain");
    if (const auto* c = std::get_if<CgauLayer>(&layer)) {
      const std::size_t n = c->units();
      if (c->w_gate.rows() != in || c->w_gate.cols() != n || c->b_filter.size() != n || c->b_gate.size() != n ||
          c->v_filter.cols() != n || c->v_gate.cols() != n || c->v_gate.rows() != c->v_filter.rows()) {
        throw DimensionError("CGAU layer blocks disagree on shape");
      }
      if (c->num_clients() != model.num_clients) throw DimensionError("CGAU layer K differs from model K");
    } else {
      const auto& r = std::get<ReluLayer>(layer);
      if (r.bias.size() != r.units()) throw DimensionError("ReLU bias length mismatch");
    }
    in = units(layer);
  }
  if (p.output.input_dim() != in) throw DimensionError("output layer input does not match last hidden width");
  if (p.output.bias.size() != p.output.output_dim()) throw DimensionError("output bias length mismatch");
  const std::size_t want = model.task == Task::kBinary ? 1 : model.num_classes;
  if (p.output.output_dim() != want) throw DimensionError("output width does not match task");
}

ClientOneHot::ClientOneHot(std::size_t client_id, std::size_t k) : id_(client_id), k_(k) {
  if (k == 0 || client_id >= k) {
    throw RangeError("client id " + std::to_string(client_id) + " outside [0, " + std::to_string(k) + ")");
  }
}

std::vector<double> ClientOneHot::dense() const {
  std::vector<double> h(k_, 0.0);
  h[id_] = 1.0;
  return h;
}

CgauActivations cgau_forward(const CgauLayer& layer, const Matrix& x, const ClientOneHot& h) {
  check_one_hot(layer, h);
  CgauActivations act;
  act.filter = affine(x, layer.w_filter, layer.b_filter);
  act.gate = affine(x, layer.w_gate, layer.b_gate);
  // h^T V selects row k
  add_row_vector(act.filter, layer.v_filter.row(h.client_id()));
  add_row_vector(act.gate, layer.v_gate.row(h.client_id()));
  act.output = Matrix(x.rows(), layer.units());
  for (std::size_t i = 0; i < act.output.size(); ++i) {
    const double f = std::tanh(act.filter.data()[i]);
    const double g = sigmoid(act.gate.data()[i]);
    act.filter.data()[i] = f;
    act.gate.data()[i] = g;
    act.output.data()[i] = f * g;
  }
  return act;
}

Matrix relu_forward(const ReluLayer& layer, const Matrix& x) {
  Matrix out = affine(x, layer.weight, layer.bias);
  for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
  return out;
}

ForwardResult model_forward(const ClassifierModel& model, const Matrix& x, const ClientOneHot& h, bool training,
                            std::mt19937_64& rng) {
  if (x.cols() != model.input_dim()) {
    throw DimensionError("model expects " + std::to_string(model.input_dim()) + " features, got " +
                         std::to_string(x.cols()));
  }
  const bool dropout = training && model.dropout_rate > 0.0;
  const double keep = 1.0 - model.dropout_rate;

  ForwardResult result;
  result.caches.reserve(model.params.hidden.size());
  Matrix current = x;
  for (const auto& layer : model.params.hidden) {
    LayerCache cache;
    cache.input = std::move(current);
    if (const auto* c = std::get_if<CgauLayer>(&layer)) {
      auto act = cgau_forward(*c, cache.input, h);
      cache.activation = std::move(act.output);
      cache.filter = std::move(act.filter);
      cache.gate = std::move(act.gate);
    } else {
      cache.activation = relu_forward(std::get<ReluLayer>(layer), cache.input);
    }
    current = cache.activation;
    if (dropout) {
      std::bernoulli_distribution survive(keep);
      cache.dropout_scale = Matrix(current.rows(), current.cols());
      for (std::size_t i = 0; i < current.size(); ++i) {
        const double s = survive(rng) ? 1.0 / keep : 0.0;
        cache.dropout_scale.data()[i] = s;
        current.data()[i] *= s;
      }
    }
    result.caches.push_back(std::move(cache));
  }
  result.logits = affine(current, model.params.output.weight, model.params.output.bias);
  result.last_hidden = std::move(current);
  return result;
}

Matrix predict_logits(const ClassifierModel& model, const Matrix& x, const ClientOneHot& h) {
  std::mt19937_64 unused(0);
  return model_forward(model, x, h, false, unused).logits;
}

void validate_labels(Task task, std::size_t num_classes, std::span<const int> labels) {
  const int limit = task == Task::kBinary ? 2 : static_cast<int>(num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= limit) {
      throw LabelError("label " + std::to_string(labels[i]) + " at index " + std::to_string(i) + " outside [0, " +
                       std::to_string(limit) + ")");
    }
  }
}

std::vector<double> cross_entropy(Task task, const Matrix& logits, std::span<const int> labels) {
  if (labels.size() != logits.rows()) throw DimensionError("cross_entropy: label count differs from batch size");
  std::vector<double> loss(logits.rows());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const auto row = logits.row(i);
    if (task == Task::kBinary) {
      const double l = row[0];
      // softplus(l) - y*l
      loss[i] = std::max(l, 0.0) + std::log1p(std::exp(-std::abs(l))) - (labels[i] == 1 ? l : 0.0);
    } else {
      const double m = *std::max_element(row.begin(), row.end());
      double s = 0.0;
      for (double v : row) s += std::exp(v - m);
      loss[i] = m + std::log(s) - row[static_cast<std::size_t>(labels[i])];
    }
  }
  return loss;
}

std::vector<int> predict_classes(Task task, const Matrix& logits) {
  std::vector<int> out(logits.rows());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const auto row = logits.row(i);
    if (task == Task::kBinary) {
      out[i] = row[0] > 0.0 ? 1 : 0;
    } else {
      out[i] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    }
  }
  return out;
}

LossAndGradients loss_and_gradients(const ClassifierModel& model, const Matrix& x, std::span<const int> labels,
                                    const ClientOneHot& h, std::mt19937_64& rng) {
  if (labels.size() != x.rows()) throw DimensionError("loss_and_gradients: label count differs from batch size");
  validate_labels(model.task, model.num_classes, labels);
  const auto fwd = model_forward(model, x, h, true, rng);
  const std::size_t batch = x.rows();
  const double inv_batch = 1.0 / static_cast<double>(batch);

  LossAndGradients out;
  const auto per_sample = cross_entropy(model.task, fwd.logits, labels);
  for (double v : per_sample) out.loss += v;
  out.loss *= inv_batch;
  out.gradients = zeros_like(model.params);

  // dL/dlogits
  Matrix delta(batch, fwd.logits.cols());
  for (std::size_t i = 0; i < batch; ++i) {
    const auto row = fwd.logits.row(i);
    auto d = delta.row(i);
    if (model.task == Task::kBinary) {
      d[0] = (sigmoid(row[0]) - (labels[i] == 1 ? 1.0 : 0.0)) * inv_batch;
    } else {
      const double m = *std::max_element(row.begin(), row.end());
      double s = 0.0;
      for (std::size_t c = 0; c < row.size(); ++c) s += std::exp(row[c] - m);
      for (std::size_t c = 0; c < row.size(); ++c) {
        const double p = std::exp(row[c] - m) / s;
        d[c] = (p - (static_cast<std::size_t>(labels[i]) == c ? 1.0 : 0.0)) * inv_batch;
      }
    }
  }

  auto& g = out.gradients;
  g.output.weight = matmul_tn(fwd.last_hidden, delta);
  g.output.bias = column_sums(delta);
  delta = matmul_nt(delta, model.params.output.weight);

  for (std::size_t li = model.params.hidden.size(); li-- > 0;) {
    const auto& cache = fwd.caches[li];
    if (!cache.dropout_scale.empty()) {
      for (std::size_t i = 0; i < delta.size(); ++i) delta.data()[i] *= cache.dropout_scale.data()[i];
    }
    const bool need_input_grad = li > 0;
    const auto& layer = model.params.hidden[li];
    if (const auto* c = std::get_if<CgauLayer>(&layer)) {
      Matrix d_filter(delta.rows(), delta.cols());
      Matrix d_gate(delta.rows(), delta.cols());
      for (std::size_t i = 0; i < delta.size(); ++i) {
        const double f = cache.filter.data()[i];
        const double s = cache.gate.data()[i];
        d_filter.data()[i] = delta.data()[i] * s * (1.0 - f * f);
        d_gate.data()[i] = delta.data()[i] * f * s * (1.0 - s);
      }
      auto& gc = std::get<CgauLayer>(g.hidden[li]);
      gc.w_filter = matmul_tn(cache.input, d_filter);
      gc.w_gate = matmul_tn(cache.input, d_gate);
      gc.b_filter = column_sums(d_filter);
      gc.b_gate = column_sums(d_gate);
      std::copy(gc.b_filter.begin(), gc.b_filter.end(), gc.v_filter.row(h.client_id()).begin());
      std::copy(gc.b_gate.begin(), gc.b_gate.end(), gc.v_gate.row(h.client_id()).begin());
      if (need_input_grad) delta = matmul_nt(d_filter, c->w_filter) + matmul_nt(d_gate, c->w_gate);
    } else {
      const auto& r = std::get<ReluLayer>(layer);
      for (std::size_t i = 0; i < delta.size(); ++i) {
        if (!(cache.activation.data()[i] > 0.0)) delta.data()[i] = 0.0;
      }
      auto& gr = std::get<ReluLayer>(g.hidden[li]);
      gr.weight = matmul_tn(cache.input, delta);
      gr.bias = column_sums(delta);
      if (need_input_grad) delta = matmul_nt(delta, r.weight);
    }
  }
  return out;
}

}  // namespace fedcgau::nn
