#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "fedcgau/linalg/matrix.hpp"

namespace fedcgau::nn {

enum class Task { kBinary, kMulticlass };
enum class UnitKind { kCgau, kRelu };

// Plain affine map: y = x * weight + bias. weight is in x out.
struct AffineLayer {
  Matrix weight;
  std::vector<double> bias;

  std::size_t input_dim() const noexcept { return weight.rows(); }
  std::size_t output_dim() const noexcept { return weight.cols(); }
};

struct ReluLayer {
  Matrix weight;  // D x N
  std::vector<double> bias;

  std::size_t input_dim() const noexcept { return weight.rows(); }
  std::size_t units() const noexcept { return weight.cols(); }
};

// Conditional gated activation unit layer:
//   z = tanh(x W_f + b_f + h V_f) * sigmoid(x W_g + b_g + h V_g)
// with h the one-hot client code. W_*, b_* are shared across clients;
// row k of V_f / V_g belongs to client k only.
struct CgauLayer {
  Matrix w_filter;  // D x N
  Matrix w_gate;    // D x N
  std::vector<double> b_filter;
  std::vector<double> b_gate;
  Matrix v_filter;  // K x N
  Matrix v_gate;    // K x N

  std::size_t input_dim() const noexcept { return w_filter.rows(); }
  std::size_t units() const noexcept { return w_filter.cols(); }
  std::size_t num_clients() const noexcept { return v_filter.rows(); }
};

using HiddenLayer = std::variant<CgauLayer, ReluLayer>;

std::size_t input_dim(const HiddenLayer& layer) noexcept;
std::size_t units(const HiddenLayer& layer) noexcept;

// Every trainable block of a classifier. Gradients use the same type.
struct ModelParams {
  std::vector<HiddenLayer> hidden;
  AffineLayer output;
};

// Same shapes, all zeros.
ModelParams zeros_like(const ModelParams& p);

enum class BlockRole { kShared, kConditioning };

struct ParamBlock {
  std::string name;  // e.g. "hidden0.w_filter"
  BlockRole role;
  std::size_t rows;
  std::size_t cols;
  std::span<double> values;
};

struct ConstParamBlock {
  std::string name;
  BlockRole role;
  std::size_t rows;
  std::size_t cols;
  std::span<const double> values;
};

// Fixed order: hidden layers first (w_filter, w_gate, b_filter, b_gate,
// v_filter, v_gate for CGAU; weight, bias for ReLU), then output weight, bias.
std::vector<ParamBlock> param_blocks(ModelParams& p);
std::vector<ConstParamBlock> param_blocks(const ModelParams& p);

std::size_t parameter_count(const ModelParams& p);

// Throws DimensionError unless a and b have identical block structure.
void require_same_structure(const ModelParams& a, const ModelParams& b);

struct ModelSpec {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden_units;
  UnitKind unit = UnitKind::kCgau;
  Task task = Task::kMulticlass;
  std::size_t num_classes = 2;
  std::size_t num_clients = 1;
  double dropout_rate = 0.0;
};

struct ClassifierModel {
  ModelParams params;
  Task task = Task::kMulticlass;
  std::size_t num_classes = 2;
  std::size_t num_clients = 1;
  double dropout_rate = 0.0;

  std::size_t input_dim() const;
  std::size_t output_dim() const noexcept { return params.output.output_dim(); }
};

// Glorot-uniform W and output weights; V and all biases start at zero.
ClassifierModel make_model(const ModelSpec& spec, std::uint64_t seed);

// Throws DimensionError if layer dimensions do not chain, or the output width
// does not match the task.
void validate(const ClassifierModel& model);

class ClientOneHot {
 public:
  ClientOneHot(std::size_t client_id, std::size_t k);

  std::size_t client_id() const noexcept { return id_; }
  std::size_t k() const noexcept { return k_; }
  std::vector<double> dense() const;

 private:
  std::size_t id_;
  std::size_t k_;
};

struct CgauActivations {
  Matrix output;  // B x N
  Matrix filter;  // tanh branch
  Matrix gate;    // sigmoid branch
};

CgauActivations cgau_forward(const CgauLayer& layer, const Matrix& x, const ClientOneHot& h);
Matrix relu_forward(const ReluLayer& layer, const Matrix& x);

struct LayerCache {
  Matrix input;
  Matrix activation;    // layer output before dropout
  Matrix filter;        // CGAU only
  Matrix gate;          // CGAU only
  Matrix dropout_scale; // empty when dropout was not applied
};

struct ForwardResult {
  Matrix logits;
  std::vector<LayerCache> caches;
  Matrix last_hidden;  // input to the output layer
};

// Inverted dropout after every hidden layer when training and rate > 0.
ForwardResult model_forward(const ClassifierModel& model, const Matrix& x, const ClientOneHot& h, bool training,
                            std::mt19937_64& rng);

// Convenience: inference logits (no dropout, no rng needed).
Matrix predict_logits(const ClassifierModel& model, const Matrix& x, const ClientOneHot& h);

struct LossAndGradients {
  double loss = 0.0;
  ModelParams gradients;
};

// Mean cross-entropy over the batch (sigmoid/BCE for binary, softmax/CE for
// multiclass) and its gradient with respect to every block.
LossAndGradients loss_and_gradients(const ClassifierModel& model, const Matrix& x, std::span<const int> labels,
                                    const ClientOneHot& h, std::mt19937_64& rng);

// Per-sample cross-entropy given logits.
std::vector<double> cross_entropy(Task task, const Matrix& logits, std::span<const int> labels);

void validate_labels(Task task, std::size_t num_classes, std::span<const int> labels);

// Predicted class per row: logit > 0 for binary, argmax (lowest index on
// ties) for multiclass.
std::vector<int> predict_classes(Task task, const Matrix& logits);

}  // namespace fedcgau::nn
