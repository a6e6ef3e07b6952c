#include "fedcgau/nn/checkpoint.hpp"

#include <cmath>

#include "fedcgau/bytes.hpp"
#include "fedcgau/error.hpp"

namespace fedcgau::nn {
namespace {

constexpr std::string_view kMagic = "CGAU";
enum : std::uint32_t { kTagRelu = 0, kTagCgau = 1, kTagOutput = 2 };

// Bound on any single dimension read from a file, so a corrupt header cannot
// request a multi-gigabyte allocation.
constexpr std::uint32_t kMaxDim = 1u << 20;

std::uint32_t checked_dim(ByteReader& r, std::string_view what) {
  const std::size_t at = r.offset();
  const std::uint32_t v = r.get_u32(what);
  if (v == 0 || v > kMaxDim) throw ParseError("invalid " + std::string(what) + " " + std::to_string(v), at);
  return v;
}

void read_values(ByteReader& r, std::span<double> out, std::string_view what) {
  r.require(out.size() * 8, what);
  for (double& v : out) v = r.get_f64(what);
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const ClassifierModel& model) {
  validate(model);
  ByteWriter w;
  w.put_bytes(kMagic);
  w.put_u32(kCheckpointVersion);
  w.put_u32(model.task == Task::kBinary ? 0 : 1);
  w.put_u32(static_cast<std::uint32_t>(model.num_classes));
  w.put_u32(static_cast<std::uint32_t>(model.num_clients));
  w.put_f64(model.dropout_rate);
  w.put_u32(static_cast<std::uint32_t>(model.params.hidden.size() + 1));
  for (const auto& layer : model.params.hidden) {
    if (const auto* c = std::get_if<CgauLayer>(&layer)) {
      w.put_u32(kTagCgau);
      w.put_u32(static_cast<std::uint32_t>(c->input_dim()));
      w.put_u32(static_cast<std::uint32_t>(c->units()));
      w.put_u32(static_cast<std::uint32_t>(c->num_clients()));
      for (const auto* m : {&c->w_filter, &c->w_gate})
        for (double v : m->values()) w.put_f64(v);
      for (const auto* b : {&c->b_filter, &c->b_gate})
        for (double v : *b) w.put_f64(v);
      for (const auto* m : {&c->v_filter, &c->v_gate})
        for (double v : m->values()) w.put_f64(v);
    } else {
      const auto& r = std::get<ReluLayer>(layer);
      w.put_u32(kTagRelu);
      w.put_u32(static_cast<std::uint32_t>(r.input_dim()));
      w.put_u32(static_cast<std::uint32_t>(r.units()));
      for (double v : r.weight.values()) w.put_f64(v);
      for (double v : r.bias) w.put_f64(v);
    }
  }
  const auto& o = model.params.output;
  w.put_u32(kTagOutput);
  w.put_u32(static_cast<std::uint32_t>(o.input_dim()));
  w.put_u32(static_cast<std::uint32_t>(o.output_dim()));
  for (double v : o.weight.values()) w.put_f64(v);
  for (double v : o.bias) w.put_f64(v);
  return std::move(w).take();
}

ClassifierModel decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  ByteReader r(bytes);
  if (r.get_bytes(4, "magic") != kMagic) throw ParseError("bad checkpoint magic", 0);
  const std::size_t version_at = r.offset();
  if (const auto version = r.get_u32("version"); version != kCheckpointVersion) {
    throw ParseError("unsupported checkpoint version " + std::to_string(version), version_at);
  }
  ClassifierModel model;
  const std::size_t task_at = r.offset();
  const std::uint32_t task = r.get_u32("task");
  if (task > 1) throw ParseError("unknown task tag " + std::to_string(task), task_at);
  model.task = task == 0 ? Task::kBinary : Task::kMulticlass;
  model.num_classes = checked_dim(r, "num_classes");
  model.num_clients = checked_dim(r, "num_clients");
  const std::size_t dropout_at = r.offset();
  model.dropout_rate = r.get_f64("dropout");
  if (!(model.dropout_rate >= 0.0 && model.dropout_rate < 1.0)) throw ParseError("invalid dropout rate", dropout_at);
  const std::uint32_t layers = checked_dim(r, "layer count");

  for (std::uint32_t li = 0; li < layers; ++li) {
    const std::size_t tag_at = r.offset();
    const std::uint32_t tag = r.get_u32("layer kind");
    const bool last = li + 1 == layers;
    if ((tag == kTagOutput) != last) throw ParseError("output layer must be last and unique", tag_at);
    const std::uint32_t in = checked_dim(r, "layer input dim");
    const std::uint32_t out = checked_dim(r, "layer output dim");
    if (tag == kTagCgau) {
      const std::uint32_t k = checked_dim(r, "layer client count");
      CgauLayer c{Matrix(in, out), Matrix(in, out), std::vector<double>(out), std::vector<double>(out),
                  Matrix(k, out), Matrix(k, out)};
      read_values(r, c.w_filter.values(), "w_filter");
      read_values(r, c.w_gate.values(), "w_gate");
      read_values(r, c.b_filter, "b_filter");
      read_values(r, c.b_gate, "b_gate");
      read_values(r, c.v_filter.values(), "v_filter");
      read_values(r, c.v_gate.values(), "v_gate");
      model.params.hidden.emplace_back(std::move(c));
    } else if (tag == kTagRelu) {
      ReluLayer l{Matrix(in, out), std::vector<double>(out)};
      read_values(r, l.weight.values(), "relu weight");
      read_values(r, l.bias, "relu bias");
      model.params.hidden.emplace_back(std::move(l));
    } else if (tag == kTagOutput) {
      model.params.output = AffineLayer{Matrix(in, out), std::vector<double>(out)};
      read_values(r, model.params.output.weight.values(), "output weight");
      read_values(r, model.params.output.bias, "output bias");
    } else {
      throw ParseError("unknown layer kind " + std::to_string(tag), tag_at);
    }
  }
  if (r.remaining() != 0) throw ParseError("trailing bytes after checkpoint", r.offset());
  try {
    validate(model);
  } catch (const DimensionError& e) {
    throw ParseError(std::string("inconsistent checkpoint: ") + e.what(), bytes.size());
  }
  return model;
}

void save_checkpoint(const ClassifierModel& model, const std::string& path) {
  write_file_bytes(path, encode_checkpoint(model));
}

ClassifierModel load_checkpoint(const std::string& path) { return decode_checkpoint(read_file_bytes(path)); }

}  // namespace fedcgau::nn
