#include "fedcgau/data/io.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>

#include "fedcgau/bytes.hpp"
#include "fedcgau/error.hpp"
#include "fedcgau/text.hpp"

namespace fedcgau::data {
namespace {

constexpr std::string_view kMagic = "EMB1";

}  // namespace

std::vector<std::uint8_t> write_emb1(const EmbeddingDataset& ds) {
  validate(ds);
  ByteWriter w;
  w.put_bytes(kMagic);
  w.put_u32(kEmb1Version);
  w.put_u32(static_cast<std::uint32_t>(ds.size()));
  w.put_u32(static_cast<std::uint32_t>(ds.dim()));
  w.put_u32(static_cast<std::uint32_t>(ds.num_classes));
  for (int y : ds.labels) w.put_u32(static_cast<std::uint32_t>(y));
  for (double v : ds.features.values()) {
    const float f = static_cast<float>(v);
    if (!std::isfinite(f)) throw ValidationError("feature value " + format_double(v) + " overflows f32");
    w.put_f32(f);
  }
  return std::move(w).take();
}

EmbeddingDataset read_emb1(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  const std::string magic = r.get_bytes(4, "magic");
  if (magic != kMagic) throw ParseError("bad magic, expected \"EMB1\"", 0);
  const std::size_t version_at = r.offset();
  if (const auto v = r.get_u32("version"); v != kEmb1Version) {
    throw ParseError("unsupported EMB1 version " + std::to_string(v), version_at);
  }
  const std::uint64_t n = r.get_u32("N");
  const std::size_t d_at = r.offset();
  const std::uint64_t d = r.get_u32("D");
  if (d == 0) throw ParseError("feature dimension D must be positive", d_at);
  const std::size_t c_at = r.offset();
  const std::uint64_t c = r.get_u32("C");
  if (c == 0) throw ParseError("class count C must be positive", c_at);

  const std::uint64_t label_bytes = 4 * n;
  if (r.remaining() < label_bytes) {
    throw ParseError("truncated stream in label block: expected " + std::to_string(label_bytes) + " bytes, got " +
                         std::to_string(r.remaining()),
                     r.offset());
  }
  const std::uint64_t feature_count = n * d;  // < 2^64 since both are u32
  const std::uint64_t available = r.remaining() - label_bytes;
  if (feature_count > available / 4 || available < 4 * feature_count) {
    throw ParseError("truncated stream in feature block: expected " + std::to_string(feature_count) +
                         " f32 values (" + std::to_string(feature_count) + " x 4 bytes), got " +
                         std::to_string(available) + " bytes",
                     r.offset() + label_bytes);
  }

  EmbeddingDataset ds;
  ds.num_classes = c;
  ds.labels.resize(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    const std::size_t at = r.offset();
    const std::uint32_t y = r.get_u32("label");
    if (y >= c) {
      throw ParseError("label " + std::to_string(y) + " of sample " + std::to_string(i) + " is not below C=" +
                           std::to_string(c),
                       at);
    }
    ds.labels[i] = static_cast<int>(y);
  }
  ds.features = Matrix(n, d);
  for (std::uint64_t i = 0; i < n * d; ++i) {
    const std::size_t at = r.offset();
    const float f = r.get_f32("feature");
    if (!std::isfinite(f)) {
      throw ParseError("non-finite feature at sample " + std::to_string(i / d) + ", column " + std::to_string(i % d),
                       at);
    }
    ds.features.data()[i] = f;
  }
  if (r.remaining() != 0) {
    throw ParseError("unexpected " + std::to_string(r.remaining()) + " trailing bytes", r.offset());
  }
  return ds;
}

EmbeddingDataset read_emb1(std::istream& in) {
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return read_emb1(bytes);
}

void save_emb1(const EmbeddingDataset& ds, const std::string& path) { write_file_bytes(path, write_emb1(ds)); }

EmbeddingDataset load_emb1(const std::string& path) { return read_emb1(read_file_bytes(path)); }

EmbeddingDataset read_csv(std::istream& in) {
  std::string line;
  std::size_t offset = 0;
  if (!std::getline(in, line)) throw ParseError("empty CSV, expected header", 0);
  const auto header = split_fields(trim(line));
  if (header.empty() || trim(header[0]) != "label") throw ParseError("CSV header must start with 'label'", 0);
  const std::size_t d = header.size() - 1;
  if (d == 0) throw ParseError("CSV has no feature columns", 0);
  for (std::size_t j = 0; j < d; ++j) {
    if (trim(header[j + 1]) != "f" + std::to_string(j)) {
      throw ParseError("CSV header column " + std::to_string(j + 1) + " must be f" + std::to_string(j), 0);
    }
  }
  offset += line.size() + 1;

  std::vector<double> values;
  std::vector<int> labels;
  int max_label = -1;
  while (std::getline(in, line)) {
    const std::size_t line_at = offset;
    offset += line.size() + 1;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(trim(line));
    if (fields.size() != d + 1) {
      throw ParseError("CSV row has " + std::to_string(fields.size()) + " fields, expected " + std::to_string(d + 1),
                       line_at);
    }
    int y = 0;
    if (!parse_number(fields[0], y) || y < 0) throw ParseError("invalid label '" + std::string(fields[0]) + "'", line_at);
    labels.push_back(y);
    max_label = std::max(max_label, y);
    for (std::size_t j = 0; j < d; ++j) {
      double v = 0.0;
      if (!parse_number(fields[j + 1], v) || !std::isfinite(v)) {
        throw ParseError("invalid feature '" + std::string(fields[j + 1]) + "'", line_at);
      }
      values.push_back(v);
    }
  }
  EmbeddingDataset ds;
  const std::size_t n = labels.size();
  ds.features = Matrix(n, d, std::move(values));
  ds.labels = std::move(labels);
  ds.num_classes = static_cast<std::size_t>(max_label + 1);
  return ds;
}

void write_csv(const EmbeddingDataset& ds, std::ostream& out) {
  validate(ds);
  out << "label";
  for (std::size_t j = 0; j < ds.dim(); ++j) out << ",f" << j;
  out << '\n';
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out << ds.labels[i];
    for (double v : ds.features.row(i)) out << ',' << format_double(v);
    out << '\n';
  }
}

EmbeddingDataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  return read_csv(in);
}

void save_csv(const EmbeddingDataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path);
  write_csv(ds, out);
}

}  // namespace fedcgau::data
