#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "fedcgau/data/dataset.hpp"

namespace fedcgau::data {

// EMB1: "EMB1" | version u32 | N u32 | D u32 | C u32 | labels N x u32 |
// features N x D x f32 row-major; all little-endian.
inline constexpr std::uint32_t kEmb1Version = 1;

// Features are narrowed to f32 on write.
std::vector<std::uint8_t> write_emb1(const EmbeddingDataset& ds);
// Throws ParseError (with byte offset) on any malformed input.
EmbeddingDataset read_emb1(std::span<const std::uint8_t> bytes);
EmbeddingDataset read_emb1(std::istream& in);

void save_emb1(const EmbeddingDataset& ds, const std::string& path);
EmbeddingDataset load_emb1(const std::string& path);

// CSV with header "label,f0,...,f{D-1}". num_classes is max label + 1.
EmbeddingDataset read_csv(std::istream& in);
void write_csv(const EmbeddingDataset& ds, std::ostream& out);

EmbeddingDataset load_csv(const std::string& path);
void save_csv(const EmbeddingDataset& ds, const std::string& path);

}  // namespace fedcgau::data
