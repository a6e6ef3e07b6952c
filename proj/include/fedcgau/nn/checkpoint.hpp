#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "fedcgau/nn/model.hpp"

namespace fedcgau::nn {

// Binary checkpoint layout, all little-endian:
//   "CGAU" | version u32 | task u32 | num_classes u32 | num_clients u32 |
//   dropout f64 | layer_count u32 |
//   per layer: kind u32 (0 relu, 1 cgau, 2 output affine) | in u32 | out u32 |
//              [K u32, cgau only] | parameter blocks as f64, row-major, in
//              param_blocks() order.
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> encode_checkpoint(const ClassifierModel& model);
ClassifierModel decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const ClassifierModel& model, const std::string& path);
ClassifierModel load_checkpoint(const std::string& path);

}  // namespace fedcgau::nn
