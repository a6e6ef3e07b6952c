#pragma once

#include <cstdint>
#include <initializer_list>
#include <string_view>

namespace fedcgau {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t hash_tag(std::string_view tag) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Child seed for a (base, role, indices...) tuple. Each component is folded
// through the mixer so that neighbouring indices give unrelated streams.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::string_view role,
                                    std::initializer_list<std::uint64_t> indices = {}) noexcept {
  std::uint64_t s = mix64(base ^ mix64(hash_tag(role)));
  for (std::uint64_t i : indices) s = mix64(s ^ mix64(i + 0x632be59bd9b4e019ULL));
  return s;
}

}  // namespace fedcgau
