#pragma once

#include <array>
#include <bit>
#include <concepts>
#include <cstdint>
#include <span>
#include <vector>

#include "inpc/error.hpp"

namespace inpc {

struct SortStats {
  std::size_t key_count = 0;
  int key_bits = 0;
  int passes = 0;
  std::size_t key_bytes = 0;

  /// Passes times keys: the work proxy used for sort-cost accounting.
  std::size_t pass_key_product() const { return static_cast<std::size_t>(passes) * key_count; }
};

/// Order-preserving 32-bit encoding of a positive depth (IEEE float bits reinterpreted).
inline std::uint32_t depth_key(double depth) { return std::bit_cast<std::uint32_t>(static_cast<float>(depth)); }

inline int radix_passes(int key_bits) { return (key_bits + 7) / 8; }

/// Stable LSD radix sort of (key, value) pairs over the low `key_bits` bits, 8 bits per pass.
template <std::unsigned_integral Key, typename Value>
SortStats radix_sort_pairs(std::vector<Key>& keys, std::vector<Value>& values, int key_bits) {
  if (keys.size() != values.size()) fail("radix_sort_pairs: key/value size mismatch");
  if (key_bits < 0 || key_bits > static_cast<int>(8 * sizeof(Key))) fail("radix_sort_pairs: invalid key width");
  SortStats stats{keys.size(), key_bits, radix_passes(key_bits), keys.size() * sizeof(Key)};
  std::vector<Key> key_tmp(keys.size());
  std::vector<Value> value_tmp(values.size());
  for (int pass = 0; pass < stats.passes; ++pass) {
    const int shift = 8 * pass;
    std::array<std::size_t, 257> offsets{};
    for (Key k : keys) ++offsets[((k >> shift) & 0xff) + 1];
    for (int b = 0; b < 256; ++b) offsets[b + 1] += offsets[b];
    for (std::size_t i = 0; i < keys.size(); ++i) {
      const std::size_t dst = offsets[(keys[i] >> shift) & 0xff]++;
      key_tmp[dst] = keys[i];
      value_tmp[dst] = values[i];
    }
    keys.swap(key_tmp);
    values.swap(value_tmp);
  }
  return stats;
}

}  // namespace inpc
