#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace cdp {

/// Engine for one independent stream. The key words (master seed, replica,
/// a descriptor of what is being sampled) are spread through std::seed_seq,
/// so streams for different keys are decorrelated and reproducible.
inline std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t replica,
                                   std::initializer_list<std::uint64_t> tag = {}) {
  std::vector<std::uint32_t> words;
  words.reserve(4 + 2 * tag.size());
  auto push = [&](std::uint64_t x) {
    words.push_back(static_cast<std::uint32_t>(x));
    words.push_back(static_cast<std::uint32_t>(x >> 32));
  };
  push(seed);
  push(replica);
  for (std::uint64_t t : tag) push(t);
  std::seed_seq seq(words.begin(), words.end());
  return std::mt19937_64(seq);
}

/// Uniform double in [0,1) with 53 random bits.
inline double uniform01(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

/// 64-bit FNV-1a, used for stable hashes of descriptors and configs.
inline std::uint64_t fnv1a(const void* data, std::size_t len,
                           std::uint64_t h = 14695981039346656037ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace cdp
