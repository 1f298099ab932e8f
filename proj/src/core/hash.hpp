#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace mg {

// FNV-1a, 64-bit. Used for guard content checksums so reports stay portable.
inline constexpr uint64_t kFnvOffset = 14695981039346656037ull;
inline constexpr uint64_t kFnvPrime = 1099511628211ull;

inline uint64_t fnv1a64(const void* data, size_t len,
                        uint64_t h = kFnvOffset) {
  auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
  return h;
}

inline uint64_t fnv1a64(std::string_view s, uint64_t h = kFnvOffset) {
  return fnv1a64(s.data(), s.size(), h);
}

} // namespace mg
