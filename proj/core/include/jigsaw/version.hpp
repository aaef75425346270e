#pragma once

#include <cstdint>
#include <string_view>

namespace jigsaw {

std::string_view tool_version();

// 64-bit FNV-1a. Used for config and architecture fingerprints that must be
// stable across platforms and runs, which std::hash does not promise.
constexpr std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char ch : text) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace jigsaw
