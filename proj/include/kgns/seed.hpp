#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace kgns {

using Rng = std::mt19937_64;

// Component seeds are derived from the root seed by hashing a label, so adding
// a new labelled stream never shifts an existing one.
std::uint64_t derive_seed(std::uint64_t root, std::string_view label);
std::uint64_t derive_seed(std::uint64_t root, std::string_view label, std::uint64_t index);

inline Rng make_rng(std::uint64_t root, std::string_view label) {
  return Rng(derive_seed(root, label));
}

// 64-bit FNV-1a, used for labels and dataset checksums.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL);

}  // namespace kgns
