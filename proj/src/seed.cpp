#include "pnpbench/seed.hpp"

namespace pnpbench {

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::span<const SeedLabel> labels) {
  std::uint64_t s = master;
  for (const auto& label : labels) {
    s = splitmix64(s ^ fnv1a64(label.tag));
    s = splitmix64(s ^ static_cast<std::uint64_t>(label.value));
  }
  return s;
}

std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<SeedLabel> labels) {
  return derive_seed(master, std::span<const SeedLabel>(labels.begin(), labels.size()));
}

}  // namespace pnpbench
