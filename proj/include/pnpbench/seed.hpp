#pragma once

#include <cstdint>
#include <initializer_list>
#include <span>
#include <string_view>

namespace pnpbench {

struct SeedLabel {
  std::string_view tag;
  std::int64_t value;
};

// 64-bit FNV-1a over the bytes of `text`.
std::uint64_t fnv1a64(std::string_view text);

// splitmix64 finalizer: z += 0x9E3779B97F4A7C15;
// z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9; z = (z ^ (z >> 27)) * 0x94D049BB133111EB;
// return z ^ (z >> 31).
std::uint64_t splitmix64(std::uint64_t z);

// Folds each label into the master seed in order:
//   s = master
//   for (tag, value): s = splitmix64(s ^ fnv1a64(tag)); s = splitmix64(s ^ uint64(value))
// Pure integer arithmetic, so the result is identical on every platform.
std::uint64_t derive_seed(std::uint64_t master, std::span<const SeedLabel> labels);
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<SeedLabel> labels);

}  // namespace pnpbench
