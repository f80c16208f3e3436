#pragma once

#include <cstdint>
#include <random>

namespace gradiometer {

// splitmix64 finalizer; used to derive independent per-task seeds so that
// batches can run in any order (or in parallel) with identical results.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
  std::uint64_t s = mix64(master ^ 0xd6e8feb86659fd93ULL);
  s = mix64(s ^ a);
  s = mix64(s ^ (b + 0x2545f4914f6cdd1dULL));
  s = mix64(s ^ (c + 0x9e3779b97f4a7c15ULL));
  return s;
}

inline std::mt19937_64 make_rng(std::uint64_t seed) {
  return std::mt19937_64{seed};
}

}  // namespace gradiometer
