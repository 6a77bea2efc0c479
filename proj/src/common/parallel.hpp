#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>

namespace mmae {

// Worker cap for parallel_for. 0 restores the default (hardware concurrency).
void set_max_threads(unsigned n);
unsigned max_threads();

// Runs body(i) for i in [0, n). Each index is visited exactly once; callers
// write results into per-index slots and reduce afterwards in index order, so
// results do not depend on the thread count. A nonzero `cap` further limits
// the worker count for this call.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body, unsigned cap = 0);

// SplitMix64 finalizer; used to derive independent seeds from (seed, a, b, ...).
constexpr std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

template <typename... Rest>
constexpr std::uint64_t derive_seed(std::uint64_t seed, Rest... rest) {
  ((seed = mix_seed(seed ^ mix_seed(static_cast<std::uint64_t>(rest)))), ...);
  return seed;
}

// 64-bit FNV-1a.
std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t h = 0xcbf29ce484222325ULL);

}  // namespace mmae
