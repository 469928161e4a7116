#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace tresim {

/// Random stream used everywhere. Streams are passed explicitly; nothing
/// in the library touches global or wall-clock entropy.
using Rng = std::mt19937_64;

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace detail

/// 64-bit FNV-1a, used to turn experiment names into stream keys.
constexpr std::uint64_t name_key(std::string_view name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Child seed as a hash of (master, key path). Two different paths give
/// unrelated seeds, and the result does not depend on evaluation order, so
/// any cell of an experiment grid can be recomputed in isolation.
inline std::uint64_t derive_seed(std::uint64_t master,
                                 std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = detail::splitmix64(master);
  for (std::uint64_t k : path) {
    h = detail::splitmix64(h ^ detail::splitmix64(k + 0x632be59bd9b4e019ULL));
  }
  return h;
}

inline Rng make_stream(std::uint64_t master,
                       std::initializer_list<std::uint64_t> path) {
  return Rng(derive_seed(master, path));
}

inline double standard_normal(Rng& rng) {
  return std::normal_distribution<double>(0.0, 1.0)(rng);
}

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace tresim
