#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace topsync {

// std::uniform_real_distribution is implementation-defined, so draws are
// built from the raw 64-bit engine output to stay bit-reproducible across
// standard libraries.
using Engine = std::mt19937_64;

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Engine& engine) {
  return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

inline double uniform(Engine& engine, double lo, double hi) {
  return lo + (hi - lo) * uniform01(engine);
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Named seed streams. Disorder and initial-condition draws never share one.
enum class SeedStream : std::uint64_t {
  InitialCondition = 0x1c,
  Disorder = 0xd1,
};

/// Deterministic per-job seed from the master seed, a stream tag and the
/// job's sweep/realization indices.
inline std::uint64_t derive_seed(std::uint64_t master, SeedStream stream,
                                 std::initializer_list<std::uint64_t> indices) {
  std::uint64_t h = splitmix64(master ^ splitmix64(static_cast<std::uint64_t>(stream)));
  for (auto i : indices) h = splitmix64(h ^ splitmix64(i + 0x632be59bd9b4e019ULL));
  return h;
}

}  // namespace topsync
