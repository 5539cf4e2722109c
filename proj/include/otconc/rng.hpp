#ifndef OTCONC_RNG_HPP_
#define OTCONC_RNG_HPP_

#include <cstdint>
#include <string_view>

#include "otconc/common.hpp"

namespace otconc {

// Counter-based generation: every variate is a pure function of
// (master, stream, trial, draw), so parallel execution over trials or draws
// cannot change the output.
struct Seed {
  std::uint64_t master = 0;
  std::uint64_t stream = 0;
};

inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline std::uint64_t counter_bits(const Seed& s, std::uint64_t trial,
                                  std::uint64_t draw) {
  std::uint64_t h = mix64(s.master);
  h = mix64(h ^ s.stream);
  h = mix64(h ^ trial);
  h = mix64(h ^ draw);
  return h;
}

// Uniform in [0, 1) with 53 random bits.
inline double counter_uniform(const Seed& s, std::uint64_t trial,
                              std::uint64_t draw) {
  return static_cast<double>(counter_bits(s, trial, draw) >> 11) * 0x1.0p-53;
}

// Uniform in (0, 1); never returns an exact endpoint.
inline double counter_uniform_open(const Seed& s, std::uint64_t trial,
                                   std::uint64_t draw) {
  const double u = counter_uniform(s, trial, draw);
  return u > 0.0 ? u : 0x1.0p-54;
}

inline double counter_normal(const Seed& s, std::uint64_t trial,
                             std::uint64_t draw) {
  return normal_quantile(counter_uniform_open(s, trial, draw));
}

inline std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

// Deterministic sub-stream derivation for named experiment components.
inline Seed derive_stream(const Seed& s, std::uint64_t tag) {
  return Seed{s.master, mix64(s.stream ^ mix64(tag))};
}

inline Seed derive_stream(const Seed& s, std::string_view tag) {
  return derive_stream(s, fnv1a64(tag));
}

}  // namespace otconc

#endif  // OTCONC_RNG_HPP_
