#pragma once

#include <cstdint>
#include <numbers>

namespace qcme {

// splitmix64 step: advances the state and returns a well-mixed 64-bit word.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Stateless avalanche of a single word (splitmix64 with throwaway state).
inline std::uint64_t mix64(std::uint64_t x) { return splitmix64_next(x); }

// Map a 64-bit word to (0, 1) strictly (53-bit mantissa, half-ulp offset so
// neither endpoint is reachable).
inline double u01(std::uint64_t word) {
  return (double(word >> 11) + 0.5) * 0x1.0p-53;
}

// Sequential stream generator; one instance per ensemble realization.
class SplitMix {
 public:
  explicit SplitMix(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next() { return splitmix64_next(state_); }
  double uniform01() { return u01(next()); }
  // Uniform phase on (-pi, pi).
  double phase() { return (2.0 * uniform01() - 1.0) * std::numbers::pi; }

 private:
  std::uint64_t state_;
};

// Documented stream-splitting rule: realization r of an ensemble seeded with
// `seed` draws from SplitMix(derive_stream(seed, r)).
inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t realization) {
  return mix64(seed ^ mix64(realization + 1));
}

// Counter-based phase for walk ensembles: a pure function of
// (seed, site, step, realization), so results are independent of scheduling.
inline double counter_phase(std::uint64_t seed, std::uint64_t site, std::uint64_t step,
                            std::uint64_t realization) {
  std::uint64_t h = seed;
  h = mix64(h ^ (site + 0x9E3779B97F4A7C15ULL));
  h = mix64(h ^ (step + 0xBF58476D1CE4E5B9ULL));
  h = mix64(h ^ (realization + 0x94D049BB133111EBULL));
  return (2.0 * u01(h) - 1.0) * std::numbers::pi;
}

}  // namespace qcme
