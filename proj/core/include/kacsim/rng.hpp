#pragma once

#include <cmath>
#include <cstdint>

#include "kacsim/vec3.hpp"

namespace kacsim {

// 64-bit finalizer used throughout the seed tree and the counter generator.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

// Seed derivation: child(parent, label) = mix64(parent + mix64(label + golden)).
// Labels are small integers (replica index, stream role); the composition is the
// documented pure function behind run -> replica -> stream reproducibility.
inline std::uint64_t seed_child(std::uint64_t parent, std::uint64_t label) {
  return mix64(parent + mix64(label + kGolden));
}

// Counter-based generator: output i is mix64(key + golden * i). Any draw is a pure
// function of (key, counter), so streams can be split and replayed bitwise.
class Rng {
 public:
  explicit Rng(std::uint64_t key = 0) : key_(key) {}

  std::uint64_t next_u64() { return mix64(key_ + kGolden * ++ctr_); }

  // child stream, independent of this stream's future draws
  Rng split(std::uint64_t label) const { return Rng(seed_child(key_, label)); }

  // [0, 1), 53-bit resolution
  double u01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * u01(); }

  // rate > 0; uses 1 - u01() in (0, 1] so the log argument never vanishes
  double exponential(double rate) { return -std::log(1.0 - u01()) / rate; }

  // Box-Muller, one normal per call (no cached state, keeps replay trivial)
  double gauss() {
    double r = std::sqrt(-2.0 * std::log(1.0 - u01()));
    return r * std::cos(6.283185307179586476925286766559 * u01());
  }

  Vec3 gauss3(double sigma) { return {sigma * gauss(), sigma * gauss(), sigma * gauss()}; }

  // unbiased integer in [0, n), Lemire rejection
  std::uint64_t uniform_index(std::uint64_t n) {
    unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * n;
    auto lo = static_cast<std::uint64_t>(m);
    if (lo < n) {
      std::uint64_t t = (0 - n) % n;
      while (lo < t) {
        m = static_cast<unsigned __int128>(next_u64()) * n;
        lo = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return ctr_; }

 private:
  std::uint64_t key_;
  std::uint64_t ctr_ = 0;
};

// Stream roles under one replica seed. Fixed numbering is part of the
// reproducibility contract; appending new roles is allowed, renumbering is not.
enum class StreamRole : std::uint64_t {
  kInit = 0,
  kEvents = 1,
  kReference = 2,
  kAux = 3,
  kSurrogate = 4,
  kBootstrap = 5,
  kMatching = 6,
};

inline Rng make_stream(std::uint64_t run_seed, std::uint64_t replica, StreamRole role) {
  return Rng(seed_child(seed_child(run_seed, replica), static_cast<std::uint64_t>(role)));
}

}  // namespace kacsim
