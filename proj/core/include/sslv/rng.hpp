#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace sslv {

// Deterministic counter-style PRNG built on the SplitMix64 sequence:
// each draw advances the state by the 64-bit golden-ratio constant and
// returns the SplitMix64 finalizer of the new state. The algorithm is
// fixed so streams are portable across platforms and implementations.
//
// Stream derivation:
//   - split(k) draws k seeds from this stream (advancing it) and returns
//     k independent child streams.
//   - child(label) derives a stream purely from (current state, label)
//     without advancing, so equal labels always yield equal streams.
//     Used as rng.child("data").child(epoch).child(sample) to give every
//     worker an order-independent stream.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ull;
    return finalize(state_);
  }

  // Uniform in [0, 1) with 53 random bits.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  // Box-Muller over the uniform stream; consumes exactly two draws.
  double next_gaussian(double mean, double sigma);

  // Uniform integer in [0, n).
  uint64_t next_below(uint64_t n);

  std::vector<Rng> split(int k);

  Rng child(uint64_t label) const {
    return Rng(finalize(state_ ^ finalize(label ^ 0x9E3779B97F4A7C15ull)));
  }

  Rng child(std::string_view label) const { return child(fnv1a(label)); }

  uint64_t state() const { return state_; }

  static uint64_t finalize(uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
  }

  static uint64_t fnv1a(std::string_view s) {
    uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001B3ull;
    }
    return h;
  }

 private:
  uint64_t state_;
};

}  // namespace sslv
