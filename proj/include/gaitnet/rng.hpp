#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace gaitnet {

// Seeded random source. The engine is std::mt19937_64, whose output sequence
// is fixed by the C++ standard; the conversions to floating point below are
// written out explicitly because the std:: distributions are
// implementation-defined and would break cross-platform reproducibility.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; one pair of uniforms per draw.
  double normal();

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Unbiased integer in [0, bound). bound must be positive.
  std::uint64_t below(std::uint64_t bound);

  // Textual engine state, suitable for checkpoints.
  std::string state() const;
  void restore(std::string_view state);

  bool operator==(const Rng& other) const { return engine_ == other.engine_; }

 private:
  std::mt19937_64 engine_;
};

// SplitMix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix64(std::uint64_t x);

// Seed for a named sub-stream, e.g. derive_seed(master, epoch).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

// Seed for a keyed sub-stream (FNV-1a of the key, then mixed).
std::uint64_t derive_seed(std::uint64_t seed, std::string_view key);

}  // namespace gaitnet
