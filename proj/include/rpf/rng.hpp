#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <string_view>

namespace rpf {

/// Seedable random source. Wraps mt19937_64 and maps raw bits to
/// distributions explicitly so that sequences are identical across
/// standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t uniform_index(std::uint64_t n);

  bool bernoulli(double p) { return uniform() < p; }

  std::string serialize() const;
  static Rng deserialize(const std::string& text);

  friend bool operator==(const Rng&, const Rng&) = default;

 private:
  std::mt19937_64 engine_;
};

/// Derives an independent stream seed from a master seed, a tag naming the
/// consumer and an index (e.g. ensemble member).
std::uint64_t derive_seed(std::uint64_t master, std::string_view tag, std::uint64_t index = 0);

}  // namespace rpf
