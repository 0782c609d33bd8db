#pragma once

#include <cstdint>
#include <span>
#include <string_view>

namespace ceres {

/// Counter-based pseudo-random generator.
///
/// The n-th output of a stream is `mix64(key + n * kGamma)`, where `mix64`
/// is the SplitMix64 finalizer. A stream is therefore fully described by its
/// key and position, and independent substreams are obtained by hashing a
/// parent key together with an index (`Rng::stream`). All derived
/// distributions are implemented here so the output bytes do not depend on
/// the standard library in use.
class Rng {
 public:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

  explicit Rng(std::uint64_t key) : key_(key) {}

  /// Independent stream for trial `index` of an experiment seeded with `seed`.
  static Rng stream(std::uint64_t seed, std::uint64_t index);

  /// Child stream split off this one; does not advance this stream.
  [[nodiscard]] Rng split(std::uint64_t index) const;

  std::uint64_t next_u64();

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);
  /// Uniform integer on [0, n). n must be positive.
  std::uint64_t uniform_int(std::uint64_t n);
  /// Standard normal via Box-Muller (one draw cached).
  double normal();
  /// Exponential with unit rate.
  double exponential();
  /// Index drawn with probability proportional to `probs`; inverse-CDF.
  std::size_t categorical(std::span<const double> probs);

  [[nodiscard]] std::uint64_t key() const { return key_; }
  [[nodiscard]] std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t mix64(std::uint64_t z);

/// FNV-1a 64-bit hash of a byte string.
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace ceres
