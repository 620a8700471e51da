#pragma once

#include <complex>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace mmd {

/// SplitMix64 finalizer; used to derive independent substream keys.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Order-sensitive hash of a key sequence rooted at `seed`.
std::uint64_t derive_key(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) noexcept;

/// FNV-1a, for folding names (algorithm labels, axis names) into keys.
std::uint64_t hash_name(std::string_view name) noexcept;

/// Seeded random source. Every stochastic quantity in a simulation is drawn
/// from a substream keyed by (seed, purpose, frame, ...), so results do not
/// depend on evaluation order or on how many other streams were consumed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

  static Rng substream(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
    return Rng(derive_key(seed, keys));
  }

  std::uint64_t next() { return engine_(); }
  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  double normal() { return normal_(engine_); }
  int bit() { return static_cast<int>(engine_() >> 63); }

  /// Circularly-symmetric complex Gaussian with E|z|^2 = variance.
  std::complex<double> complex_normal(double variance = 1.0);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Stream purposes. Values are part of the reproducibility contract.
namespace stream {
inline constexpr std::uint64_t activity = 1;
inline constexpr std::uint64_t payload = 2;
inline constexpr std::uint64_t channel = 3;
inline constexpr std::uint64_t noise = 4;
inline constexpr std::uint64_t aging = 5;
inline constexpr std::uint64_t se_signal = 6;
inline constexpr std::uint64_t se_noise = 7;
inline constexpr std::uint64_t signature = 8;
}  // namespace stream

}  // namespace mmd
