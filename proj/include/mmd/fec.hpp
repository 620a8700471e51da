#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mmd/error.hpp"

namespace mmd {

/// Saturation bound for every LLR entering or leaving the codec.
inline constexpr double kLlrMax = 30.0;

/// Rate-1/3 parallel-concatenated code built from two 8-state RSC encoders
/// (feedback 1 + D^2 + D^3, feedforward 1 + D + D^3) and a quadratic
/// permutation polynomial interleaver. Each encoder is terminated with three
/// tail steps, which adds 12 coded bits.
struct TurboConfig {
  int info_len = 120;
  int iterations = 8;
  double extrinsic_scale = 0.75;
  std::vector<int> interleaver;  ///< c'_i = c_{interleaver[i]}

  int coded_len() const { return 3 * info_len + 12; }
  static TurboConfig make(int info_len, int iterations = 8, double extrinsic_scale = 0.75);
};

/// Quadratic permutation polynomial pi(i) = (f1 i + f2 i^2) mod len. Uses the
/// standardized coefficients where known and otherwise searches for a valid pair.
std::vector<int> qpp_interleaver(int len);

struct TurboDecodeResult {
  std::vector<std::uint8_t> bits;
  std::vector<double> llrs;  ///< a-posteriori info-bit LLRs, log P(0)/P(1)
};

class TurboCodec {
 public:
  explicit TurboCodec(TurboConfig cfg);

  const TurboConfig& config() const { return cfg_; }
  int info_len() const { return cfg_.info_len; }
  int coded_len() const { return cfg_.coded_len(); }

  /// Output order: (systematic, parity 1, parity 2) per info bit, then the
  /// six tail bits of encoder 1 and the six of encoder 2, each as (x, z) pairs.
  std::vector<std::uint8_t> encode(std::span<const std::uint8_t> bits) const;

  /// Iterative max-log-MAP decoding. LLR convention: positive favours bit 0.
  TurboDecodeResult decode(std::span<const double> llrs) const;

 private:
  struct Trellis {
    int next[8][2];
    int parity[8][2];
  };
  static const Trellis& trellis();

  /// One constituent max-log-MAP pass over info + 3 tail steps.
  void siso(std::span<const double> sys, std::span<const double> par, std::span<const double> apriori,
            std::span<const double> tail_sys, std::span<const double> tail_par, std::span<double> extrinsic,
            std::span<double> posterior) const;

  TurboConfig cfg_;
};

std::vector<std::uint8_t> turbo_encode(std::span<const std::uint8_t> bits, const TurboCodec& codec);
TurboDecodeResult turbo_decode(std::span<const double> llrs, const TurboCodec& codec);

/// J-row, eta-column block interleaver: written by rows, read by columns.
struct BlockInterleaver {
  int cols = 1;  ///< eta
  int rows = 1;  ///< J

  int size() const { return cols * rows; }

  template <typename T>
  std::vector<T> interleave(std::span<const T> in) const {
    check(in.size());
    std::vector<T> out(in.size());
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) out[static_cast<std::size_t>(c) * rows + r] = in[static_cast<std::size_t>(r) * cols + c];
    return out;
  }

  template <typename T>
  std::vector<T> deinterleave(std::span<const T> in) const {
    check(in.size());
    std::vector<T> out(in.size());
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) out[static_cast<std::size_t>(r) * cols + c] = in[static_cast<std::size_t>(c) * rows + r];
    return out;
  }

  /// Output position of input position p.
  int position(int p) const { return (p % cols) * rows + p / cols; }

 private:
  void check(std::size_t n) const {
    if (static_cast<int>(n) != size()) throw UsageError("interleaver length mismatch");
  }
};

std::vector<std::uint8_t> block_interleave(std::span<const std::uint8_t> bits, const BlockInterleaver& il);
std::vector<double> block_deinterleave(std::span<const double> values, const BlockInterleaver& il);

}  // namespace mmd
