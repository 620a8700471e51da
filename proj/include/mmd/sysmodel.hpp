#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mmd/rng.hpp"

namespace mmd {

using cd = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using RMat = Eigen::MatrixXd;
using Bits = std::vector<std::uint8_t>;

/// Scenario parameters of one grant-free access frame.
struct SystemConfig {
  int k = 500;   ///< devices
  int ka = 50;   ///< active devices per frame
  int nrf = 2;   ///< RF mirrors per device; Nt = 2^nrf mirror activation patterns
  int m = 4;     ///< square QAM order
  int nr = 256;  ///< base-station antennas
  int j = 12;    ///< slots per frame
  double snr_db = 5.0;
  std::uint64_t seed = 1;
  int t0 = 15;   ///< detector iterations

  int nt() const { return 1 << nrf; }
  int qam_bits() const;
  int eta() const { return nrf + qam_bits(); }  ///< bits per media symbol
  int columns() const { return k * nt(); }      ///< K*Nt
  double lambda() const { return static_cast<double>(ka) / k; }
  double kappa() const { return static_cast<double>(nr) / k; }

  /// Throws ConfigError on violated invariants.
  void validate() const;
};

/// Unit-energy constellation with a bit label per point.
struct Constellation {
  std::vector<cd> points;
  std::vector<std::uint32_t> labels;  ///< labels[i] is the bit label of points[i], MSB first
  int bits = 0;

  int order() const { return static_cast<int>(points.size()); }
  cd sum() const;
  double mean_energy() const;
  /// Index of the closest point (ties to the lowest index).
  int nearest(cd value) const;
  /// Index of the point whose label equals `label`.
  int index_of_label(std::uint32_t label) const;
  /// Bit `b` (0 = MSB) of point `index`.
  int label_bit(int index, int b) const { return (labels[index] >> (bits - 1 - b)) & 1u; }

  /// Arbitrary alphabet, e.g. BPSK {+1,-1} for small worked examples.
  static Constellation from_points(std::vector<cd> points, std::vector<std::uint32_t> labels, int bits);
};

/// Gray-labelled square QAM with unit average energy; M in {4, 16, 64}.
Constellation make_constellation(int m);

/// Binary activity pattern with exactly Ka ones.
using ActivityVector = std::vector<std::uint8_t>;

ActivityVector draw_activity(const SystemConfig& cfg, Rng& rng);

/// One media-modulated symbol: a QAM point radiated through one mirror
/// activation pattern. `map_index` is zero-based (pattern `map_index + 1`).
struct MediaSymbol {
  int map_index = 0;
  int qam_index = 0;
  cd qam_point{};
  Bits spatial_bits;
  Bits qam_bits;

  /// The Nt-vector x = s * d with d one-hot at map_index.
  Eigen::VectorXcd vector(int nt) const;
};

/// Maps Nrf spatial bits (natural binary, MSB first) and log2(M) Gray bits.
MediaSymbol modulate_symbol(std::span<const std::uint8_t> spatial_bits,
                            std::span<const std::uint8_t> qam_bits, const Constellation& c);

/// Splits an eta-bit group: first Nrf bits spatial, remaining bits QAM.
MediaSymbol modulate_group(std::span<const std::uint8_t> group, int nrf, const Constellation& c);

struct MediaFrame {
  ActivityVector activity;
  std::vector<std::optional<MediaSymbol>> symbols;  ///< row-major K x J
  CMat x;                                           ///< (K*Nt) x J
  std::vector<Bits> source_bits;                    ///< eta*J bits per active device, empty otherwise
  int k = 0;
  int j = 0;
  int nt = 0;

  const std::optional<MediaSymbol>& symbol(int device, int slot) const {
    return symbols[static_cast<std::size_t>(device) * j + slot];
  }
  int active_count() const;
};

/// Frame carrying explicit per-device bit payloads (eta*J bits each active device).
MediaFrame build_frame(const SystemConfig& cfg, const ActivityVector& activity,
                       const Constellation& c, const std::vector<Bits>& payloads);
/// Frame with uniformly random payload bits.
MediaFrame build_frame(const SystemConfig& cfg, const ActivityVector& activity,
                       const Constellation& c, Rng& rng);
/// Frame from already-modulated per-device symbol sequences (length J each).
MediaFrame frame_from_symbols(const SystemConfig& cfg, const ActivityVector& activity,
                              std::vector<std::vector<MediaSymbol>> per_device,
                              std::vector<Bits> source_bits);

struct ChannelMatrix {
  CMat h;                       ///< Nr x (K*Nt)
  double entry_variance = 1.0;  ///< gamma
};

ChannelMatrix draw_rayleigh_channel(const SystemConfig& cfg, Rng& rng, double entry_variance = 1.0);

/// First-order Gauss-Markov block fading parameters.
struct ArChannelConfig {
  double alpha = 0.99;
  int tau = 1;
  double carrier_hz = 0.0;
  double bandwidth_hz = 0.0;
  double velocity_mps = 0.0;

  /// Derives tau = floor(Tc/Ts) with Tc = 0.423/f_m and alpha from alpha^(tau/2) = 0.5.
  static ArChannelConfig from_mobility(double carrier_hz, double bandwidth_hz, double velocity_mps);
  void validate() const;
};

/// H' = sqrt(alpha) H + sqrt(1 - alpha) V, V i.i.d. CN(0, gamma). Requires alpha in [0, 1].
ChannelMatrix evolve_channel_ar(const ChannelMatrix& h, double alpha, Rng& rng);

/// Y = H X + W with W i.i.d. CN(0, noise_variance).
CMat transmit(const CMat& h, const CMat& x, double noise_variance, Rng& rng);

/// Received-SNR convention: per-antenna signal power Ka over noise variance.
double snr_to_noise_variance(const SystemConfig& cfg);

}  // namespace mmd
