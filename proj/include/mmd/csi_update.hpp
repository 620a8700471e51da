#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "mmd/coded_access.hpp"

namespace mmd {

/// MMSE refinement of the active devices' pattern columns from hard symbol
/// estimates: H_hat = Y (X^H R X + Na Nt sigma2 I)^{-1} X^H R.
/// When Na Nt < J and R is positive definite the equivalent (Na Nt)-square
/// system Y X^H (X X^H + Na Nt sigma2 R^{-1})^{-1} is solved instead.
/// Throws NumericError when the regularized matrix is singular.
CMat refine_csi_mmse(const CMat& y, const CMat& x_tilde, const CMat& r_h, double sigma2, int na, int nt);

/// Copy of `h_prev` with `columns` overwritten by the columns of `h_hat`, in order.
CMat update_channel_matrix(const CMat& h_prev, const CMat& h_hat, const std::vector<int>& columns);

/// Pattern columns of the given devices, device-major.
std::vector<int> device_columns(const std::vector<int>& devices, int nt);

/// ||estimate - truth||_F / ||truth||_F.
double nmse(const CMat& estimate, const CMat& truth);

enum class CsiStrategy { Update, NonUpdate };
std::string_view strategy_name(CsiStrategy s);

struct TrackingConfig {
  SystemConfig sys;       ///< snr, K, Ka, Nt, M, Nr, T0; J comes from the packet layout
  int ls = 20;
  int ld = 260;           ///< 280-bit packets give J = 213 at eta = 4
  double alpha = 0.99;
  int frames = 50;
  int turbo_iterations = 8;
  double turbo_scale = 0.75;
  bool track_signal_nmse = true;  ///< also run detection under the non-update strategy

  TrackingConfig();
  void validate() const;
};

struct FrameRecord {
  int frame = 0;
  CsiStrategy strategy = CsiStrategy::Update;
  double nmse_h = 0.0;
  double nmse_x = 0.0;
  int detected = 0;
  int refined = 0;
};

/// State carried across frames for one strategy.
struct CsiTrackState {
  CsiStrategy strategy = CsiStrategy::Update;
  CMat h_used;
  int frame_idx = 0;
  std::vector<double> nmse_h;
  std::vector<double> nmse_x;
  CMat r_h;  ///< covariance used by the refinement, Nr * I
};

struct TrackingResult {
  std::uint64_t seed = 0;
  std::vector<FrameRecord> update;
  std::vector<FrameRecord> non_update;
};

/// Multi-frame run of both strategies over identical random frames (activity,
/// payloads, channel aging and noise are keyed by seed and frame index).
/// Frame 1 starts from the true channel. Detection is coded DS-AMP without
/// SIC; under the update strategy, devices whose decoded signature matches
/// exactly are re-encoded and their columns refined.
TrackingResult run_multiframe_tracking(const TrackingConfig& cfg, std::uint64_t seed);

}  // namespace mmd
