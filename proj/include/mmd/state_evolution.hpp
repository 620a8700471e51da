#pragma once

#include <utility>
#include <vector>

#include "mmd/metrics.hpp"
#include "mmd/sysmodel.hpp"

namespace mmd {

struct SeConfig {
  SystemConfig sys;
  double gamma = 1.0;    ///< measurement-entry variance
  int n_mc = 500;        ///< Monte-Carlo signal realizations
  int t_se = 50;         ///< iteration cap
  double epsilon = 1e-5; ///< stop when |e^{t+1} - e^t| < epsilon
  double sigma2 = -1.0;  ///< noise variance; negative derives it from sys.snr_db

  double noise_variance() const;
  void validate() const;
};

struct SeTrace {
  std::vector<double> e;  ///< predicted per-element MSE after each iteration
  std::vector<double> v;  ///< average posterior variance after each iteration
  double predicted_ader = 0.0;
  double predicted_ser = 0.0;
  double predicted_ber = 0.0;
  ErrorCounts counts;     ///< tallies behind the predicted rates
};

/// Equivalent scalar channel: returns (r0, phi0) with
/// r0 = x0 + sqrt((sigma2 + gamma K Nt e) / (Nr gamma)) z and
/// phi0 = (sigma2 + gamma K Nt v) / (Nr gamma).
std::pair<cd, double> se_scalar_channel(cd x0, double e, double v, const SeConfig& cfg, Rng& rng);

/// Monte-Carlo state evolution. Each realization is a full K x Nt x J signal
/// tensor with exactly Ka active devices, passed elementwise through the
/// scalar channel, denoised with per-realization activity indicators that are
/// re-learned every iteration.
SeTrace se_iterate(const SeConfig& cfg);

/// Error rates from per-realization hard decisions (same rules as the
/// detector: min-max, threshold, largest-magnitude pattern, nearest point).
ErrorCounts se_error_rates(const std::vector<MediaFrame>& realizations,
                           const std::vector<Eigen::VectorXd>& activity_indicators,
                           const std::vector<CMat>& posterior_means, const Constellation& c, int nrf);

/// Realization m of the SE signal ensemble.
MediaFrame se_realization(const SeConfig& cfg, const Constellation& c, int m);

}  // namespace mmd
