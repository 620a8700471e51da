#pragma once

#include <span>
#include <vector>

#include "mmd/sysmodel.hpp"

namespace mmd {

/// Numerical guards of the detector.
inline constexpr double kVarianceFloor = 1e-12;
inline constexpr double kActivityClamp = 1e-12;
inline constexpr double kInitialNoiseVariance = 100.0;

/// Iteration state of the message-passing detector. Element (l, j) with
/// l = k*Nt + i addresses pattern i of device k in slot j.
struct AmpState {
  CMat z;       ///< Nr x J plug-in residual means
  RMat v;       ///< Nr x J residual variances
  CMat r;       ///< (K*Nt) x J pseudo-channel means
  RMat phi;     ///< (K*Nt) x J pseudo-channel variances
  CMat x_hat;   ///< posterior means
  RMat v_hat;   ///< posterior variances
  Eigen::VectorXd a_hat;  ///< activity indicators
  double sigma2 = kInitialNoiseVariance;
  int iter = 0;
  int nt = 1;
  int alphabet = 0;  ///< M + 1 entries per element pmf: index 0 is the zero symbol
  /// Log posterior pmf over {0} U S for every element, laid out as
  /// ((j * K*Nt + l) * (M + 1) + s). Filled by the denoising step.
  std::vector<double> log_pmf;

  int devices() const { return static_cast<int>(a_hat.size()); }
  int slots() const { return static_cast<int>(x_hat.cols()); }
  std::span<const double> block_log_pmf(int k, int j) const;
};

/// Scalar posterior of one element of x under the media-modulation prior.
struct DenoiserOutput {
  cd mean{};
  double variance = 0.0;
  std::vector<double> pmf;  ///< M + 1 weights; pmf[0] is the zero symbol, pmf[1 + s] point s
};

/// Posterior of one element given r = x + CN(0, phi), prior
/// (1 - a/Nt) delta(x) + a/(Nt M) sum_s delta(x - s). Log-domain evaluation.
DenoiserOutput denoise_element(cd r, double phi, double a_k, const Constellation& c, int nt);

/// Same posterior for a generic prior (1 - p) delta(x) + p/M sum_s delta(x - s).
/// Writes the log pmf (M + 1 entries) to `log_pmf`, returns mean and variance.
void element_posterior(cd r, double phi, double p_nonzero, const Constellation& c,
                       std::span<double> log_pmf, cd& mean, double& variance);

/// Line-1 initialisation: a = 0.5, Z = Y, V = 1, sigma2 = 100, prior moments.
AmpState init_state(const CMat& y, int devices, int nt, const Constellation& c,
                    double initial_activity = 0.5);

/// Factor-node (V, Z) and variable-node (phi, r) updates. `h_abs2` is the
/// elementwise |H|^2. The Onsager correction uses the previous Z, V.
void decouple_step(AmpState& s, const CMat& y, const CMat& h, const RMat& h_abs2);
void decouple_step(AmpState& s, const CMat& y, const CMat& h);

/// Denoising step for all elements with per-device nonzero probability p_k.
void denoise_step(AmpState& s, const Constellation& c, std::span<const double> p_nonzero, double damping = 1.0);

/// EM noise-variance update from the current Z, V and sigma2.
double em_update_noise(const AmpState& s, const CMat& y);

/// Sum over the one-hot candidates of the product of per-element pmfs, for a
/// block of Nt element log-pmfs (each M + 1 long).
double one_hot_mass(std::span<const double> block_log_pmf, int nt, int alphabet);

/// EM activity update for device k: slot-average of the one-hot candidate mass.
double em_update_activity(const AmpState& s, int k);

/// (a - min) / (max - min); a flat vector maps to all zeros.
Eigen::VectorXd minmax_normalize(const Eigen::VectorXd& a_hat);

/// Indices with a_tilde > threshold (strict), ascending.
std::vector<int> detect_activity(const Eigen::VectorXd& a_tilde, double threshold = 0.5);

struct Reconstruction {
  std::vector<int> map_indices;  ///< K x J row-major, zero-based pattern with largest |x_hat|
  CMat x_hat;                    ///< (K*Nt) x J, nonzero only on detected devices' chosen patterns
};

Reconstruction extract_and_reconstruct(const AmpState& s, const std::vector<int>& omega);

struct IterationRecord {
  int iter = 0;
  double sigma2_hat = 0.0;
  double mean_v_hat = 0.0;
  Eigen::VectorXd a_hat;
};

struct DsampParams {
  int nt = 4;
  int t0 = 15;
  bool minmax = true;     ///< false: threshold a_hat directly
  double damping = 1.0;   ///< weight of the new posterior mean
  bool keep_trace = true;
};

struct DetectionResult {
  std::vector<int> omega;
  Eigen::VectorXd a_hat;
  Eigen::VectorXd a_tilde;
  CMat x_hat;
  std::vector<int> map_indices;
  std::vector<IterationRecord> trace;
  double sigma2_hat = 0.0;
  double complex_mults = 0.0;  ///< complex-multiplication count (real ones weigh 1/4)
};

/// Options of the generic iteration loop shared by DS-AMP and the
/// unstructured-prior AMP baseline.
struct AmpLoopOptions {
  int t0 = 15;
  double damping = 1.0;
  bool learn_noise = true;
  bool learn_activity = true;
  double fixed_sigma2 = kInitialNoiseVariance;  ///< used when learn_noise is false
  double fixed_p_nonzero = -1.0;                ///< per-element prior when learn_activity is false
  bool keep_trace = true;
};

/// Lines 1-9: iterate decoupling, denoising and EM learning. Throws
/// NumericError naming the iteration on non-finite values.
AmpState run_amp_loop(const CMat& y, const CMat& h, const Constellation& c, int nt,
                      const AmpLoopOptions& opts, std::vector<IterationRecord>* trace = nullptr,
                      double* complex_mults = nullptr);

AmpState run_dsamp_core(const CMat& y, const CMat& h, const Constellation& c, const DsampParams& p,
                        std::vector<IterationRecord>* trace = nullptr, double* complex_mults = nullptr);

/// Full detector: core iterations, min-max normalisation, thresholding,
/// pattern extraction and reconstruction.
DetectionResult run_dsamp(const CMat& y, const CMat& h, const Constellation& c, const DsampParams& p);

/// Hard demodulation of the reconstructed signal: spatial bits from the chosen
/// pattern, QAM bits from the nearest point. Empty entries for undetected devices.
std::vector<Bits> hard_demod(const CMat& x_hat, const std::vector<int>& omega,
                             const std::vector<int>& map_indices, int nt, int nrf, const Constellation& c);

}  // namespace mmd
