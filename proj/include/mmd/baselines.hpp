#pragma once

#include <string_view>
#include <vector>

#include "mmd/dsamp.hpp"
#include "mmd/metrics.hpp"

namespace mmd {

struct LmmseResult {
  CMat x_hat;                  ///< Ka x J linear estimates
  std::vector<int> decisions;  ///< Ka x J row-major nearest-point indices
};

/// Genie-aided linear MMSE multi-user detector for single-antenna users:
/// x_hat = (H^H H + sigma2 I)^{-1} H^H y per slot, then nearest-point demapping.
LmmseResult lmmse_detect(const CMat& y, const CMat& h_active, double sigma2, const Constellation& c);

/// Conventional AMP with the unstructured Bernoulli-QAM prior at a known
/// per-element nonzero probability and a known noise variance. No EM, no
/// coupling across slots or mirror patterns. The activity indicator of device
/// k is the slot-averaged posterior probability that its block is nonzero.
DetectionResult conventional_amp(const CMat& y, const CMat& h, const Constellation& c, int nt, int t0,
                                 double p_nonzero, double sigma2);

/// DS-AMP with the min-max step removed: a_hat is thresholded directly.
DetectionResult dsamp_no_minmax(const CMat& y, const CMat& h, const Constellation& c, const DsampParams& p);

enum class Algorithm { Dsamp, Amp, DsampNoMinmax, Lmmse };

Algorithm parse_algorithm(std::string_view name);
std::string_view algorithm_name(Algorithm a);

/// Complex-multiplication count per frame (real products weigh 1/4).
double complexity_count(const SystemConfig& cfg, std::string_view algorithm);

}  // namespace mmd
