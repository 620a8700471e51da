#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mmd/sysmodel.hpp"

namespace mmd {

struct DetectionResult;

/// Raw error tallies. Rates are ratios of the accumulated sums, so merging
/// frames with a constant Ka equals averaging the per-frame rates.
struct ErrorCounts {
  long long frames = 0;
  long long devices = 0;        ///< K per frame
  long long active = 0;         ///< Ka per frame
  long long missed = 0;         ///< E_m
  long long false_alarms = 0;   ///< E_f
  long long symbols = 0;        ///< J * Ka
  long long symbol_errors = 0;  ///< J * E_m + E_symbol
  long long bits = 0;           ///< eta * J * Ka (or payload bits for coded runs)
  long long bit_errors = 0;     ///< eta * J * E_m + E_MED + E_QAM

  ErrorCounts& operator+=(const ErrorCounts& o);

  /// NaN when the denominator is zero (e.g. Ka = 0 for SER and BER).
  double ader() const;
  double ser() const;
  double ber() const;
};

/// Activity errors only.
ErrorCounts count_activity_errors(const ActivityVector& truth, const std::vector<int>& omega);

/// Activity, symbol and bit errors of an uncoded detection. A symbol is wrong if
/// its pattern or its QAM point is wrong; a missed device loses all J symbols.
ErrorCounts count_detection_errors(const MediaFrame& truth, const std::vector<int>& omega,
                                   const std::vector<int>& map_indices, const CMat& x_hat,
                                   const Constellation& c, int nrf);

ErrorCounts compute_metrics(const MediaFrame& truth, const DetectionResult& result, const Constellation& c,
                            int nrf);

/// One CSV result row.
struct MetricRow {
  std::vector<std::pair<std::string, std::string>> params;  ///< swept parameters, in column order
  std::string algorithm;
  ErrorCounts counts;
  std::uint64_t seed = 0;
  double wall_time = 0.0;
};

}  // namespace mmd
