#include "mmd/metrics.hpp"

#include <algorithm>
#include <limits>

#include "mmd/dsamp.hpp"
#include "mmd/error.hpp"

namespace mmd {

namespace {

double ratio(long long num, long long den) {
  return den > 0 ? static_cast<double>(num) / static_cast<double>(den) : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

ErrorCounts& ErrorCounts::operator+=(const ErrorCounts& o) {
  frames += o.frames;
  devices += o.devices;
  active += o.active;
  missed += o.missed;
  false_alarms += o.false_alarms;
  symbols += o.symbols;
  symbol_errors += o.symbol_errors;
  bits += o.bits;
  bit_errors += o.bit_errors;
  return *this;
}

double ErrorCounts::ader() const { return ratio(missed + false_alarms, devices); }
double ErrorCounts::ser() const { return ratio(symbol_errors, symbols); }
double ErrorCounts::ber() const { return ratio(bit_errors, bits); }

ErrorCounts count_activity_errors(const ActivityVector& truth, const std::vector<int>& omega) {
  ErrorCounts e;
  e.frames = 1;
  e.devices = static_cast<long long>(truth.size());
  std::vector<char> detected(truth.size(), 0);
  for (int k : omega) {
    if (k < 0 || k >= static_cast<int>(truth.size())) throw UsageError("detected index out of range");
    detected[k] = 1;
  }
  for (std::size_t k = 0; k < truth.size(); ++k) {
    if (truth[k]) {
      ++e.active;
      if (!detected[k]) ++e.missed;
    } else if (detected[k]) {
      ++e.false_alarms;
    }
  }
  return e;
}

ErrorCounts count_detection_errors(const MediaFrame& truth, const std::vector<int>& omega,
                                   const std::vector<int>& map_indices, const CMat& x_hat,
                                   const Constellation& c, int nrf) {
  ErrorCounts e = count_activity_errors(truth.activity, omega);
  const int j = truth.j;
  const int nt = truth.nt;
  const int eta = nrf + c.bits;
  e.symbols = static_cast<long long>(j) * e.active;
  e.bits = static_cast<long long>(eta) * e.symbols;
  e.symbol_errors = static_cast<long long>(j) * e.missed;
  e.bit_errors = static_cast<long long>(eta) * j * e.missed;

  for (int k : omega) {
    if (!truth.activity[k]) continue;
    for (int jj = 0; jj < j; ++jj) {
      const MediaSymbol& s = *truth.symbol(k, jj);
      const int map = map_indices[static_cast<std::size_t>(k) * j + jj];
      const int q = c.nearest(x_hat(k * nt + map, jj));
      const int med_err = __builtin_popcount(static_cast<unsigned>(map ^ s.map_index));
      const int qam_err = __builtin_popcount(c.labels[q] ^ c.labels[s.qam_index]);
      e.bit_errors += med_err + qam_err;
      if (map != s.map_index || q != s.qam_index) ++e.symbol_errors;
    }
  }
  return e;
}

ErrorCounts compute_metrics(const MediaFrame& truth, const DetectionResult& result, const Constellation& c,
                            int nrf) {
  return count_detection_errors(truth, result.omega, result.map_indices, result.x_hat, c, nrf);
}

}  // namespace mmd
