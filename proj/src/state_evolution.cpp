#include "mmd/state_evolution.hpp"

#include <algorithm>
#include <cmath>

#include "mmd/dsamp.hpp"
#include "mmd/error.hpp"

namespace mmd {

namespace {

/// Neumaier summation so the reduction does not depend on magnitude ordering.
struct CompensatedSum {
  double sum = 0.0;
  double comp = 0.0;
  void add(double x) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x))
      comp += (sum - t) + x;
    else
      comp += (x - t) + sum;
    sum = t;
  }
  double value() const { return sum + comp; }
};

ErrorCounts decide(const MediaFrame& truth, const Eigen::VectorXd& a_hat, const CMat& x_hat,
                   const Constellation& c, int nrf) {
  AmpState s;
  s.nt = truth.nt;
  s.a_hat = a_hat;
  s.x_hat = x_hat;
  const std::vector<int> omega = detect_activity(minmax_normalize(a_hat));
  const Reconstruction rec = extract_and_reconstruct(s, omega);
  return count_detection_errors(truth, omega, rec.map_indices, rec.x_hat, c, nrf);
}

}  // namespace

double SeConfig::noise_variance() const { return sigma2 >= 0.0 ? sigma2 : snr_to_noise_variance(sys); }

void SeConfig::validate() const {
  sys.validate();
  if (n_mc < 1) throw ConfigError("n_mc must be at least 1");
  if (t_se < 1) throw ConfigError("t_se must be at least 1");
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  if (!(gamma > 0.0)) throw ConfigError("gamma must be positive");
}

std::pair<cd, double> se_scalar_channel(cd x0, double e, double v, const SeConfig& cfg, Rng& rng) {
  const double sigma2 = cfg.noise_variance();
  const double scale = static_cast<double>(cfg.sys.nr) * cfg.gamma;
  const double cols = static_cast<double>(cfg.sys.columns());
  const double noise = (sigma2 + cfg.gamma * cols * std::max(e, 0.0)) / scale;
  const double phi = (sigma2 + cfg.gamma * cols * std::max(v, 0.0)) / scale;
  const cd r = noise > 0.0 ? x0 + rng.complex_normal(noise) : x0;
  return {r, phi};
}

MediaFrame se_realization(const SeConfig& cfg, const Constellation& c, int m) {
  Rng rng = Rng::substream(cfg.sys.seed, {stream::se_signal, static_cast<std::uint64_t>(m)});
  const ActivityVector act = draw_activity(cfg.sys, rng);
  return build_frame(cfg.sys, act, c, rng);
}

ErrorCounts se_error_rates(const std::vector<MediaFrame>& realizations,
                           const std::vector<Eigen::VectorXd>& activity_indicators,
                           const std::vector<CMat>& posterior_means, const Constellation& c, int nrf) {
  if (realizations.size() != activity_indicators.size() || realizations.size() != posterior_means.size())
    throw UsageError("one posterior per realization required");
  ErrorCounts total;
  for (std::size_t m = 0; m < realizations.size(); ++m)
    total += decide(realizations[m], activity_indicators[m], posterior_means[m], c, nrf);
  return total;
}

SeTrace se_iterate(const SeConfig& cfg) {
  cfg.validate();
  const SystemConfig& sys = cfg.sys;
  const Constellation c = make_constellation(sys.m);
  const int nt = sys.nt();
  const int rows = sys.columns();
  const int j = sys.j;
  const int alphabet = c.order() + 1;
  const double elements = static_cast<double>(cfg.n_mc) * rows * j;

  std::vector<Eigen::VectorXd> a(cfg.n_mc, Eigen::VectorXd::Constant(sys.k, 0.5));
  std::vector<double> log_pmf(static_cast<std::size_t>(rows) * j * alphabet);
  CMat x_hat(rows, j);

  SeTrace trace;
  double e = 1.0;
  double v = 1.0;
  for (int t = 1; t <= cfg.t_se; ++t) {
    CompensatedSum sum_e, sum_v;
    ErrorCounts counts;
    for (int m = 0; m < cfg.n_mc; ++m) {
      const MediaFrame truth = se_realization(cfg, c, m);
      Rng noise = Rng::substream(sys.seed, {stream::se_noise, static_cast<std::uint64_t>(m),
                                            static_cast<std::uint64_t>(t)});
      Eigen::VectorXd& am = a[m];
      for (int jj = 0; jj < j; ++jj) {
        for (int l = 0; l < rows; ++l) {
          const cd x0 = truth.x(l, jj);
          const auto [r, phi] = se_scalar_channel(x0, e, v, cfg, noise);
          cd mean;
          double var;
          const std::size_t off = (static_cast<std::size_t>(jj) * rows + l) * alphabet;
          element_posterior(r, std::max(phi, kVarianceFloor), am(l / nt) / nt, c,
                            std::span<double>(log_pmf).subspan(off, alphabet), mean, var);
          x_hat(l, jj) = mean;
          sum_e.add(std::norm(mean - x0));
          sum_v.add(var);
        }
      }
      for (int k = 0; k < sys.k; ++k) {
        double acc = 0.0;
        for (int jj = 0; jj < j; ++jj) {
          const std::size_t off = (static_cast<std::size_t>(jj) * rows + static_cast<std::size_t>(k) * nt) * alphabet;
          acc += one_hot_mass(std::span<const double>(log_pmf).subspan(off, static_cast<std::size_t>(nt) * alphabet),
                              nt, alphabet);
        }
        am(k) = std::clamp(acc / j, kActivityClamp, 1.0 - kActivityClamp);
      }
      counts += decide(truth, am, x_hat, c, sys.nrf);
    }
    const double e_next = sum_e.value() / elements;
    const double v_next = sum_v.value() / elements;
    trace.e.push_back(e_next);
    trace.v.push_back(v_next);
    trace.counts = counts;
    const bool done = std::abs(e_next - e) < cfg.epsilon;
    e = e_next;
    v = v_next;
    if (done) break;
  }
  trace.predicted_ader = trace.counts.ader();
  trace.predicted_ser = trace.counts.ser();
  trace.predicted_ber = trace.counts.ber();
  return trace;
}

}  // namespace mmd
