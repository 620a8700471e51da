#include "mmd/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mmd/error.hpp"

namespace mmd {

LmmseResult lmmse_detect(const CMat& y, const CMat& h_active, double sigma2, const Constellation& c) {
  if (h_active.rows() != y.rows()) throw UsageError("LMMSE: channel and received matrix disagree on Nr");
  if (sigma2 < 0.0) throw UsageError("LMMSE: negative noise variance");
  const Eigen::Index ka = h_active.cols();
  CMat gram = h_active.adjoint() * h_active;
  gram.diagonal().array() += sigma2;
  Eigen::LDLT<CMat> ldlt(gram);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
      ldlt.vectorD().real().minCoeff() <= 1e-14 * std::max(1.0, ldlt.vectorD().real().maxCoeff()))
    throw NumericError("LMMSE system is singular; add noise regularization or use a tall channel");
  LmmseResult out;
  out.x_hat = ldlt.solve(h_active.adjoint() * y);
  out.decisions.resize(static_cast<std::size_t>(ka) * y.cols());
  for (Eigen::Index u = 0; u < ka; ++u)
    for (Eigen::Index jj = 0; jj < y.cols(); ++jj)
      out.decisions[static_cast<std::size_t>(u) * y.cols() + jj] = c.nearest(out.x_hat(u, jj));
  return out;
}

DetectionResult conventional_amp(const CMat& y, const CMat& h, const Constellation& c, int nt, int t0,
                                 double p_nonzero, double sigma2) {
  AmpLoopOptions o;
  o.t0 = t0;
  o.learn_noise = false;
  o.learn_activity = false;
  o.fixed_sigma2 = sigma2;
  o.fixed_p_nonzero = std::clamp(p_nonzero, 0.0, 1.0);
  DetectionResult res;
  AmpState s = run_amp_loop(y, h, c, nt, o, &res.trace, &res.complex_mults);

  const int devices = s.devices();
  const int j = s.slots();
  res.a_hat.resize(devices);
  for (int k = 0; k < devices; ++k) {
    double acc = 0.0;
    for (int jj = 0; jj < j; ++jj) {
      const auto block = s.block_log_pmf(k, jj);
      double log_all_zero = 0.0;
      for (int i = 0; i < nt; ++i) log_all_zero += block[static_cast<std::size_t>(i) * s.alphabet];
      acc += -std::expm1(log_all_zero);
    }
    res.a_hat(k) = acc / j;
  }
  res.a_tilde = res.a_hat;
  res.omega = detect_activity(res.a_tilde);
  Reconstruction rec = extract_and_reconstruct(s, res.omega);
  res.x_hat = std::move(rec.x_hat);
  res.map_indices = std::move(rec.map_indices);
  res.sigma2_hat = s.sigma2;
  return res;
}

DetectionResult dsamp_no_minmax(const CMat& y, const CMat& h, const Constellation& c, const DsampParams& p) {
  DsampParams q = p;
  q.minmax = false;
  return run_dsamp(y, h, c, q);
}

Algorithm parse_algorithm(std::string_view name) {
  if (name == "dsamp") return Algorithm::Dsamp;
  if (name == "amp") return Algorithm::Amp;
  if (name == "dsamp-nominmax") return Algorithm::DsampNoMinmax;
  if (name == "lmmse") return Algorithm::Lmmse;
  throw UsageError("unknown algorithm '" + std::string(name) + "' (expected dsamp, amp, dsamp-nominmax, lmmse)");
}

std::string_view algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::Dsamp: return "dsamp";
    case Algorithm::Amp: return "amp";
    case Algorithm::DsampNoMinmax: return "dsamp-nominmax";
    case Algorithm::Lmmse: return "lmmse";
  }
  return "unknown";
}

double complexity_count(const SystemConfig& cfg, std::string_view algorithm) {
  const double t0 = cfg.t0, j = cfg.j, k = cfg.k, nt = cfg.nt(), nr = cfg.nr, m = cfg.m, ka = cfg.ka;
  if (algorithm == "dsamp" || algorithm == "amp" || algorithm == "dsamp-nominmax")
    return t0 * j * k * nt * (2.5 * nr + m + 0.25);
  if (algorithm == "lmmse") return j * nr * ka + 2.0 * nr * ka * ka + ka * ka * ka;
  throw UsageError("no complexity model for algorithm '" + std::string(algorithm) + "'");
}

}  // namespace mmd
