#include "mmd/dsamp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mmd/error.hpp"

namespace mmd {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_sum_exp(std::span<const double> v) {
  double mx = kNegInf;
  for (double x : v) mx = std::max(mx, x);
  if (mx == kNegInf) return kNegInf;
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - mx);
  return mx + std::log(acc);
}

bool all_finite(const CMat& m) { return m.allFinite(); }

}  // namespace

std::span<const double> AmpState::block_log_pmf(int k, int j) const {
  const std::size_t cols = static_cast<std::size_t>(x_hat.rows());
  const std::size_t offset = (static_cast<std::size_t>(j) * cols + static_cast<std::size_t>(k) * nt) * alphabet;
  return std::span<const double>(log_pmf).subspan(offset, static_cast<std::size_t>(nt) * alphabet);
}

void element_posterior(cd r, double phi, double p_nonzero, const Constellation& c,
                       std::span<double> log_pmf, cd& mean, double& variance) {
  const int m = c.order();
  const double log_p0 = p_nonzero >= 1.0 ? kNegInf : std::log1p(-p_nonzero);
  const double log_ps = p_nonzero <= 0.0 ? kNegInf : std::log(p_nonzero / m);
  const double inv_phi = 1.0 / phi;

  double mx = log_pmf[0] = log_p0 - std::norm(r) * inv_phi;
  for (int s = 0; s < m; ++s) {
    log_pmf[1 + s] = log_ps - std::norm(r - c.points[s]) * inv_phi;
    mx = std::max(mx, log_pmf[1 + s]);
  }
  double z = 0.0;
  for (int s = 0; s <= m; ++s) z += std::exp(log_pmf[s] - mx);
  const double log_z = mx + std::log(z);

  mean = cd{};
  double second = 0.0;
  log_pmf[0] -= log_z;
  for (int s = 0; s < m; ++s) {
    log_pmf[1 + s] -= log_z;
    const double w = std::exp(log_pmf[1 + s]);
    mean += w * c.points[s];
    second += w * std::norm(c.points[s]);
  }
  variance = std::max(second - std::norm(mean), 0.0);
}

DenoiserOutput denoise_element(cd r, double phi, double a_k, const Constellation& c, int nt) {
  if (!(phi > 0.0)) throw NumericError("denoiser requires a positive pseudo-channel variance");
  if (!(a_k >= 0.0 && a_k <= 1.0)) throw UsageError("activity indicator must lie in [0, 1]");
  DenoiserOutput out;
  std::vector<double> lp(c.order() + 1);
  element_posterior(r, phi, a_k / nt, c, lp, out.mean, out.variance);
  out.pmf.resize(lp.size());
  for (std::size_t i = 0; i < lp.size(); ++i) out.pmf[i] = std::exp(lp[i]);
  return out;
}

AmpState init_state(const CMat& y, int devices, int nt, const Constellation& c, double initial_activity) {
  AmpState s;
  const int cols = devices * nt;
  const int j = static_cast<int>(y.cols());
  s.nt = nt;
  s.alphabet = c.order() + 1;
  s.z = y;
  s.v = RMat::Ones(y.rows(), j);
  s.r = CMat::Zero(cols, j);
  s.phi = RMat::Ones(cols, j);
  s.a_hat = Eigen::VectorXd::Constant(devices, initial_activity);
  s.sigma2 = kInitialNoiseVariance;

  const double p = initial_activity / nt;
  const cd mean = p * c.sum() / static_cast<double>(c.order());
  const double second = p * c.mean_energy();
  s.x_hat = CMat::Constant(cols, j, mean);
  s.v_hat = RMat::Constant(cols, j, second - std::norm(mean));
  s.log_pmf.assign(static_cast<std::size_t>(cols) * j * s.alphabet, 0.0);
  return s;
}

void decouple_step(AmpState& s, const CMat& y, const CMat& h, const RMat& h_abs2) {
  const double sigma2 = std::max(s.sigma2, kVarianceFloor);

  // Factor nodes.
  RMat v_new = h_abs2 * s.v_hat;
  CMat onsager = (y - s.z).cwiseQuotient((s.v.array() + sigma2).matrix().cast<cd>());
  CMat z_new = h * s.x_hat;
  z_new.array() -= v_new.array().cast<cd>() * onsager.array();

  // Variable nodes.
  RMat inv_total = (v_new.array() + sigma2).inverse().matrix();
  RMat precision = h_abs2.transpose() * inv_total;
  s.phi = precision.array().max(kVarianceFloor).inverse().max(kVarianceFloor).matrix();
  CMat scaled = (y - z_new).array() * inv_total.array().cast<cd>();
  CMat back = h.adjoint() * scaled;
  s.r = s.x_hat.array() + s.phi.array().cast<cd>() * back.array();

  s.v = std::move(v_new);
  s.z = std::move(z_new);
}

void decouple_step(AmpState& s, const CMat& y, const CMat& h) {
  const RMat h_abs2 = h.cwiseAbs2();
  decouple_step(s, y, h, h_abs2);
}

void denoise_step(AmpState& s, const Constellation& c, std::span<const double> p_nonzero, double damping) {
  const int rows = static_cast<int>(s.r.rows());
  const int j = static_cast<int>(s.r.cols());
  const int a = s.alphabet;
  for (int jj = 0; jj < j; ++jj) {
    for (int l = 0; l < rows; ++l) {
      const int k = l / s.nt;
      const std::size_t off = (static_cast<std::size_t>(jj) * rows + l) * a;
      cd mean;
      double var;
      element_posterior(s.r(l, jj), s.phi(l, jj), p_nonzero[k], c,
                        std::span<double>(s.log_pmf).subspan(off, a), mean, var);
      if (damping == 1.0) {
        s.x_hat(l, jj) = mean;
        s.v_hat(l, jj) = var;
      } else {
        s.x_hat(l, jj) = damping * mean + (1.0 - damping) * s.x_hat(l, jj);
        s.v_hat(l, jj) = damping * var + (1.0 - damping) * s.v_hat(l, jj);
      }
    }
  }
}

double em_update_noise(const AmpState& s, const CMat& y) {
  const double sigma2 = std::max(s.sigma2, kVarianceFloor);
  const auto v = s.v.array();
  const auto resid = (y - s.z).array().abs2();
  const auto shrink = (1.0 + v / sigma2).square();
  const double total = (resid / shrink + sigma2 * v / (v + sigma2)).sum();
  const double next = total / static_cast<double>(y.size());
  return std::max(next, kVarianceFloor);
}

double one_hot_mass(std::span<const double> block, int nt, int alphabet) {
  // Candidate (i, s): element i carries point s, all other elements are zero.
  double mass = 0.0;
  for (int i = 0; i < nt; ++i) {
    double log_rest = 0.0;
    for (int g = 0; g < nt; ++g)
      if (g != i) log_rest += block[static_cast<std::size_t>(g) * alphabet];
    if (log_rest == kNegInf) continue;
    const double log_active = log_sum_exp(block.subspan(static_cast<std::size_t>(i) * alphabet + 1, alphabet - 1));
    mass += std::exp(log_rest + log_active);
  }
  return mass;
}

double em_update_activity(const AmpState& s, int k) {
  const int j = s.slots();
  double acc = 0.0;
  for (int jj = 0; jj < j; ++jj) acc += one_hot_mass(s.block_log_pmf(k, jj), s.nt, s.alphabet);
  return std::clamp(acc / j, kActivityClamp, 1.0 - kActivityClamp);
}

Eigen::VectorXd minmax_normalize(const Eigen::VectorXd& a_hat) {
  if (a_hat.size() == 0) return a_hat;
  const double lo = a_hat.minCoeff();
  const double hi = a_hat.maxCoeff();
  if (!(hi > lo)) return Eigen::VectorXd::Zero(a_hat.size());
  return (a_hat.array() - lo) / (hi - lo);
}

std::vector<int> detect_activity(const Eigen::VectorXd& a_tilde, double threshold) {
  std::vector<int> omega;
  for (Eigen::Index k = 0; k < a_tilde.size(); ++k)
    if (a_tilde(k) > threshold) omega.push_back(static_cast<int>(k));
  return omega;
}

Reconstruction extract_and_reconstruct(const AmpState& s, const std::vector<int>& omega) {
  const int devices = s.devices();
  const int j = s.slots();
  const int nt = s.nt;
  Reconstruction out;
  out.map_indices.assign(static_cast<std::size_t>(devices) * j, 0);
  out.x_hat = CMat::Zero(s.x_hat.rows(), j);
  for (int k = 0; k < devices; ++k) {
    for (int jj = 0; jj < j; ++jj) {
      int best = 0;
      double best_mag = std::abs(s.x_hat(k * nt, jj));
      for (int i = 1; i < nt; ++i) {
        const double mag = std::abs(s.x_hat(k * nt + i, jj));
        if (mag > best_mag) {
          best_mag = mag;
          best = i;
        }
      }
      out.map_indices[static_cast<std::size_t>(k) * j + jj] = best;
    }
  }
  for (int k : omega)
    for (int jj = 0; jj < j; ++jj) {
      const int row = k * nt + out.map_indices[static_cast<std::size_t>(k) * j + jj];
      out.x_hat(row, jj) = s.x_hat(row, jj);
    }
  return out;
}

AmpState run_amp_loop(const CMat& y, const CMat& h, const Constellation& c, int nt,
                      const AmpLoopOptions& opts, std::vector<IterationRecord>* trace, double* complex_mults) {
  if (h.rows() != y.rows()) throw UsageError("received matrix and channel disagree on antenna count");
  if (h.cols() % nt != 0) throw UsageError("channel column count is not a multiple of Nt");
  if (opts.t0 < 1) throw ConfigError("iteration count must be at least 1");
  const int devices = static_cast<int>(h.cols()) / nt;
  const int j = static_cast<int>(y.cols());

  const double a0 = opts.learn_activity ? 0.5 : std::clamp(opts.fixed_p_nonzero * nt, 0.0, 1.0);
  AmpState s = init_state(y, devices, nt, c, a0);
  if (!opts.learn_noise) s.sigma2 = std::max(opts.fixed_sigma2, kVarianceFloor);

  const RMat h_abs2 = h.cwiseAbs2();
  std::vector<double> p_nonzero(devices);
  const double elements = static_cast<double>(h.cols()) * j;

  for (int t = 1; t <= opts.t0; ++t) {
    s.iter = t;
    decouple_step(s, y, h, h_abs2);
    for (int k = 0; k < devices; ++k)
      p_nonzero[k] = opts.learn_activity ? s.a_hat(k) / nt : opts.fixed_p_nonzero;
    denoise_step(s, c, p_nonzero, opts.damping);
    if (complex_mults) *complex_mults += elements * (2.5 * static_cast<double>(h.rows()) + c.order() + 0.25);

    if (opts.learn_noise) s.sigma2 = em_update_noise(s, y);
    if (opts.learn_activity)
      for (int k = 0; k < devices; ++k) s.a_hat(k) = em_update_activity(s, k);

    if (!std::isfinite(s.sigma2) || !all_finite(s.x_hat) || !s.v_hat.allFinite())
      throw NumericError("non-finite detector state at iteration " + std::to_string(t));

    if (trace && opts.keep_trace) {
      IterationRecord rec;
      rec.iter = t;
      rec.sigma2_hat = s.sigma2;
      rec.mean_v_hat = s.v_hat.mean();
      rec.a_hat = s.a_hat;
      trace->push_back(std::move(rec));
    }
  }
  return s;
}

AmpState run_dsamp_core(const CMat& y, const CMat& h, const Constellation& c, const DsampParams& p,
                        std::vector<IterationRecord>* trace, double* complex_mults) {
  AmpLoopOptions o;
  o.t0 = p.t0;
  o.damping = p.damping;
  o.keep_trace = p.keep_trace;
  return run_amp_loop(y, h, c, p.nt, o, trace, complex_mults);
}

DetectionResult run_dsamp(const CMat& y, const CMat& h, const Constellation& c, const DsampParams& p) {
  DetectionResult res;
  AmpState s = run_dsamp_core(y, h, c, p, &res.trace, &res.complex_mults);
  res.a_hat = s.a_hat;
  res.a_tilde = p.minmax ? minmax_normalize(s.a_hat) : s.a_hat;
  res.omega = detect_activity(res.a_tilde);
  Reconstruction rec = extract_and_reconstruct(s, res.omega);
  res.x_hat = std::move(rec.x_hat);
  res.map_indices = std::move(rec.map_indices);
  res.sigma2_hat = s.sigma2;
  return res;
}

std::vector<Bits> hard_demod(const CMat& x_hat, const std::vector<int>& omega,
                             const std::vector<int>& map_indices, int nt, int nrf, const Constellation& c) {
  const int devices = static_cast<int>(x_hat.rows()) / nt;
  const int j = static_cast<int>(x_hat.cols());
  std::vector<Bits> out(devices);
  for (int k : omega) {
    Bits& bits = out[k];
    bits.reserve(static_cast<std::size_t>(j) * (nrf + c.bits));
    for (int jj = 0; jj < j; ++jj) {
      const int map = map_indices[static_cast<std::size_t>(k) * j + jj];
      for (int b = nrf - 1; b >= 0; --b) bits.push_back(static_cast<std::uint8_t>((map >> b) & 1));
      const int q = c.nearest(x_hat(k * nt + map, jj));
      for (int b = 0; b < c.bits; ++b) bits.push_back(static_cast<std::uint8_t>(c.label_bit(q, b)));
    }
  }
  return out;
}

}  // namespace mmd
