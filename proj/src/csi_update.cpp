#include "mmd/csi_update.hpp"

#include <algorithm>
#include <string>

#include "mmd/error.hpp"

namespace mmd {

CMat refine_csi_mmse(const CMat& y, const CMat& x_tilde, const CMat& r_h, double sigma2, int na, int nt) {
  const Eigen::Index n = static_cast<Eigen::Index>(na) * nt;
  if (x_tilde.rows() != n) throw UsageError("refinement signal must have Na*Nt rows");
  if (x_tilde.cols() != y.cols()) throw UsageError("refinement signal and received matrix disagree on J");
  if (r_h.rows() != n || r_h.cols() != n) throw UsageError("channel covariance must be (Na*Nt) square");
  if (sigma2 < 0.0) throw UsageError("noise variance must be non-negative");

  const double ridge = static_cast<double>(n) * sigma2;
  const auto singular = [](const Eigen::LDLT<CMat>& f) {
    const Eigen::VectorXd d = f.vectorD().real();
    return f.info() != Eigen::Success || d.size() == 0 || d.minCoeff() <= 1e-13 * std::max(1.0, d.cwiseAbs().maxCoeff());
  };

  if (n < x_tilde.cols()) {
    // Push-through form, (Na Nt) square: Y X^H (X X^H + ridge R^{-1})^{-1}.
    Eigen::LDLT<CMat> rf(r_h);
    if (!singular(rf)) {
      CMat gram = x_tilde * x_tilde.adjoint();
      gram += ridge * rf.solve(CMat::Identity(n, n));
      gram = (0.5 * (gram + gram.adjoint())).eval();
      Eigen::LDLT<CMat> ldlt(gram);
      if (singular(ldlt))
        throw NumericError("refinement matrix is singular; use a positive noise variance for regularization");
      return ldlt.solve(x_tilde * y.adjoint()).adjoint();
    }
  }

  const CMat xh_r = x_tilde.adjoint() * r_h;  // J x NaNt
  CMat gram = xh_r * x_tilde;                 // J x J
  gram.diagonal().array() += ridge;
  Eigen::LDLT<CMat> ldlt(gram);
  if (singular(ldlt))
    throw NumericError("refinement matrix is singular; use a positive noise variance for regularization");
  // Y G^{-1} = (G^{-1} Y^H)^H for Hermitian G.
  return ldlt.solve(y.adjoint()).adjoint() * xh_r;
}

CMat update_channel_matrix(const CMat& h_prev, const CMat& h_hat, const std::vector<int>& columns) {
  if (h_hat.cols() != static_cast<Eigen::Index>(columns.size()) || (h_hat.cols() > 0 && h_hat.rows() != h_prev.rows()))
    throw UsageError("refined block does not match the column list");
  CMat h = h_prev;
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] < 0 || columns[i] >= h.cols())
      throw UsageError("column index " + std::to_string(columns[i]) + " out of range");
    h.col(columns[i]) = h_hat.col(static_cast<Eigen::Index>(i));
  }
  return h;
}

std::vector<int> device_columns(const std::vector<int>& devices, int nt) {
  std::vector<int> cols;
  cols.reserve(devices.size() * nt);
  for (int d : devices)
    for (int i = 0; i < nt; ++i) cols.push_back(d * nt + i);
  return cols;
}

double nmse(const CMat& estimate, const CMat& truth) {
  if (estimate.rows() != truth.rows() || estimate.cols() != truth.cols()) throw UsageError("NMSE shape mismatch");
  const double t = truth.norm();
  if (!(t > 0.0)) throw NumericError("NMSE of a zero reference is undefined");
  return (estimate - truth).norm() / t;
}

std::string_view strategy_name(CsiStrategy s) { return s == CsiStrategy::Update ? "update" : "non-update"; }

TrackingConfig::TrackingConfig() { sys.snr_db = 30.0; }

void TrackingConfig::validate() const {
  sys.validate();
  if (frames < 1) throw ConfigError("tracking needs at least one frame");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("AR coefficient must lie in (0, 1]");
}

TrackingResult run_multiframe_tracking(const TrackingConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const CodedSetup setup(cfg.sys, PacketLayout::make(cfg.ls, cfg.ld), cfg.turbo_iterations, cfg.turbo_scale);
  const SystemConfig& sys = setup.sys;
  const int nt = sys.nt();
  const double sigma2 = snr_to_noise_variance(sys);
  const CodedFlags flags{true, false, false};
  DsampParams params;
  params.nt = nt;
  params.t0 = sys.t0;
  params.keep_trace = false;

  auto key = [&](std::uint64_t purpose, int frame) {
    return Rng::substream(seed, {purpose, static_cast<std::uint64_t>(frame)});
  };

  TrackingResult out;
  out.seed = seed;
  CsiTrackState states[2];
  states[0].strategy = CsiStrategy::Update;
  states[1].strategy = CsiStrategy::NonUpdate;

  ChannelMatrix h_true;
  for (int t = 1; t <= cfg.frames; ++t) {
    if (t == 1) {
      Rng rc = key(stream::channel, 0);
      h_true = draw_rayleigh_channel(sys, rc);
      for (auto& st : states) st.h_used = h_true.h;
    } else {
      Rng ra = key(stream::aging, t);
      h_true = evolve_channel_ar(h_true, cfg.alpha, ra);
    }
    Rng ract = key(stream::activity, t);
    Rng rpay = key(stream::payload, t);
    Rng rnoise = key(stream::noise, t);
    const ActivityVector act = draw_activity(sys, ract);
    const CodedFrame cf = build_coded_frame(setup, act, rpay, true);
    const CMat y = transmit(h_true.h, cf.frame.x, sigma2, rnoise);

    for (auto& st : states) {
      st.frame_idx = t;
      FrameRecord rec;
      rec.frame = t;
      rec.strategy = st.strategy;
      rec.nmse_h = nmse(st.h_used, h_true.h);
      const bool detect = st.strategy == CsiStrategy::Update || cfg.track_signal_nmse;
      if (detect) {
        const IdsampResult det = run_idsamp(y, st.h_used, setup, flags, params);
        rec.detected = static_cast<int>(det.omega0.size());
        rec.nmse_x = cf.frame.x.norm() > 0.0 ? nmse(det.first_pass.x_hat, cf.frame.x) : 0.0;

        if (st.strategy == CsiStrategy::Update) {
          std::vector<int> good;
          for (int d : det.omega0) {
            const Bits& p = det.packets[d];
            if (static_cast<int>(p.size()) == setup.layout.l() &&
                hamming_distance(setup.layout.signature, std::span<const std::uint8_t>(p).first(setup.layout.ls)) == 0)
              good.push_back(d);
          }
          rec.refined = static_cast<int>(good.size());
          if (!good.empty()) {
            const int na = static_cast<int>(good.size());
            CMat x_tilde = CMat::Zero(static_cast<Eigen::Index>(na) * nt, sys.j);
            for (int u = 0; u < na; ++u) {
              const auto syms = bicmm_encode(det.packets[good[u]], setup, true);
              for (int jj = 0; jj < sys.j; ++jj) x_tilde(u * nt + syms[jj].map_index, jj) = syms[jj].qam_point;
            }
            if (st.r_h.rows() != static_cast<Eigen::Index>(na) * nt)
              st.r_h = CMat::Identity(static_cast<Eigen::Index>(na) * nt, static_cast<Eigen::Index>(na) * nt) *
                       static_cast<double>(sys.nr);
            const double s2 = std::max(det.first_pass.sigma2_hat, kVarianceFloor);
            const CMat h_hat = refine_csi_mmse(y, x_tilde, st.r_h, s2, na, nt);
            st.h_used = update_channel_matrix(st.h_used, h_hat, device_columns(good, nt));
          }
        }
      }
      st.nmse_h.push_back(rec.nmse_h);
      st.nmse_x.push_back(rec.nmse_x);
      (st.strategy == CsiStrategy::Update ? out.update : out.non_update).push_back(rec);
    }
  }
  return out;
}

}  // namespace mmd
