// Acceptance suite: one PASS/FAIL line per criterion.
//
//   mmd_acceptance [--criterion N]... [--out-dir DIR] [--frames N]
//
// Without --criterion every criterion runs. --frames lowers the Monte-Carlo
// frame counts for quick local runs; ctest uses the defaults.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mmd/baselines.hpp"
#include "mmd/coded_access.hpp"
#include "mmd/config.hpp"
#include "mmd/csi_update.hpp"
#include "mmd/experiment.hpp"
#include "mmd/state_evolution.hpp"
#include "oracles.hpp"

using namespace mmd;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Context {
  std::filesystem::path out_dir;
  int frames_override = 0;
  int frames(int standard) const { return frames_override > 0 ? frames_override : standard; }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

/// Scenario of the uncoded curves: K=500, Ka=50, Nr=256, Nt=4, 4-QAM, J=12.
ExperimentSpec uncoded_spec(std::vector<double> snrs, std::vector<std::string> algos, int frames) {
  ExperimentSpec s;
  s.sys = SystemConfig{};
  s.sys.seed = 20240601;
  s.axis = "snr_db";
  s.values = std::move(snrs);
  s.algorithms = std::move(algos);
  s.frames = frames;
  s.paired = true;
  return s;
}

void save_csv(const Context& ctx, const std::string& name, const ExperimentSpec& spec,
              const std::vector<MetricRow>& rows) {
  std::filesystem::create_directories(ctx.out_dir);
  std::ofstream f(ctx.out_dir / name);
  write_sweep_csv(f, spec, rows);
}

const MetricRow& row_of(const std::vector<MetricRow>& rows, const std::string& algo, double v, const ExperimentSpec& s) {
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::size_t vi = i / s.algorithms.size();
    if (rows[i].algorithm == algo && s.values[vi] == v) return rows[i];
  }
  throw std::runtime_error("missing row");
}

// 1 -----------------------------------------------------------------------
Outcome denoiser_oracle(const Context&) {
  Rng rng(101);
  double worst = 0.0;
  for (int t = 0; t < 10000; ++t) {
    const Constellation c = make_constellation(t % 2 ? 16 : 4);
    const int nt = t % 3 ? 4 : 2;
    const double phi = 0.01 + 3.0 * rng.uniform();
    const double a = rng.uniform();
    const cd r = c.points[rng.next() % c.order()] * (0.5 + rng.uniform()) + rng.complex_normal(phi);
    const DenoiserOutput got = denoise_element(r, phi, a, c, nt);
    const oracle::Posterior ref = oracle::element_posterior(r, phi, a, c, nt);
    worst = std::max({worst, std::abs(got.mean - ref.mean), std::abs(got.variance - ref.variance)});
  }
  return {worst < 1e-10, "max abs error " + fmt("%.3e", worst) + " over 10^4 draws"};
}

// 2 -----------------------------------------------------------------------
Outcome em_activity_oracle(const Context&) {
  Rng rng(202);
  double worst = 0.0;
  for (int t = 0; t < 10000; ++t) {
    const int m = t % 2 ? 16 : 4;
    const int nt = 4;
    std::vector<std::vector<double>> q(nt, std::vector<double>(m + 1));
    std::vector<double> block;
    for (auto& row : q) {
      double z = 0.0;
      // Skewed draws so that masses span several orders of magnitude.
      for (double& w : row) z += (w = std::pow(rng.uniform(), 4.0) + 1e-9);
      for (double& w : row) block.push_back(std::log(w /= z));
    }
    worst = std::max(worst, std::abs(one_hot_mass(block, nt, m + 1) - oracle::gamma0_mass(q, m)));
  }
  return {worst < 1e-12, "max abs error " + fmt("%.3e", worst) + " over 10^4 draws"};
}

// 3 -----------------------------------------------------------------------
Outcome em_stationarity(const Context&) {
  SystemConfig sys;
  sys.k = 4;
  sys.ka = 2;
  sys.nr = 16;
  sys.j = 6;
  sys.snr_db = 8.0;
  const Constellation c = make_constellation(sys.m);
  Rng rng(303);
  const MediaFrame f = build_frame(sys, draw_activity(sys, rng), c, rng);
  const ChannelMatrix h = draw_rayleigh_channel(sys, rng);
  const CMat y = transmit(h.h, f.x, snr_to_noise_variance(sys), rng);

  AmpState s = init_state(y, sys.k, sys.nt(), c);
  double worst_noise = 0.0, worst_act = 0.0;
  for (int t = 1; t <= 4; ++t) {
    decouple_step(s, y, h.h);
    std::vector<double> p(sys.k);
    for (int k = 0; k < sys.k; ++k) p[k] = s.a_hat(k) / sys.nt();
    denoise_step(s, c, p);

    const double old = s.sigma2;
    const double s2 = em_update_noise(s, y);
    const double dh = 1e-5 * s2;
    const double dq = (oracle::q_noise(s2 + dh, y, s.z, s.v, old) - oracle::q_noise(s2 - dh, y, s.z, s.v, old)) /
                      (2.0 * dh) / static_cast<double>(y.size());
    worst_noise = std::max(worst_noise, std::abs(dq));

    for (int k = 0; k < sys.k; ++k) {
      std::vector<double> gamma;
      for (int j = 0; j < sys.j; ++j) {
        const auto blk = s.block_log_pmf(k, j);
        std::vector<std::vector<double>> q(sys.nt(), std::vector<double>(s.alphabet));
        for (int i = 0; i < sys.nt(); ++i)
          for (int a = 0; a < s.alphabet; ++a) q[i][a] = std::exp(blk[i * s.alphabet + a]);
        gamma.push_back(oracle::gamma0_mass(q, c.order()));
      }
      const double a = em_update_activity(s, k);
      if (a <= kActivityClamp || a >= 1.0 - kActivityClamp) continue;  // boundary maximum
      const double da = 1e-6 * std::min(a, 1.0 - a);
      const double d = (oracle::q_activity(a + da, gamma) - oracle::q_activity(a - da, gamma)) / (2.0 * da) / sys.j;
      worst_act = std::max(worst_act, std::abs(d));
      s.a_hat(k) = a;
    }
    s.sigma2 = s2;
  }
  return {worst_noise < 1e-6 && worst_act < 1e-6,
          "max |dQ/dsigma2| " + fmt("%.2e", worst_noise) + ", max |dQ/da_k| " + fmt("%.2e", worst_act)};
}

// 4 -----------------------------------------------------------------------
Outcome complexity_table(const Context&) {
  SystemConfig sys;
  auto at = [&](int nr, const char* algo) {
    sys.nr = nr;
    return complexity_count(sys, algo);
  };
  // Compare at the printed precision: three significant digits, 0.84e6 has two.
  auto printed = [](double v, double unit, int decimals) { return std::round(v / unit * std::pow(10, decimals)); };
  const double d256 = at(256, "dsamp"), d128 = at(128, "dsamp"), l256 = at(256, "lmmse"), l128 = at(128, "lmmse");
  const bool ok = printed(d256, 1e8, 2) == 232 && printed(d128, 1e8, 2) == 117 && printed(l256, 1e6, 2) == 156 &&
                  printed(l128, 1e6, 2) == 84;
  std::ostringstream s;
  s << "dsamp " << d256 << " / " << d128 << ", lmmse " << l256 << " / " << l128;
  return {ok, s.str()};
}

// 5 -----------------------------------------------------------------------
Outcome dsamp_vs_amp(const Context& ctx) {
  const ExperimentSpec spec = uncoded_spec({3, 5}, {"dsamp", "amp"}, ctx.frames(200));
  const auto rows = run_sweep(spec);
  save_csv(ctx, "criterion5_dsamp_vs_amp.csv", spec, rows);
  bool ok = true;
  std::ostringstream s;
  for (double snr : spec.values) {
    const ErrorCounts& d = row_of(rows, "dsamp", snr, spec).counts;
    const ErrorCounts& a = row_of(rows, "amp", snr, spec).counts;
    // Both detectors can make zero activity errors over the whole run. An
    // exact tie at zero cannot be ordered and falls back to <=.
    const bool zero_tie = d.ader() == 0.0 && a.ader() == 0.0;
    ok = ok && (d.ader() < a.ader() || zero_tie) && d.ser() < a.ser() && d.ber() < a.ber();
    s << snr << "dB ADER " << d.ader() << (zero_tie ? "=" : "<") << a.ader() << (zero_tie ? " (tie at 0)" : "") << " SER " << d.ser() << "<" << a.ser() << " BER " << d.ber()
      << "<" << a.ber() << "; ";
  }
  return {ok, s.str()};
}

// 6 -----------------------------------------------------------------------
Outcome minmax_benefit(const Context& ctx) {
  const ExperimentSpec spec = uncoded_spec({0, 1, 2}, {"dsamp", "dsamp-nominmax"}, ctx.frames(200));
  const auto rows = run_sweep(spec);
  save_csv(ctx, "criterion6_minmax.csv", spec, rows);
  bool all_le = true, some_lt = false;
  std::ostringstream s;
  for (double snr : spec.values) {
    const double d = row_of(rows, "dsamp", snr, spec).counts.ader();
    const double n = row_of(rows, "dsamp-nominmax", snr, spec).counts.ader();
    all_le = all_le && d <= n;
    some_lt = some_lt || d < n;
    s << snr << "dB " << d << " vs " << n << "; ";
  }
  return {all_le && some_lt, s.str()};
}

// 7 -----------------------------------------------------------------------
Outcome convergence(const Context& ctx) {
  ExperimentSpec a = uncoded_spec({2, 6}, {"dsamp"}, ctx.frames(200));
  ExperimentSpec b = a;
  a.sys.t0 = 15;
  b.sys.t0 = 25;
  const auto ra = run_sweep(a);
  const auto rb = run_sweep(b);
  std::vector<MetricRow> all = ra;
  for (MetricRow r : rb) {
    r.algorithm = "dsamp-t25";
    all.push_back(r);
  }
  for (MetricRow& r : all)
    if (r.algorithm == "dsamp") r.algorithm = "dsamp-t15";
  ExperimentSpec both = a;
  both.algorithms = {"dsamp-t15", "dsamp-t25"};
  save_csv(ctx, "criterion7_convergence.csv", both, all);

  auto rel = [](double x, double y) {
    if (x == y) return 0.0;
    return std::abs(x - y) / std::max(std::abs(x), std::abs(y));
  };
  bool ok = true;
  std::ostringstream s;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    const ErrorCounts& x = ra[i].counts;
    const ErrorCounts& y = rb[i].counts;
    const double ra_ = rel(x.ader(), y.ader()), rb_ = rel(x.ber(), y.ber());
    ok = ok && ra_ < 0.1 && rb_ < 0.1;
    s << a.values[i] << "dB ADER " << x.ader() << "/" << y.ader() << " (rel " << fmt("%.3f", ra_) << ") BER "
      << x.ber() << "/" << y.ber() << " (rel " << fmt("%.3f", rb_) << "); ";
  }
  return {ok, s.str()};
}

// 8 -----------------------------------------------------------------------
Outcome se_tightness(const Context& ctx) {
  const std::vector<double> snrs{2, 4, 6};
  const ExperimentSpec spec = uncoded_spec(snrs, {"dsamp"}, ctx.frames(200));
  const auto rows = run_sweep(spec);
  std::filesystem::create_directories(ctx.out_dir);
  std::ofstream se_csv(ctx.out_dir / "criterion8_se.csv");
  bool ok = true;
  std::ostringstream s;
  for (std::size_t i = 0; i < snrs.size(); ++i) {
    SeConfig cfg;
    cfg.sys = spec.sys;
    cfg.sys.snr_db = snrs[i];
    cfg.n_mc = 500;
    const SeTrace tr = se_iterate(cfg);
    write_se_csv(se_csv, cfg, tr);
    const double sim = rows[i].counts.ber();
    const double pred = tr.predicted_ber;
    // Zero counts are replaced by half an error over the tallied bits.
    const double sim_f = sim > 0 ? sim : 0.5 / static_cast<double>(rows[i].counts.bits);
    const double pred_f = pred > 0 ? pred : 0.5 / static_cast<double>(tr.counts.bits);
    const double gap = std::abs(std::log10(pred_f) - std::log10(sim_f));
    ok = ok && gap <= 0.5;
    s << snrs[i] << "dB SE " << pred << " sim " << sim << " gap " << fmt("%.3f", gap) << "; ";
  }
  return {ok, s.str()};
}

// 9 -----------------------------------------------------------------------
Outcome j_trend(const Context& ctx) {
  ExperimentSpec spec = uncoded_spec({5}, {"dsamp"}, ctx.frames(200));
  spec.axis = "j";
  spec.sys.snr_db = 5;
  spec.values = {2, 12};
  const auto rows = run_sweep(spec);
  save_csv(ctx, "criterion9_j_trend.csv", spec, rows);
  const double a2 = rows[0].counts.ader(), a12 = rows[1].counts.ader();

  // Conventional AMP treats slots independently: running it on a J=12 frame
  // or on the same slots split into J=2 frames gives identical per-slot state.
  SystemConfig sys = spec.sys;
  sys.j = 12;
  const Constellation c = make_constellation(sys.m);
  Rng rng(909);
  const MediaFrame f = build_frame(sys, draw_activity(sys, rng), c, rng);
  const ChannelMatrix h = draw_rayleigh_channel(sys, rng);
  const double s2 = snr_to_noise_variance(sys);
  const CMat y = transmit(h.h, f.x, s2, rng);
  AmpLoopOptions o;
  o.t0 = sys.t0;
  o.learn_noise = false;
  o.learn_activity = false;
  o.fixed_sigma2 = s2;
  o.fixed_p_nonzero = sys.lambda() / sys.nt();
  o.keep_trace = false;
  const AmpState whole = run_amp_loop(y, h.h, c, sys.nt(), o);
  double diff = 0.0;
  for (int j0 = 0; j0 < 12; j0 += 2) {
    const AmpState part = run_amp_loop(y.middleCols(j0, 2), h.h, c, sys.nt(), o);
    diff = std::max({diff, (part.x_hat - whole.x_hat.middleCols(j0, 2)).cwiseAbs().maxCoeff(),
                     (part.v_hat - whole.v_hat.middleCols(j0, 2)).cwiseAbs().maxCoeff()});
  }
  const bool ok = a12 <= a2 && diff < 1e-10;
  return {ok, "ADER J=12 " + fmt("%.4g", a12) + " <= J=2 " + fmt("%.4g", a2) + "; AMP per-slot max diff " +
                  fmt("%.2e", diff)};
}

// 10 ----------------------------------------------------------------------
Outcome coded_round_trip(const Context&) {
  SystemConfig sys;
  sys.k = 20;
  sys.ka = 1;
  sys.nr = 32;
  const CodedSetup setup(sys, PacketLayout::make(20, 100));
  int ok_count = 0;
  for (int t = 0; t < 100; ++t) {
    Rng rng = Rng::substream(1010, {static_cast<std::uint64_t>(t)});
    const ActivityVector act = draw_activity(setup.sys, rng);
    const CodedFrame cf = build_coded_frame(setup, act, rng);
    const ChannelMatrix h = draw_rayleigh_channel(setup.sys, rng);
    const CMat y = h.h * cf.frame.x;  // noiseless
    DsampParams p;
    p.keep_trace = false;
    const DetectionResult det = run_dsamp(y, h.h, setup.c, p);
    const AmpState s = run_dsamp_core(y, h.h, setup.c, p);
    int dev = -1;
    for (int k = 0; k < setup.sys.k; ++k)
      if (act[k]) dev = k;
    if (det.omega != std::vector<int>{dev}) continue;
    const auto llrs = device_llrs(s, dev, setup.sys.nrf, setup.c);
    const TurboDecodeResult r = decode_device(llrs, setup);
    ok_count += r.bits == cf.packets[dev];
  }
  return {ok_count == 100, std::to_string(ok_count) + "/100 packets recovered"};
}

// 11 ----------------------------------------------------------------------
Outcome sic_benefit(const Context& ctx) {
  ExperimentSpec spec = uncoded_spec({0, 1}, {"idsamp", "coded-nosic", "idsamp-nojudge", "uncoded-hard"},
                                     ctx.frames(50));
  spec.coded_enabled = true;
  const auto rows = run_sweep(spec);
  save_csv(ctx, "criterion11_sic.csv", spec, rows);
  bool ok = true;
  std::ostringstream s;
  for (double snr : spec.values) {
    const double b1 = row_of(rows, "idsamp", snr, spec).counts.ber();
    const double b6 = row_of(rows, "coded-nosic", snr, spec).counts.ber();
    const double b7 = row_of(rows, "idsamp-nojudge", snr, spec).counts.ber();
    const double b4 = row_of(rows, "uncoded-hard", snr, spec).counts.ber();
    ok = ok && b1 <= b6 && b1 <= b7;
    if (snr == 0) ok = ok && b4 > b1 && b4 > b6 && b4 > b7;
    s << snr << "dB idsamp " << b1 << " nosic " << b6 << " nojudge " << b7 << " uncoded " << b4 << "; ";
  }
  return {ok, s.str()};
}

// 12 ----------------------------------------------------------------------
Outcome csi_tracking(const Context& ctx) {
  TrackingConfig cfg;
  cfg.sys.seed = 1212;
  cfg.alpha = 0.99;
  cfg.frames = 50;
  // Non-update NMSE_H does not depend on detection.
  cfg.track_signal_nmse = false;
  const int seeds = 10;
  std::vector<TrackingResult> runs;
  for (int i = 0; i < seeds; ++i)
    runs.push_back(run_multiframe_tracking(cfg, derive_key(cfg.sys.seed, {static_cast<std::uint64_t>(i)})));
  std::filesystem::create_directories(ctx.out_dir);
  std::ofstream f(ctx.out_dir / "criterion12_tracking.csv");
  write_tracking_csv(f, cfg, runs);

  std::vector<double> up(cfg.frames, 0.0), non(cfg.frames, 0.0);
  for (const auto& r : runs)
    for (int t = 0; t < cfg.frames; ++t) {
      up[t] += r.update[t].nmse_h / seeds;
      non[t] += r.non_update[t].nmse_h / seeds;
    }
  bool monotone = true;
  for (int t = 1; t < cfg.frames; ++t) monotone = monotone && non[t] >= non[t - 1];
  const bool ok = up.back() < non.back() && monotone;
  return {ok, "frame 50 NMSE_H update " + fmt("%.4g", up.back()) + " vs non-update " + fmt("%.4g", non.back()) +
                  (monotone ? ", non-update non-decreasing" : ", non-update NOT monotone")};
}

// 13 ----------------------------------------------------------------------
Outcome refinement_oracle(const Context&) {
  Rng rng(1313);
  auto rnd = [&](Eigen::Index r, Eigen::Index c) {
    CMat m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = rng.complex_normal();
    return m;
  };
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const int na = 1 + static_cast<int>(rng.next() % 3);
    const int nt = 2 << (rng.next() % 2);
    const int n = na * nt;
    const int j = std::max(1, n + static_cast<int>(rng.next() % 9) - 4);
    const CMat y = rnd(8, j), x = rnd(n, j);
    const CMat a = rnd(n, n);
    const CMat r = a * a.adjoint() + 0.5 * CMat::Identity(n, n);
    const double s2 = 0.05 + rng.uniform();
    const CMat got = refine_csi_mmse(y, x, r, s2, na, nt);
    // Regularized least squares: argmin ||Y - H X||^2 + Na Nt sigma2 tr(H R^{-1} H^H).
    const CMat g = x * x.adjoint() + n * s2 * r.inverse();
    const CMat ref = y * x.adjoint() * g.fullPivLu().inverse();
    worst = std::max(worst, (got - ref).norm() / ref.norm());
  }
  const int na = 4, nt = 4, j = 40;
  const CMat h = rnd(16, na * nt), x = rnd(na * nt, j);
  const CMat est = refine_csi_mmse(h * x, x, 16.0 * CMat::Identity(na * nt, na * nt), 1e-10, na, nt);
  const double ridge = (est - h).norm() / h.norm();
  return {worst < 1e-10 && ridge < 1e-6,
          "max rel error " + fmt("%.3e", worst) + " over 10^3 instances; ridge-limit error " + fmt("%.3e", ridge)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::vector<int> selected;
  Context ctx;
  std::string out_dir = "acceptance_out";
  app.add_option("--criterion", selected, "criterion number (repeatable); all when omitted")->check(CLI::Range(1, 13));
  app.add_option("--out-dir", out_dir, "directory for the CSV artifacts");
  app.add_option("--frames", ctx.frames_override, "override Monte-Carlo frame counts (quick runs)");
  CLI11_PARSE(app, argc, argv);
  ctx.out_dir = out_dir;

  const std::map<int, std::pair<std::string, std::function<Outcome(const Context&)>>> criteria = {
      {1, {"denoiser oracle equivalence", denoiser_oracle}},
      {2, {"EM activity oracle equivalence", em_activity_oracle}},
      {3, {"EM stationarity", em_stationarity}},
      {4, {"complexity table", complexity_table}},
      {5, {"DS-AMP below AMP", dsamp_vs_amp}},
      {6, {"min-max benefit", minmax_benefit}},
      {7, {"convergence T0=15 vs 25", convergence}},
      {8, {"state-evolution tightness", se_tightness}},
      {9, {"J trend", j_trend}},
      {10, {"coded round trip", coded_round_trip}},
      {11, {"SIC benefit", sic_benefit}},
      {12, {"CSI tracking", csi_tracking}},
      {13, {"MMSE refinement oracle", refinement_oracle}},
  };
  if (selected.empty())
    for (const auto& [n, _] : criteria) selected.push_back(n);

  int failures = 0;
  for (int n : selected) {
    const auto& [name, fn] = criteria.at(n);
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn(ctx);
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %2d %-32s %s  %s [%.1fs]\n", n, name.c_str(), o.pass ? "PASS" : "FAIL", o.detail.c_str(),
                secs);
    std::fflush(stdout);
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
