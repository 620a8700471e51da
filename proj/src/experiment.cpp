#include "mmd/experiment.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <ostream>

#include "mmd/baselines.hpp"
#include "mmd/error.hpp"

namespace mmd {

namespace {

constexpr const char* kSnrNote = "noise_variance = ka / 10^(snr_db/10) with unit-variance channel entries";

ErrorCounts lmmse_frame(const SystemConfig& sys, std::uint64_t seed) {
  // Ka scheduled single-antenna users with 16-QAM, fresh Rayleigh channel.
  const Constellation c16 = make_constellation(16);
  Rng rpay = Rng::substream(seed, {stream::payload});
  Rng rch = Rng::substream(seed, {stream::channel});
  Rng rnoise = Rng::substream(seed, {stream::noise});
  const int ka = sys.ka;
  std::vector<int> truth(static_cast<std::size_t>(ka) * sys.j);
  CMat x(ka, sys.j);
  for (int u = 0; u < ka; ++u)
    for (int jj = 0; jj < sys.j; ++jj) {
      const int idx = static_cast<int>(rpay.next() % 16);
      truth[static_cast<std::size_t>(u) * sys.j + jj] = idx;
      x(u, jj) = c16.points[idx];
    }
  CMat h(sys.nr, ka);
  for (Eigen::Index i = 0; i < h.size(); ++i) h.data()[i] = rch.complex_normal(1.0);
  const double sigma2 = snr_to_noise_variance(sys);
  const CMat y = transmit(h, x, sigma2, rnoise);
  const LmmseResult r = lmmse_detect(y, h, sigma2, c16);

  ErrorCounts e;
  e.frames = 1;
  e.devices = sys.k;
  e.active = ka;
  e.symbols = static_cast<long long>(ka) * sys.j;
  e.bits = e.symbols * c16.bits;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int d = __builtin_popcount(c16.labels[r.decisions[i]] ^ c16.labels[truth[i]]);
    e.bit_errors += d;
    e.symbol_errors += d > 0;
  }
  return e;
}

DsampParams params_for(const SystemConfig& sys, double damping) {
  DsampParams p;
  p.nt = sys.nt();
  p.t0 = sys.t0;
  p.damping = damping;
  p.keep_trace = false;
  return p;
}

}  // namespace

const std::vector<std::string>& known_algorithms() {
  static const std::vector<std::string> names = {"dsamp",  "amp",           "dsamp-nominmax", "lmmse",
                                                 "idsamp", "idsamp-nojudge", "coded-nosic",   "coded-nointerleave",
                                                 "uncoded-hard", "coded"};
  return names;
}

bool is_coded_algorithm(const std::string& name) {
  return name == "idsamp" || name == "idsamp-nojudge" || name == "coded-nosic" || name == "coded-nointerleave" ||
         name == "uncoded-hard" || name == "coded";
}

CodedFlags coded_flags_for(const std::string& name, const CodedFlags& custom) {
  if (name == "idsamp") return {true, true, true};
  if (name == "idsamp-nojudge") return {true, true, false};
  if (name == "coded-nosic") return {true, false, false};
  if (name == "coded-nointerleave") return {false, false, false};
  if (name == "uncoded-hard") return {true, false, false};
  if (name == "coded") return custom;
  throw UsageError("'" + name + "' is not a coded algorithm");
}

ExperimentSpec ExperimentSpec::from_config(const ConfigMap& cfg) {
  ExperimentSpec s;
  s.sys = system_config_from(cfg);
  s.axis = cfg.get("sweep.axis", "snr_db");
  s.values = cfg.has("sweep.values") ? cfg.get_doubles("sweep.values") : std::vector<double>{};
  if (s.values.empty()) {
    if (s.axis == "snr_db") s.values = {s.sys.snr_db};
    else if (s.axis == "j") s.values = {static_cast<double>(s.sys.j)};
    else if (s.axis == "lambda") s.values = {s.sys.lambda()};
    else if (s.axis == "nr") s.values = {static_cast<double>(s.sys.nr)};
    else if (s.axis == "t0") s.values = {static_cast<double>(s.sys.t0)};
  }
  s.coded_enabled = cfg.get_bool("coded.enabled", false);
  s.algorithms = cfg.has("algo") ? cfg.get_strings("algo")
                                 : std::vector<std::string>{s.coded_enabled ? "coded" : "dsamp"};
  s.frames = cfg.get_int("frames", s.frames);
  s.paired = cfg.get_bool("paired", false);
  s.damping = cfg.get_double("damping", 1.0);
  s.fec_iters = cfg.get_int("fec.iters", 8);
  s.fec_scale = cfg.get_double("fec.scale", 0.75);
  s.coded.interleave = cfg.get_bool("coded.interleave", true);
  s.coded.sic = cfg.get_bool("coded.sic", true);
  s.coded.judge = cfg.get_bool("coded.judge", true);
  s.ls = cfg.get_int("coded.ls", 20);
  s.ld = cfg.get_int("coded.ld", 100);
  s.nbar = cfg.get_int("coded.nbar", 5);
  s.validate();
  return s;
}

ConfigMap ExperimentSpec::to_config() const {
  ConfigMap c;
  store_system_config(sys, c);
  c.set("sweep.axis", axis);
  std::string vals;
  for (std::size_t i = 0; i < values.size(); ++i) vals += (i ? "," : "") + format_double(values[i]);
  c.set("sweep.values", vals);
  std::string algos;
  for (std::size_t i = 0; i < algorithms.size(); ++i) algos += (i ? "," : "") + algorithms[i];
  c.set("algo", algos);
  c.set("frames", std::to_string(frames));
  c.set("paired", paired ? "true" : "false");
  c.set("damping", format_double(damping));
  c.set("fec.iters", std::to_string(fec_iters));
  c.set("fec.scale", format_double(fec_scale));
  c.set("coded.enabled", coded_enabled ? "true" : "false");
  c.set("coded.interleave", coded.interleave ? "true" : "false");
  c.set("coded.sic", coded.sic ? "true" : "false");
  c.set("coded.judge", coded.judge ? "true" : "false");
  c.set("coded.ls", std::to_string(ls));
  c.set("coded.ld", std::to_string(ld));
  c.set("coded.nbar", std::to_string(nbar));
  return c;
}

void ExperimentSpec::validate() const {
  sys.validate();
  static const std::vector<std::string> axes = {"snr_db", "j", "lambda", "nr", "t0"};
  if (std::find(axes.begin(), axes.end(), axis) == axes.end())
    throw ConfigError("unknown sweep axis '" + axis + "' (expected snr_db, j, lambda, nr, t0)");
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  if (algorithms.empty()) throw UsageError("no algorithm selected");
  for (const auto& a : algorithms)
    if (std::find(known_algorithms().begin(), known_algorithms().end(), a) == known_algorithms().end())
      throw UsageError("unknown algorithm '" + a + "'");
  if (frames < 1) throw ConfigError("frames must be at least 1");
  if (fec_iters < 1) throw ConfigError("fec.iters must be at least 1");
  if (nbar < 1) throw ConfigError("coded.nbar must be at least 1");
  if (!(damping > 0.0 && damping <= 1.0)) throw ConfigError("damping must lie in (0, 1]");
}

SystemConfig apply_axis(SystemConfig sys, const std::string& axis, double value) {
  if (axis == "snr_db") {
    sys.snr_db = value;
  } else if (axis == "j") {
    sys.j = static_cast<int>(std::lround(value));
  } else if (axis == "lambda") {
    sys.ka = static_cast<int>(std::lround(value * sys.k));
  } else if (axis == "nr") {
    sys.nr = static_cast<int>(std::lround(value));
  } else if (axis == "t0") {
    sys.t0 = static_cast<int>(std::lround(value));
  } else {
    throw ConfigError("unknown sweep axis '" + axis + "'");
  }
  sys.validate();
  return sys;
}

std::uint64_t frame_seed(const ExperimentSpec& spec, const std::string& algorithm, double axis_value, int frame) {
  return derive_key(spec.sys.seed, {hash_name(spec.axis), std::bit_cast<std::uint64_t>(axis_value),
                                    spec.paired ? 0 : hash_name(algorithm), static_cast<std::uint64_t>(frame)});
}

ErrorCounts run_frame(const ExperimentSpec& spec, const std::string& algorithm, const SystemConfig& sys,
                      std::uint64_t seed) {
  if (algorithm == "lmmse") return lmmse_frame(sys, seed);

  Rng ract = Rng::substream(seed, {stream::activity});
  Rng rpay = Rng::substream(seed, {stream::payload});
  Rng rch = Rng::substream(seed, {stream::channel});
  Rng rnoise = Rng::substream(seed, {stream::noise});
  const double sigma2 = snr_to_noise_variance(sys);
  const ActivityVector act = draw_activity(sys, ract);
  const Constellation c = make_constellation(sys.m);

  if (is_coded_algorithm(algorithm)) {
    CodedSetup setup(sys, PacketLayout::make(spec.ls, spec.ld), spec.fec_iters, spec.fec_scale);
    setup.nbar = spec.nbar;
    const CodedFlags flags = coded_flags_for(algorithm, spec.coded);
    const CodedFrame cf = build_coded_frame(setup, act, rpay, flags.interleave);
    const ChannelMatrix h = draw_rayleigh_channel(setup.sys, rch);
    const CMat y = transmit(h.h, cf.frame.x, sigma2, rnoise);
    const DsampParams p = params_for(setup.sys, spec.damping);
    if (algorithm == "uncoded-hard") {
      const DetectionResult r = run_dsamp(y, h.h, setup.c, p);
      return compute_metrics(cf.frame, r, setup.c, setup.sys.nrf);
    }
    const IdsampResult r = run_idsamp(y, h.h, setup, flags, p);
    return count_coded_errors(cf, r, setup, flags.interleave);
  }

  const MediaFrame frame = build_frame(sys, act, c, rpay);
  const ChannelMatrix h = draw_rayleigh_channel(sys, rch);
  const CMat y = transmit(h.h, frame.x, sigma2, rnoise);
  const DsampParams p = params_for(sys, spec.damping);
  DetectionResult r;
  if (algorithm == "dsamp")
    r = run_dsamp(y, h.h, c, p);
  else if (algorithm == "dsamp-nominmax")
    r = dsamp_no_minmax(y, h.h, c, p);
  else if (algorithm == "amp")
    r = conventional_amp(y, h.h, c, sys.nt(), sys.t0, sys.lambda() / sys.nt(), sigma2);
  else
    throw UsageError("unknown algorithm '" + algorithm + "'");
  return compute_metrics(frame, r, c, sys.nrf);
}

MetricRow run_point(const ExperimentSpec& spec, const std::string& algorithm, double axis_value) {
  const SystemConfig sys = apply_axis(spec.sys, spec.axis, axis_value);
  const auto start = std::chrono::steady_clock::now();
  MetricRow row;
  row.algorithm = algorithm;
  row.seed = spec.sys.seed;
  for (int f = 0; f < spec.frames; ++f) row.counts += run_frame(spec, algorithm, sys, frame_seed(spec, algorithm, axis_value, f));
  row.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const bool coded = is_coded_algorithm(algorithm);
  const int j_eff = coded ? (3 * (spec.ls + spec.ld) + 12) / sys.eta() : sys.j;
  row.params = {{spec.axis, format_double(axis_value)},
                {"k", std::to_string(sys.k)},
                {"ka", std::to_string(sys.ka)},
                {"nt", std::to_string(sys.nt())},
                {"m", std::to_string(sys.m)},
                {"nr", std::to_string(sys.nr)},
                {"j", std::to_string(j_eff)},
                {"snr_db", format_double(sys.snr_db)},
                {"t0", std::to_string(sys.t0)},
                {"lambda", format_double(sys.lambda())}};
  return row;
}

std::vector<MetricRow> run_sweep(const ExperimentSpec& spec) {
  spec.validate();
  std::vector<MetricRow> rows;
  for (double v : spec.values)
    for (const auto& a : spec.algorithms) rows.push_back(run_point(spec, a, v));
  return rows;
}

void write_sweep_csv(std::ostream& out, const ExperimentSpec& spec, const std::vector<MetricRow>& rows) {
  out << "# mmd sweep results\n";
  const ConfigMap cfg = spec.to_config();
  for (const auto& [k, v] : cfg.entries()) out << "# cfg: " << k << " = " << v << "\n";
  out << "# snr convention: " << kSnrNote << "\n";
  out << "# coded rows: ber over payload bits, ser over re-encoded symbols; uncoded rows: raw media bits\n";
  out << "algorithm,axis,axis_value,k,ka,nt,m,nr,j,snr_db,t0,lambda,ader,ser,ber,frames,em,ef,"
         "symbol_errors,symbols,bit_errors,bits,seed,wall_time\n";
  for (const MetricRow& r : rows) {
    auto param = [&](const std::string& key) {
      for (const auto& [k, v] : r.params)
        if (k == key) return v;
      return std::string{};
    };
    const ErrorCounts& c = r.counts;
    out << r.algorithm << ',' << spec.axis << ',' << r.params.front().second << ',' << param("k") << ','
        << param("ka") << ',' << param("nt") << ',' << param("m") << ',' << param("nr") << ',' << param("j") << ','
        << param("snr_db") << ',' << param("t0") << ',' << param("lambda") << ',' << format_double(c.ader()) << ','
        << format_double(c.ser()) << ',' << format_double(c.ber()) << ',' << c.frames << ',' << c.missed << ','
        << c.false_alarms << ',' << c.symbol_errors << ',' << c.symbols << ',' << c.bit_errors << ',' << c.bits
        << ',' << r.seed << ',' << format_double(r.wall_time) << "\n";
  }
}

void run_sweep_to_file(const ExperimentSpec& spec, const std::string& path) {
  const auto rows = run_sweep(spec);
  with_output(path, [&](std::ostream& out) { write_sweep_csv(out, spec, rows); });
}

SeConfig se_config_from(const ConfigMap& cfg) {
  SeConfig s;
  s.sys = system_config_from(cfg);
  s.n_mc = cfg.get_int("se.n_mc", s.n_mc);
  s.t_se = cfg.get_int("se.t_se", s.t_se);
  s.epsilon = cfg.get_double("se.epsilon", s.epsilon);
  s.gamma = cfg.get_double("se.gamma", s.gamma);
  s.validate();
  return s;
}

void write_se_csv(std::ostream& out, const SeConfig& cfg, const SeTrace& trace) {
  out << "# mmd state evolution\n";
  ConfigMap c;
  store_system_config(cfg.sys, c);
  c.set("se.n_mc", std::to_string(cfg.n_mc));
  c.set("se.t_se", std::to_string(cfg.t_se));
  c.set("se.epsilon", format_double(cfg.epsilon));
  c.set("se.gamma", format_double(cfg.gamma));
  for (const auto& [k, v] : c.entries()) out << "# cfg: " << k << " = " << v << "\n";
  out << "# snr convention: " << kSnrNote << "\n";
  out << "kind,snr_db,iter,e,v,ader,ser,ber\n";
  for (std::size_t t = 0; t < trace.e.size(); ++t)
    out << "trace," << format_double(cfg.sys.snr_db) << ',' << t + 1 << ',' << format_double(trace.e[t]) << ','
        << format_double(trace.v[t]) << ",,,\n";
  out << "summary," << format_double(cfg.sys.snr_db) << ',' << trace.e.size() << ','
      << format_double(trace.e.empty() ? 0.0 : trace.e.back()) << ','
      << format_double(trace.v.empty() ? 0.0 : trace.v.back()) << ',' << format_double(trace.predicted_ader) << ','
      << format_double(trace.predicted_ser) << ',' << format_double(trace.predicted_ber) << "\n";
}

TrackingConfig tracking_config_from(const ConfigMap& cfg) {
  TrackingConfig t;
  t.sys = system_config_from(cfg, t.sys);
  t.alpha = cfg.get_double("alpha", t.alpha);
  t.frames = cfg.get_int("frames", t.frames);
  t.ls = cfg.get_int("coded.ls", t.ls);
  t.ld = cfg.get_int("coded.ld", t.ld);
  t.turbo_iterations = cfg.get_int("fec.iters", t.turbo_iterations);
  t.turbo_scale = cfg.get_double("fec.scale", t.turbo_scale);
  t.track_signal_nmse = cfg.get_bool("track.signal_nmse", t.track_signal_nmse);
  t.validate();
  return t;
}

void write_tracking_csv(std::ostream& out, const TrackingConfig& cfg, const std::vector<TrackingResult>& runs) {
  out << "# mmd csi tracking\n";
  ConfigMap c;
  store_system_config(cfg.sys, c);
  c.set("alpha", format_double(cfg.alpha));
  c.set("frames", std::to_string(cfg.frames));
  c.set("coded.ls", std::to_string(cfg.ls));
  c.set("coded.ld", std::to_string(cfg.ld));
  c.set("fec.iters", std::to_string(cfg.turbo_iterations));
  c.set("fec.scale", format_double(cfg.turbo_scale));
  c.set("track.seeds", std::to_string(runs.size()));
  for (const auto& [k, v] : c.entries()) out << "# cfg: " << k << " = " << v << "\n";
  out << "frame,strategy,seed,nmse_h,nmse_x,detected_count,refined_count\n";
  for (const TrackingResult& r : runs)
    for (const auto* recs : {&r.update, &r.non_update})
      for (const FrameRecord& f : *recs)
        out << f.frame << ',' << strategy_name(f.strategy) << ',' << r.seed << ',' << format_double(f.nmse_h) << ','
            << format_double(f.nmse_x) << ',' << f.detected << ',' << f.refined << "\n";
}

}  // namespace mmd
