#include "mmd/sysmodel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "mmd/error.hpp"

namespace mmd {

namespace {

int log2_exact(int v) {
  int b = 0;
  while ((1 << b) < v) ++b;
  return (1 << b) == v ? b : -1;
}

}  // namespace

int SystemConfig::qam_bits() const { return log2_exact(m); }

void SystemConfig::validate() const {
  if (k <= 0 || nr <= 0 || j <= 0 || t0 <= 0) throw ConfigError("k, nr, j and t0 must be positive");
  if (ka < 0 || ka > k) throw ConfigError("ka must lie in [0, k], got " + std::to_string(ka));
  if (nrf < 0 || nrf > 8) throw ConfigError("nrf must lie in [0, 8]");
  const int b = log2_exact(m);
  if (b <= 0 || b % 2 != 0) throw ConfigError("m must be a power of 4 (square QAM), got " + std::to_string(m));
}

cd Constellation::sum() const { return std::accumulate(points.begin(), points.end(), cd{}); }

double Constellation::mean_energy() const {
  double e = 0.0;
  for (auto p : points) e += std::norm(p);
  return e / static_cast<double>(points.size());
}

int Constellation::nearest(cd value) const {
  int best = 0;
  double best_d = std::norm(value - points[0]);
  for (int i = 1; i < order(); ++i) {
    const double d = std::norm(value - points[i]);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

int Constellation::index_of_label(std::uint32_t label) const {
  for (int i = 0; i < order(); ++i)
    if (labels[i] == label) return i;
  throw UsageError("label not present in constellation");
}

Constellation Constellation::from_points(std::vector<cd> points, std::vector<std::uint32_t> labels, int bits) {
  if (points.size() != labels.size() || points.empty())
    throw UsageError("constellation needs one label per point");
  Constellation c;
  c.points = std::move(points);
  c.labels = std::move(labels);
  c.bits = bits;
  return c;
}

Constellation make_constellation(int m) {
  if (m != 4 && m != 16 && m != 64) throw ConfigError("unsupported QAM order " + std::to_string(m));
  const int bits = log2_exact(m);
  const int half = bits / 2;
  const int levels = 1 << half;
  const double scale = std::sqrt(3.0 / (2.0 * (m - 1)));

  Constellation c;
  c.bits = bits;
  c.points.reserve(m);
  c.labels.reserve(m);
  // Level index 0 is the most positive amplitude; bits of a level are its Gray code.
  for (int li = 0; li < levels; ++li) {
    for (int lq = 0; lq < levels; ++lq) {
      const auto gi = static_cast<std::uint32_t>(li ^ (li >> 1));
      const auto gq = static_cast<std::uint32_t>(lq ^ (lq >> 1));
      const double re = (levels - 1 - 2 * li) * scale;
      const double im = (levels - 1 - 2 * lq) * scale;
      c.points.emplace_back(re, im);
      c.labels.push_back((gi << half) | gq);
    }
  }
  return c;
}

ActivityVector draw_activity(const SystemConfig& cfg, Rng& rng) {
  if (cfg.ka > cfg.k) throw ConfigError("ka exceeds k");
  std::vector<int> idx(cfg.k);
  std::iota(idx.begin(), idx.end(), 0);
  // Partial Fisher-Yates: the first ka entries form a uniform random subset.
  for (int i = 0; i < cfg.ka; ++i) {
    std::uniform_int_distribution<int> pick(i, cfg.k - 1);
    std::swap(idx[i], idx[pick(rng.engine())]);
  }
  ActivityVector a(cfg.k, 0);
  for (int i = 0; i < cfg.ka; ++i) a[idx[i]] = 1;
  return a;
}

Eigen::VectorXcd MediaSymbol::vector(int nt) const {
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(nt);
  v(map_index) = qam_point;
  return v;
}

MediaSymbol modulate_symbol(std::span<const std::uint8_t> spatial_bits,
                            std::span<const std::uint8_t> qam_bits, const Constellation& c) {
  if (static_cast<int>(qam_bits.size()) != c.bits)
    throw UsageError("expected " + std::to_string(c.bits) + " QAM bits, got " + std::to_string(qam_bits.size()));
  MediaSymbol s;
  for (auto b : spatial_bits) s.map_index = (s.map_index << 1) | (b & 1);
  std::uint32_t label = 0;
  for (auto b : qam_bits) label = (label << 1) | (b & 1u);
  s.qam_index = c.index_of_label(label);
  s.qam_point = c.points[s.qam_index];
  s.spatial_bits.assign(spatial_bits.begin(), spatial_bits.end());
  s.qam_bits.assign(qam_bits.begin(), qam_bits.end());
  return s;
}

MediaSymbol modulate_group(std::span<const std::uint8_t> group, int nrf, const Constellation& c) {
  if (static_cast<int>(group.size()) != nrf + c.bits) throw UsageError("bit group length mismatch");
  return modulate_symbol(group.first(nrf), group.subspan(nrf), c);
}

int MediaFrame::active_count() const {
  return static_cast<int>(std::count(activity.begin(), activity.end(), std::uint8_t{1}));
}

MediaFrame frame_from_symbols(const SystemConfig& cfg, const ActivityVector& activity,
                              std::vector<std::vector<MediaSymbol>> per_device,
                              std::vector<Bits> source_bits) {
  const int nt = cfg.nt();
  if (static_cast<int>(activity.size()) != cfg.k || static_cast<int>(per_device.size()) != cfg.k)
    throw UsageError("frame dimensions disagree with config");
  MediaFrame f;
  f.k = cfg.k;
  f.j = cfg.j;
  f.nt = nt;
  f.activity = activity;
  f.symbols.assign(static_cast<std::size_t>(cfg.k) * cfg.j, std::nullopt);
  f.x = CMat::Zero(cfg.columns(), cfg.j);
  f.source_bits = std::move(source_bits);
  f.source_bits.resize(cfg.k);
  for (int k = 0; k < cfg.k; ++k) {
    if (!activity[k]) continue;
    if (static_cast<int>(per_device[k].size()) != cfg.j) throw UsageError("active device needs J symbols");
    for (int jj = 0; jj < cfg.j; ++jj) {
      const MediaSymbol& s = per_device[k][jj];
      f.x(k * nt + s.map_index, jj) = s.qam_point;
      f.symbols[static_cast<std::size_t>(k) * cfg.j + jj] = s;
    }
  }
  return f;
}

MediaFrame build_frame(const SystemConfig& cfg, const ActivityVector& activity,
                       const Constellation& c, const std::vector<Bits>& payloads) {
  const int eta = cfg.nrf + c.bits;
  const std::size_t need = static_cast<std::size_t>(eta) * cfg.j;
  if (static_cast<int>(payloads.size()) != cfg.k) throw UsageError("one payload slot per device required");
  std::vector<std::vector<MediaSymbol>> per_device(cfg.k);
  std::vector<Bits> source(cfg.k);
  for (int k = 0; k < cfg.k; ++k) {
    if (!activity[k]) continue;
    const Bits& p = payloads[k];
    if (p.size() != need)
      throw UsageError("payload of device " + std::to_string(k) + " has " + std::to_string(p.size()) +
                       " bits, expected " + std::to_string(need));
    per_device[k].reserve(cfg.j);
    for (int jj = 0; jj < cfg.j; ++jj)
      per_device[k].push_back(modulate_group(std::span(p).subspan(jj * eta, eta), cfg.nrf, c));
    source[k] = p;
  }
  return frame_from_symbols(cfg, activity, std::move(per_device), std::move(source));
}

MediaFrame build_frame(const SystemConfig& cfg, const ActivityVector& activity,
                       const Constellation& c, Rng& rng) {
  const std::size_t need = static_cast<std::size_t>(cfg.nrf + c.bits) * cfg.j;
  std::vector<Bits> payloads(cfg.k);
  for (int k = 0; k < cfg.k; ++k) {
    if (!activity[k]) continue;
    payloads[k].resize(need);
    for (auto& b : payloads[k]) b = static_cast<std::uint8_t>(rng.bit());
  }
  return build_frame(cfg, activity, c, payloads);
}

ChannelMatrix draw_rayleigh_channel(const SystemConfig& cfg, Rng& rng, double entry_variance) {
  ChannelMatrix ch;
  ch.entry_variance = entry_variance;
  ch.h.resize(cfg.nr, cfg.columns());
  // Column-major fill keeps the draw order tied to storage order.
  cd* data = ch.h.data();
  for (Eigen::Index i = 0; i < ch.h.size(); ++i) data[i] = rng.complex_normal(entry_variance);
  return ch;
}

ArChannelConfig ArChannelConfig::from_mobility(double carrier_hz, double bandwidth_hz, double velocity_mps) {
  constexpr double speed_of_light = 299792458.0;
  ArChannelConfig a;
  a.carrier_hz = carrier_hz;
  a.bandwidth_hz = bandwidth_hz;
  a.velocity_mps = velocity_mps;
  const double doppler = velocity_mps * carrier_hz / speed_of_light;
  const double coherence = 0.423 / doppler;
  const double symbol = 1.0 / bandwidth_hz;
  a.tau = static_cast<int>(std::floor(coherence / symbol));
  a.alpha = std::pow(0.5, 2.0 / a.tau);
  a.validate();
  return a;
}

void ArChannelConfig::validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("AR coefficient must lie in (0, 1]");
  if (tau < 1) throw ConfigError("time lag must be at least 1");
}

ChannelMatrix evolve_channel_ar(const ChannelMatrix& h, double alpha, Rng& rng) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("AR coefficient must lie in [0, 1]");
  ChannelMatrix out;
  out.entry_variance = h.entry_variance;
  if (alpha == 1.0) {
    out.h = h.h;
    return out;
  }
  const double keep = std::sqrt(alpha);
  const double fresh = std::sqrt(1.0 - alpha);
  out.h.resize(h.h.rows(), h.h.cols());
  const cd* src = h.h.data();
  cd* dst = out.h.data();
  for (Eigen::Index i = 0; i < h.h.size(); ++i)
    dst[i] = keep * src[i] + fresh * rng.complex_normal(h.entry_variance);
  return out;
}

CMat transmit(const CMat& h, const CMat& x, double noise_variance, Rng& rng) {
  if (h.cols() != x.rows())
    throw UsageError("channel has " + std::to_string(h.cols()) + " columns but signal has " +
                     std::to_string(x.rows()) + " rows");
  CMat y = h * x;
  if (noise_variance > 0.0) {
    cd* d = y.data();
    for (Eigen::Index i = 0; i < y.size(); ++i) d[i] += rng.complex_normal(noise_variance);
  }
  return y;
}

double snr_to_noise_variance(const SystemConfig& cfg) {
  const double ka = std::max(cfg.ka, 1);
  return ka / std::pow(10.0, cfg.snr_db / 10.0);
}

}  // namespace mmd
