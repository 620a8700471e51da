#include "mmd/coded_access.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "mmd/error.hpp"

namespace mmd {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Running log-sum-exp accumulator.
struct LogAcc {
  double mx = kNegInf;
  double acc = 0.0;
  void add(double x) {
    if (x == kNegInf) return;
    if (x <= mx) {
      acc += std::exp(x - mx);
    } else {
      acc = acc * std::exp(mx - x) + 1.0;
      mx = x;
    }
  }
  double value() const { return mx == kNegInf ? kNegInf : mx + std::log(acc); }
};

double llr_from(const LogAcc& zero, const LogAcc& one) {
  const double a = zero.value();
  const double b = one.value();
  if (a == kNegInf && b == kNegInf) return 0.0;
  if (a == kNegInf) return -kLlrMax;
  if (b == kNegInf) return kLlrMax;
  return std::clamp(a - b, -kLlrMax, kLlrMax);
}

std::vector<int> minus(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> out;
  for (int x : a)
    if (std::find(b.begin(), b.end(), x) == b.end()) out.push_back(x);
  return out;
}

CMat select_device_columns(const CMat& h0, const std::vector<int>& devices, int nt) {
  CMat h(h0.rows(), static_cast<Eigen::Index>(devices.size()) * nt);
  for (std::size_t i = 0; i < devices.size(); ++i)
    h.middleCols(static_cast<Eigen::Index>(i) * nt, nt) = h0.middleCols(static_cast<Eigen::Index>(devices[i]) * nt, nt);
  return h;
}

}  // namespace

Bits make_signature(int ls, std::uint64_t seed) {
  if (ls < 0) throw ConfigError("signature length must be non-negative");
  Rng rng = Rng::substream(seed, {stream::signature});
  Bits s(ls);
  for (auto& b : s) b = static_cast<std::uint8_t>(rng.bit());
  return s;
}

PacketLayout PacketLayout::make(int ls, int ld, std::uint64_t signature_seed) {
  if (ld <= 0) throw ConfigError("payload length must be positive");
  PacketLayout p;
  p.ls = ls;
  p.ld = ld;
  p.signature = make_signature(ls, signature_seed);
  return p;
}

Bits build_packet(std::span<const std::uint8_t> payload, const PacketLayout& layout) {
  if (static_cast<int>(payload.size()) != layout.ld)
    throw UsageError("payload has " + std::to_string(payload.size()) + " bits, expected " + std::to_string(layout.ld));
  Bits p(layout.signature.begin(), layout.signature.end());
  p.insert(p.end(), payload.begin(), payload.end());
  return p;
}

CodedSetup::CodedSetup(SystemConfig s, PacketLayout l, int turbo_iterations, double extrinsic_scale)
    : sys(std::move(s)),
      layout(std::move(l)),
      codec(TurboConfig::make(layout.l(), turbo_iterations, extrinsic_scale)),
      c(make_constellation(sys.m)) {
  const int eta = sys.eta();
  const int coded = codec.coded_len();
  if (eta <= 0 || coded % eta != 0)
    throw ConfigError("coded length " + std::to_string(coded) + " is not a multiple of eta = " + std::to_string(eta));
  if (static_cast<int>(layout.signature.size()) != layout.ls) throw ConfigError("signature length mismatch");
  sys.j = coded / eta;
  interleaver.cols = eta;
  interleaver.rows = sys.j;
  sys.validate();
}

Bits bicmm_bits(std::span<const std::uint8_t> packet, const CodedSetup& setup, bool interleave) {
  Bits coded = setup.codec.encode(packet);
  if (!interleave) return coded;
  return setup.interleaver.interleave(std::span<const std::uint8_t>(coded));
}

std::vector<MediaSymbol> bicmm_encode(std::span<const std::uint8_t> packet, const CodedSetup& setup, bool interleave) {
  const Bits tx = bicmm_bits(packet, setup, interleave);
  const int eta = setup.eta();
  std::vector<MediaSymbol> out;
  out.reserve(setup.sys.j);
  for (int jj = 0; jj < setup.sys.j; ++jj)
    out.push_back(modulate_group(std::span<const std::uint8_t>(tx).subspan(static_cast<std::size_t>(jj) * eta, eta),
                                 setup.sys.nrf, setup.c));
  return out;
}

CodedFrame build_coded_frame(const CodedSetup& setup, const ActivityVector& activity,
                             const std::vector<Bits>& payloads, bool interleave) {
  const int k = setup.sys.k;
  if (static_cast<int>(payloads.size()) != k) throw UsageError("one payload slot per device required");
  CodedFrame cf;
  cf.payloads.resize(k);
  cf.packets.resize(k);
  std::vector<std::vector<MediaSymbol>> per_device(k);
  std::vector<Bits> tx(k);
  for (int d = 0; d < k; ++d) {
    if (!activity[d]) continue;
    cf.payloads[d] = payloads[d];
    cf.packets[d] = build_packet(payloads[d], setup.layout);
    tx[d] = bicmm_bits(cf.packets[d], setup, interleave);
    per_device[d] = bicmm_encode(cf.packets[d], setup, interleave);
  }
  cf.frame = frame_from_symbols(setup.sys, activity, std::move(per_device), std::move(tx));
  return cf;
}

CodedFrame build_coded_frame(const CodedSetup& setup, const ActivityVector& activity, Rng& payload_rng,
                             bool interleave) {
  std::vector<Bits> payloads(setup.sys.k);
  for (int d = 0; d < setup.sys.k; ++d) {
    if (!activity[d]) continue;
    payloads[d].resize(setup.layout.ld);
    for (auto& b : payloads[d]) b = static_cast<std::uint8_t>(payload_rng.bit());
  }
  return build_coded_frame(setup, activity, payloads, interleave);
}

std::vector<double> compute_symbol_llrs(std::span<const double> block, int nt, int nrf, const Constellation& c) {
  const int a = c.order() + 1;
  if (static_cast<int>(block.size()) != nt * a) throw UsageError("block pmf size mismatch");
  if ((1 << nrf) != nt) throw UsageError("Nt must equal 2^Nrf");
  std::vector<LogAcc> zero(nrf + c.bits), one(nrf + c.bits);
  for (int i = 0; i < nt; ++i) {
    double rest = 0.0;
    for (int g = 0; g < nt; ++g)
      if (g != i) rest += block[static_cast<std::size_t>(g) * a];
    for (int s = 0; s < c.order(); ++s) {
      const double lq = rest + block[static_cast<std::size_t>(i) * a + 1 + s];
      for (int b = 0; b < nrf; ++b) ((i >> (nrf - 1 - b)) & 1 ? one : zero)[b].add(lq);
      for (int d = 0; d < c.bits; ++d) (c.label_bit(s, d) ? one : zero)[nrf + d].add(lq);
    }
  }
  std::vector<double> llr(nrf + c.bits);
  for (std::size_t b = 0; b < llr.size(); ++b) llr[b] = llr_from(zero[b], one[b]);
  return llr;
}

std::vector<double> device_llrs(const AmpState& s, int k, int nrf, const Constellation& c) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(s.slots()) * (nrf + c.bits));
  for (int jj = 0; jj < s.slots(); ++jj) {
    const auto l = compute_symbol_llrs(s.block_log_pmf(k, jj), s.nt, nrf, c);
    out.insert(out.end(), l.begin(), l.end());
  }
  return out;
}

TurboDecodeResult decode_device(std::span<const double> llrs, const CodedSetup& setup, bool interleave) {
  if (!interleave) return setup.codec.decode(llrs);
  const std::vector<double> d = setup.interleaver.deinterleave(llrs);
  return setup.codec.decode(d);
}

int hamming_distance(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  if (a.size() != b.size()) throw UsageError("Hamming distance needs equal lengths");
  int d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] & 1) != (b[i] & 1);
  return d;
}

JudgeOutcome decoding_quality_judge(const std::vector<int>& omega2, const std::vector<Bits>& decoded,
                                    const PacketLayout& layout) {
  JudgeOutcome out;
  for (int n : omega2) {
    const Bits& row = decoded.at(n);
    const int d = static_cast<int>(row.size()) >= layout.ls
                      ? hamming_distance(layout.signature, std::span<const std::uint8_t>(row).first(layout.ls))
                      : layout.ls + 1;
    out.m.push_back(d);
    if (d == 0) out.omega3.push_back(n);
  }
  out.terminate = out.omega3.empty();
  return out;
}

void reconstruct_and_cancel(IdsampState& st, const std::vector<int>& omega3, const CMat& h0, const CodedSetup& setup,
                            bool interleave) {
  const int nt = setup.sys.nt();
  for (int n : omega3) {
    const std::vector<MediaSymbol> syms = bicmm_encode(st.decoded.at(n), setup, interleave);
    for (int jj = 0; jj < static_cast<int>(syms.size()); ++jj)
      st.y_cur.col(jj) -= h0.col(static_cast<Eigen::Index>(n) * nt + syms[jj].map_index) * syms[jj].qam_point;
  }
  st.omega1 = minus(st.omega1, omega3);
  st.lambda_set = minus(st.omega0, st.omega1);
  std::vector<int> keep;
  for (int d = 0; d < setup.sys.k; ++d)
    if (std::find(st.lambda_set.begin(), st.lambda_set.end(), d) == st.lambda_set.end()) keep.push_back(d);
  st.column_devices = std::move(keep);
  st.h_cur = select_device_columns(h0, st.column_devices, nt);
}

IdsampResult run_idsamp(const CMat& y, const CMat& h0, const CodedSetup& setup, const CodedFlags& flags,
                        const DsampParams& params) {
  const int k_total = setup.sys.k;
  const int nt = setup.sys.nt();
  if (h0.cols() != static_cast<Eigen::Index>(k_total) * nt) throw UsageError("channel width disagrees with K*Nt");
  if (y.cols() != setup.sys.j) throw UsageError("received frame length disagrees with the coded frame length");

  IdsampState st;
  st.y_cur = y;
  st.h_cur = h0;
  st.column_devices.resize(k_total);
  std::iota(st.column_devices.begin(), st.column_devices.end(), 0);
  st.decoded.assign(k_total, Bits{});

  DsampParams p = params;
  p.nt = nt;
  p.keep_trace = false;

  IdsampResult res;
  auto decode_set = [&](const AmpState& s, const std::vector<int>& devices, const std::vector<int>& local) {
    for (std::size_t i = 0; i < devices.size(); ++i) {
      const auto llrs = device_llrs(s, local[i], setup.sys.nrf, setup.c);
      st.decoded[devices[i]] = decode_device(llrs, setup, flags.interleave).bits;
    }
  };

  for (int round = 1;; ++round) {
    if (round > k_total) throw NumericError("IDS-AMP exceeded its safety cap of " + std::to_string(k_total) + " rounds");
    res.rounds = round;
    AmpState s = run_dsamp_core(st.y_cur, st.h_cur, setup.c, p);
    std::vector<int> local_of(k_total, -1);
    for (std::size_t i = 0; i < st.column_devices.size(); ++i) local_of[st.column_devices[i]] = static_cast<int>(i);

    if (round == 1) {
      DetectionResult& fp = res.first_pass;
      fp.a_hat = s.a_hat;
      fp.a_tilde = p.minmax ? minmax_normalize(s.a_hat) : s.a_hat;
      fp.omega = detect_activity(fp.a_tilde);
      Reconstruction rec = extract_and_reconstruct(s, fp.omega);
      fp.x_hat = std::move(rec.x_hat);
      fp.map_indices = std::move(rec.map_indices);
      fp.sigma2_hat = s.sigma2;
      st.omega0 = fp.omega;
      st.omega1 = st.omega0;
    }
    if (st.omega1.empty()) break;

    // Candidates: the N-bar remaining devices with the largest indicators.
    std::vector<int> ranked = st.omega1;
    std::stable_sort(ranked.begin(), ranked.end(), [&](int a, int b) {
      const double va = s.a_hat(local_of[a]), vb = s.a_hat(local_of[b]);
      return va != vb ? va > vb : a < b;
    });
    if (!flags.sic || static_cast<int>(ranked.size()) < setup.nbar)
      st.omega2 = ranked;
    else
      st.omega2.assign(ranked.begin(), ranked.begin() + setup.nbar);
    std::sort(st.omega2.begin(), st.omega2.end());

    auto locals = [&](const std::vector<int>& devices) {
      std::vector<int> l;
      for (int d : devices) l.push_back(local_of[d]);
      return l;
    };
    decode_set(s, st.omega2, locals(st.omega2));
    if (!flags.sic) break;

    if (flags.judge) {
      const JudgeOutcome j = decoding_quality_judge(st.omega2, st.decoded, setup.layout);
      st.m = j.m;
      if (j.terminate) {
        const std::vector<int> rest = minus(st.omega1, st.omega2);
        decode_set(s, rest, locals(rest));
        break;
      }
      st.omega3 = j.omega3;
    } else {
      st.omega3 = st.omega2;
    }
    reconstruct_and_cancel(st, st.omega3, h0, setup, flags.interleave);
    if (st.omega1.empty()) break;
  }

  res.omega0 = st.omega0;
  res.cancelled = st.lambda_set;
  res.packets = st.decoded;
  res.payloads.assign(k_total, Bits{});
  for (int d : st.omega0)
    if (static_cast<int>(st.decoded[d].size()) == setup.layout.l())
      res.payloads[d].assign(st.decoded[d].begin() + setup.layout.ls, st.decoded[d].end());
  return res;
}

ErrorCounts count_coded_errors(const CodedFrame& truth, const IdsampResult& result, const CodedSetup& setup,
                               bool interleave) {
  ErrorCounts e = count_activity_errors(truth.frame.activity, result.omega0);
  const int j = setup.sys.j;
  const int ld = setup.layout.ld;
  e.symbols = static_cast<long long>(j) * e.active;
  e.bits = static_cast<long long>(ld) * e.active;
  e.symbol_errors = static_cast<long long>(j) * e.missed;
  e.bit_errors = static_cast<long long>(ld) * e.missed;
  for (int d : result.omega0) {
    if (!truth.frame.activity[d]) continue;
    const Bits& packet = result.packets[d];
    if (static_cast<int>(packet.size()) != setup.layout.l()) {
      e.symbol_errors += j;
      e.bit_errors += ld;
      continue;
    }
    e.bit_errors += hamming_distance(result.payloads[d], truth.payloads[d]);
    const std::vector<MediaSymbol> syms = bicmm_encode(packet, setup, interleave);
    for (int jj = 0; jj < j; ++jj) {
      const MediaSymbol& t = *truth.frame.symbol(d, jj);
      if (syms[jj].map_index != t.map_index || syms[jj].qam_index != t.qam_index) ++e.symbol_errors;
    }
  }
  return e;
}

}  // namespace mmd
