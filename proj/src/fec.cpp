#include "mmd/fec.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace mmd {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr int kStates = 8;
constexpr int kTail = 3;

bool is_permutation_of_range(const std::vector<int>& p) {
  std::vector<char> seen(p.size(), 0);
  for (int v : p) {
    if (v < 0 || v >= static_cast<int>(p.size()) || seen[v]) return false;
    seen[v] = 1;
  }
  return true;
}

std::vector<int> qpp(int len, long long f1, long long f2) {
  std::vector<int> p(len);
  for (long long i = 0; i < len; ++i) p[i] = static_cast<int>((f1 * i + f2 * i * i) % len);
  return p;
}

double sat(double x) {
  if (std::isnan(x)) return 0.0;
  return std::clamp(x, -kLlrMax, kLlrMax);
}

}  // namespace

std::vector<int> qpp_interleaver(int len) {
  if (len <= 0) throw ConfigError("interleaver length must be positive");
  struct Entry {
    int len, f1, f2;
  };
  static constexpr Entry table[] = {{40, 3, 10}, {48, 7, 12}, {64, 7, 16}, {120, 103, 90}, {280, 103, 210}};
  for (const auto& e : table)
    if (e.len == len) {
      auto p = qpp(len, e.f1, e.f2);
      if (is_permutation_of_range(p)) return p;
    }
  for (int f1 = 1; f1 < len; f1 += 2) {
    if (std::gcd(f1, len) != 1) continue;
    for (int f2 = 2; f2 < len; f2 += 2) {
      auto p = qpp(len, f1, f2);
      if (is_permutation_of_range(p)) return p;
    }
  }
  std::vector<int> p(len);
  std::iota(p.begin(), p.end(), 0);
  return p;
}

TurboConfig TurboConfig::make(int info_len, int iterations, double extrinsic_scale) {
  TurboConfig c;
  c.info_len = info_len;
  c.iterations = iterations;
  c.extrinsic_scale = extrinsic_scale;
  c.interleaver = qpp_interleaver(info_len);
  return c;
}

TurboCodec::TurboCodec(TurboConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.info_len <= 0) throw ConfigError("turbo info length must be positive");
  if (cfg_.iterations <= 0) throw ConfigError("turbo iteration count must be positive");
  if (cfg_.interleaver.empty()) cfg_.interleaver = qpp_interleaver(cfg_.info_len);
  if (static_cast<int>(cfg_.interleaver.size()) != cfg_.info_len || !is_permutation_of_range(cfg_.interleaver))
    throw ConfigError("turbo interleaver is not a permutation of the info length");
}

const TurboCodec::Trellis& TurboCodec::trellis() {
  static const Trellis t = [] {
    Trellis tr{};
    for (int s = 0; s < kStates; ++s) {
      const int s1 = (s >> 2) & 1, s2 = (s >> 1) & 1, s3 = s & 1;
      for (int u = 0; u < 2; ++u) {
        const int a = u ^ s2 ^ s3;
        tr.parity[s][u] = a ^ s1 ^ s3;
        tr.next[s][u] = (a << 2) | (s1 << 1) | s2;
      }
    }
    return tr;
  }();
  return t;
}

namespace {

struct RscOutput {
  std::vector<std::uint8_t> parity;
  std::uint8_t tail[2 * kTail];
};

template <typename Tr>
RscOutput rsc_encode(const Tr& tr, std::span<const std::uint8_t> bits) {
  RscOutput out;
  out.parity.resize(bits.size());
  int s = 0;
  for (std::size_t i = 0; i < bits.size(); ++i) {
    const int u = bits[i] & 1;
    out.parity[i] = static_cast<std::uint8_t>(tr.parity[s][u]);
    s = tr.next[s][u];
  }
  for (int t = 0; t < kTail; ++t) {
    const int s2 = (s >> 1) & 1, s3 = s & 1;
    const int u = s2 ^ s3;  // drives the feedback sum to zero
    out.tail[2 * t] = static_cast<std::uint8_t>(u);
    out.tail[2 * t + 1] = static_cast<std::uint8_t>(tr.parity[s][u]);
    s = tr.next[s][u];
  }
  return out;
}

}  // namespace

std::vector<std::uint8_t> TurboCodec::encode(std::span<const std::uint8_t> bits) const {
  const int n = cfg_.info_len;
  if (static_cast<int>(bits.size()) != n)
    throw UsageError("turbo encoder expects " + std::to_string(n) + " bits, got " + std::to_string(bits.size()));
  std::vector<std::uint8_t> permuted(n);
  for (int i = 0; i < n; ++i) permuted[i] = bits[cfg_.interleaver[i]];
  const RscOutput e1 = rsc_encode(trellis(), bits);
  const RscOutput e2 = rsc_encode(trellis(), permuted);

  std::vector<std::uint8_t> out;
  out.reserve(coded_len());
  for (int i = 0; i < n; ++i) {
    out.push_back(bits[i] & 1);
    out.push_back(e1.parity[i]);
    out.push_back(e2.parity[i]);
  }
  out.insert(out.end(), std::begin(e1.tail), std::end(e1.tail));
  out.insert(out.end(), std::begin(e2.tail), std::end(e2.tail));
  return out;
}

void TurboCodec::siso(std::span<const double> sys, std::span<const double> par, std::span<const double> apriori,
                      std::span<const double> tail_sys, std::span<const double> tail_par,
                      std::span<double> extrinsic, std::span<double> posterior) const {
  const Trellis& tr = trellis();
  const int n = cfg_.info_len;
  const int steps = n + kTail;

  // Branch metric of (u, p) with bipolar mapping bit 0 -> +1.
  auto gamma = [&](int t, int u, int p) {
    double ls, lp, la;
    if (t < n) {
      ls = sys[t];
      lp = par[t];
      la = apriori[t];
    } else {
      ls = tail_sys[t - n];
      lp = tail_par[t - n];
      la = 0.0;
    }
    return 0.5 * ((u ? -1.0 : 1.0) * (ls + la) + (p ? -1.0 : 1.0) * lp);
  };

  std::vector<double> alpha(static_cast<std::size_t>(steps + 1) * kStates, kNegInf);
  std::vector<double> beta(static_cast<std::size_t>(steps + 1) * kStates, kNegInf);
  alpha[0] = 0.0;
  for (int t = 0; t < steps; ++t) {
    const double* a = &alpha[static_cast<std::size_t>(t) * kStates];
    double* an = &alpha[static_cast<std::size_t>(t + 1) * kStates];
    for (int s = 0; s < kStates; ++s) {
      if (a[s] == kNegInf) continue;
      for (int u = 0; u < 2; ++u) {
        const int ns = tr.next[s][u];
        an[ns] = std::max(an[ns], a[s] + gamma(t, u, tr.parity[s][u]));
      }
    }
    const double norm = *std::max_element(an, an + kStates);
    for (int s = 0; s < kStates; ++s) an[s] -= norm;
  }
  beta[static_cast<std::size_t>(steps) * kStates] = 0.0;
  for (int t = steps - 1; t >= 0; --t) {
    const double* bn = &beta[static_cast<std::size_t>(t + 1) * kStates];
    double* b = &beta[static_cast<std::size_t>(t) * kStates];
    for (int s = 0; s < kStates; ++s)
      for (int u = 0; u < 2; ++u) {
        const int ns = tr.next[s][u];
        if (bn[ns] == kNegInf) continue;
        b[s] = std::max(b[s], bn[ns] + gamma(t, u, tr.parity[s][u]));
      }
    const double norm = *std::max_element(b, b + kStates);
    for (int s = 0; s < kStates; ++s) b[s] -= norm;
  }
  for (int t = 0; t < n; ++t) {
    double best[2] = {kNegInf, kNegInf};
    const double* a = &alpha[static_cast<std::size_t>(t) * kStates];
    const double* bn = &beta[static_cast<std::size_t>(t + 1) * kStates];
    for (int s = 0; s < kStates; ++s) {
      if (a[s] == kNegInf) continue;
      for (int u = 0; u < 2; ++u) {
        const int ns = tr.next[s][u];
        if (bn[ns] == kNegInf) continue;
        best[u] = std::max(best[u], a[s] + gamma(t, u, tr.parity[s][u]) + bn[ns]);
      }
    }
    const double llr = sat(best[0] - best[1]);
    posterior[t] = llr;
    extrinsic[t] = sat(cfg_.extrinsic_scale * (llr - sys[t] - apriori[t]));
  }
}

TurboDecodeResult TurboCodec::decode(std::span<const double> llrs) const {
  const int n = cfg_.info_len;
  if (static_cast<int>(llrs.size()) != coded_len())
    throw UsageError("turbo decoder expects " + std::to_string(coded_len()) + " LLRs, got " +
                     std::to_string(llrs.size()));
  std::vector<double> sys(n), par1(n), par2(n), sys_pi(n);
  for (int i = 0; i < n; ++i) {
    sys[i] = sat(llrs[3 * i]);
    par1[i] = sat(llrs[3 * i + 1]);
    par2[i] = sat(llrs[3 * i + 2]);
  }
  for (int i = 0; i < n; ++i) sys_pi[i] = sys[cfg_.interleaver[i]];
  double t1s[kTail], t1p[kTail], t2s[kTail], t2p[kTail];
  const std::size_t base = static_cast<std::size_t>(3) * n;
  for (int t = 0; t < kTail; ++t) {
    t1s[t] = sat(llrs[base + 2 * t]);
    t1p[t] = sat(llrs[base + 2 * t + 1]);
    t2s[t] = sat(llrs[base + 2 * kTail + 2 * t]);
    t2p[t] = sat(llrs[base + 2 * kTail + 2 * t + 1]);
  }

  std::vector<double> apriori1(n, 0.0), ext1(n), post1(n);
  std::vector<double> apriori2(n), ext2(n), post2(n);
  for (int it = 0; it < cfg_.iterations; ++it) {
    siso(sys, par1, apriori1, t1s, t1p, ext1, post1);
    for (int i = 0; i < n; ++i) apriori2[i] = ext1[cfg_.interleaver[i]];
    siso(sys_pi, par2, apriori2, t2s, t2p, ext2, post2);
    for (int i = 0; i < n; ++i) apriori1[cfg_.interleaver[i]] = ext2[i];
  }

  TurboDecodeResult res;
  res.llrs.resize(n);
  res.bits.resize(n);
  for (int i = 0; i < n; ++i) res.llrs[cfg_.interleaver[i]] = post2[i];
  for (int i = 0; i < n; ++i) res.bits[i] = res.llrs[i] < 0.0 ? 1 : 0;
  return res;
}

std::vector<std::uint8_t> turbo_encode(std::span<const std::uint8_t> bits, const TurboCodec& codec) {
  return codec.encode(bits);
}

TurboDecodeResult turbo_decode(std::span<const double> llrs, const TurboCodec& codec) {
  return codec.decode(llrs);
}

std::vector<std::uint8_t> block_interleave(std::span<const std::uint8_t> bits, const BlockInterleaver& il) {
  return il.interleave(bits);
}

std::vector<double> block_deinterleave(std::span<const double> values, const BlockInterleaver& il) {
  return il.deinterleave(values);
}

}  // namespace mmd
