#include <bit>
#include <cmath>

#include "doctest.h"
#include "mmd/error.hpp"
#include "mmd/sysmodel.hpp"

using namespace mmd;

TEST_CASE("constellations have unit energy and Gray labels") {
  for (int m : {4, 16, 64}) {
    const Constellation c = make_constellation(m);
    CHECK(c.order() == m);
    CHECK(c.mean_energy() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(c.sum()) < 1e-12);
    // Nearest neighbours differ in exactly one bit.
    double dmin = 1e9;
    for (int a = 0; a < m; ++a)
      for (int b = a + 1; b < m; ++b) dmin = std::min(dmin, std::abs(c.points[a] - c.points[b]));
    for (int a = 0; a < m; ++a)
      for (int b = a + 1; b < m; ++b)
        if (std::abs(std::abs(c.points[a] - c.points[b]) - dmin) < 1e-9)
          CHECK(std::popcount(c.labels[a] ^ c.labels[b]) == 1);
  }
  CHECK_THROWS_AS(make_constellation(8), ConfigError);
}

TEST_CASE("nearest-point demodulation matches exhaustive search") {
  const Constellation c = make_constellation(16);
  Rng rng(7);
  for (int t = 0; t < 2000; ++t) {
    const cd r = rng.complex_normal(2.0);
    int best = 0;
    for (int s = 1; s < c.order(); ++s)
      if (std::abs(r - c.points[s]) < std::abs(r - c.points[best])) best = s;
    CHECK(c.nearest(r) == best);
  }
}

TEST_CASE("activity draws have exactly Ka ones") {
  SystemConfig cfg;
  Rng rng(3);
  for (int t = 0; t < 20; ++t) {
    const ActivityVector a = draw_activity(cfg, rng);
    int n = 0;
    for (auto v : a) n += v;
    CHECK(n == cfg.ka);
  }
}

TEST_CASE("media frames are one-hot per active device-slot") {
  SystemConfig cfg;
  cfg.k = 20;
  cfg.ka = 5;
  cfg.j = 6;
  const Constellation c = make_constellation(cfg.m);
  Rng rng(11);
  const ActivityVector act = draw_activity(cfg, rng);
  const MediaFrame f = build_frame(cfg, act, c, rng);
  CHECK(f.x.rows() == cfg.columns());
  for (int k = 0; k < cfg.k; ++k)
    for (int j = 0; j < cfg.j; ++j) {
      int nz = 0;
      for (int i = 0; i < cfg.nt(); ++i) nz += std::abs(f.x(k * cfg.nt() + i, j)) > 0.0;
      CHECK(nz == (act[k] ? 1 : 0));
      if (act[k]) {
        const MediaSymbol& s = *f.symbol(k, j);
        CHECK(f.x(k * cfg.nt() + s.map_index, j) == s.qam_point);
        // Bits round-trip through the symbol.
        const Bits& src = f.source_bits[k];
        int idx = 0;
        for (int b = 0; b < cfg.nrf; ++b) idx = 2 * idx + src[j * cfg.eta() + b];
        CHECK(idx == s.map_index);
      }
    }
}

TEST_CASE("modulate_group splits spatial and QAM bits") {
  const Constellation c = make_constellation(4);
  const Bits g{1, 0, 1, 1};
  const MediaSymbol s = modulate_group(g, 2, c);
  CHECK(s.map_index == 2);
  CHECK(c.labels[s.qam_index] == 3u);
  const Eigen::VectorXcd v = s.vector(4);
  CHECK(v(2) == s.qam_point);
  CHECK(std::abs(v(0)) == 0.0);
}

TEST_CASE("SNR convention and noise statistics") {
  SystemConfig cfg;
  cfg.ka = 50;
  cfg.snr_db = 10.0;
  CHECK(snr_to_noise_variance(cfg) == doctest::Approx(5.0));
  Rng rng(5);
  const CMat h = CMat::Zero(64, 4);
  const CMat y = transmit(h, CMat::Zero(4, 500), 2.0, rng);
  CHECK(y.squaredNorm() / y.size() == doctest::Approx(2.0).epsilon(0.03));
}

TEST_CASE("channel aging endpoints") {
  SystemConfig cfg;
  cfg.k = 10;
  cfg.nr = 8;
  Rng rng(1);
  const ChannelMatrix h = draw_rayleigh_channel(cfg, rng);
  Rng r2(2);
  const ChannelMatrix same = evolve_channel_ar(h, 1.0, r2);
  CHECK((same.h - h.h).norm() < 1e-12);
  CHECK_THROWS_AS(evolve_channel_ar(h, 1.5, r2), ConfigError);
  const ArChannelConfig m = ArChannelConfig::from_mobility(2e9, 1e6, 30.0);
  CHECK(m.tau >= 1);
  CHECK(std::pow(m.alpha, m.tau / 2.0) == doctest::Approx(0.5));
}

TEST_CASE("substreams are order independent") {
  Rng a = Rng::substream(9, {stream::noise, 3});
  Rng b = Rng::substream(9, {stream::channel, 3});
  Rng a2 = Rng::substream(9, {stream::noise, 3});
  const auto x = a.next();
  b.next();
  CHECK(a2.next() == x);
  CHECK(derive_key(1, {2, 3}) != derive_key(1, {3, 2}));
}

TEST_CASE("invalid scenarios are rejected") {
  SystemConfig cfg;
  cfg.ka = cfg.k + 1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.m = 8;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("degenerate activity draws") {
  SystemConfig cfg;
  cfg.k = 12;
  cfg.ka = 0;
  Rng rng(1);
  for (auto v : draw_activity(cfg, rng)) CHECK(v == 0);
  cfg.ka = 12;
  for (auto v : draw_activity(cfg, rng)) CHECK(v == 1);
}

TEST_CASE("Rayleigh entries have unit variance and are reproducible") {
  SystemConfig cfg;
  Rng a(44), b(44);
  const ChannelMatrix h = draw_rayleigh_channel(cfg, a);
  CHECK(h.h.rows() == 256);
  CHECK(h.h.cols() == 2000);
  const ChannelMatrix h2 = draw_rayleigh_channel(cfg, a);
  const double var = (h.h.squaredNorm() + h2.h.squaredNorm()) / (2.0 * h.h.size());
  CHECK(var == doctest::Approx(1.0).epsilon(0.01));
  CHECK((draw_rayleigh_channel(cfg, b).h - h.h).norm() == 0.0);
}

TEST_CASE("AR aging decorrelates by one half over the coherence lag") {
  SystemConfig cfg;
  cfg.k = 250;
  cfg.nr = 32;
  cfg.nrf = 2;
  Rng rng(5);
  const ChannelMatrix h0 = draw_rayleigh_channel(cfg, rng);
  ChannelMatrix h = h0;
  for (int t = 0; t < 213; ++t) h = evolve_channel_ar(h, 0.9935, rng);
  const double corr = (h0.h.adjoint() * h.h).trace().real() / (h0.h.norm() * h.h.norm());
  // Per-step correlation sqrt(alpha): 0.9935^(213/2) ~ 0.5.
  CHECK(corr == doctest::Approx(0.5).epsilon(0.1));
  // alpha = 0 draws a fresh channel.
  const ChannelMatrix fresh = evolve_channel_ar(h0, 0.0, rng);
  CHECK(std::abs((h0.h.adjoint() * fresh.h).trace().real()) / (h0.h.norm() * fresh.h.norm()) < 0.05);
}

TEST_CASE("noiseless transmission is exact") {
  SystemConfig cfg;
  cfg.k = 5;
  cfg.ka = 2;
  cfg.nr = 4;
  cfg.j = 3;
  Rng rng(6);
  const Constellation c = make_constellation(4);
  const MediaFrame f = build_frame(cfg, draw_activity(cfg, rng), c, rng);
  const ChannelMatrix h = draw_rayleigh_channel(cfg, rng);
  CHECK((transmit(h.h, f.x, 0.0, rng) - h.h * f.x).norm() == 0.0);
  cfg.ka = 0;
  const MediaFrame empty = build_frame(cfg, ActivityVector(cfg.k, 0), c, rng);
  CHECK(empty.x.isZero());
}

TEST_CASE("BPSK media symbols with two patterns") {
  const Constellation bpsk = Constellation::from_points({cd(1, 0), cd(-1, 0)}, {0u, 1u}, 1);
  const MediaSymbol a = modulate_symbol(Bits{0}, Bits{0}, bpsk);
  CHECK(a.vector(2)(0) == cd(1, 0));
  CHECK(a.vector(2)(1) == cd(0, 0));
  const MediaSymbol b = modulate_symbol(Bits{1}, Bits{1}, bpsk);
  CHECK(b.vector(2)(1) == cd(-1, 0));
  CHECK(b.vector(2).norm() == doctest::Approx(1.0));
}
