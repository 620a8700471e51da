#include <cmath>

#include "doctest.h"
#include "mmd/metrics.hpp"

using namespace mmd;

TEST_CASE("activity error counting") {
  const ActivityVector truth{1, 0, 1, 0, 0};
  const ErrorCounts e = count_activity_errors(truth, {0, 3});
  CHECK(e.missed == 1);
  CHECK(e.false_alarms == 1);
  CHECK(e.ader() == doctest::Approx(0.4));
  CHECK(std::isnan(ErrorCounts{}.ser()));
}

TEST_CASE("symbol and bit errors of a hand-built frame") {
  SystemConfig cfg;
  cfg.k = 3;
  cfg.ka = 2;
  cfg.j = 2;
  const Constellation c = make_constellation(4);
  std::vector<Bits> payloads(3);
  payloads[0] = {0, 0, 0, 0, 1, 1, 1, 1};
  payloads[2] = {0, 1, 1, 0, 1, 0, 0, 1};
  const MediaFrame f = build_frame(cfg, {1, 0, 1}, c, payloads);

  // Device 0 right in slot 0; in slot 1 wrong pattern (one spatial bit) and
  // a QAM point one bit off. Device 2 missed.
  std::vector<int> map(6, 0);
  CMat x = CMat::Zero(12, 2);
  const MediaSymbol& s0 = *f.symbol(0, 0);
  const MediaSymbol& s1 = *f.symbol(0, 1);
  map[0] = s0.map_index;
  x(s0.map_index, 0) = s0.qam_point;
  map[1] = s1.map_index ^ 1;
  const int qam_wrong = c.index_of_label(c.labels[s1.qam_index] ^ 1u);
  x(map[1], 1) = c.points[qam_wrong];
  const ErrorCounts e = count_detection_errors(f, {0}, map, x, c, cfg.nrf);
  CHECK(e.missed == 1);
  CHECK(e.false_alarms == 0);
  CHECK(e.symbols == 4);
  CHECK(e.symbol_errors == 2 + 1);
  CHECK(e.bits == 16);
  CHECK(e.bit_errors == 8 + 2);
}

TEST_CASE("accumulation sums tallies") {
  ErrorCounts a, b;
  a.frames = 1;
  a.bits = 10;
  a.bit_errors = 1;
  b.frames = 2;
  b.bits = 30;
  b.bit_errors = 3;
  a += b;
  CHECK(a.frames == 3);
  CHECK(a.ber() == doctest::Approx(0.1));
}

TEST_CASE("rate arithmetic examples") {
  ErrorCounts e;
  e.devices = 500;
  e.missed = 2;
  e.false_alarms = 3;
  CHECK(e.ader() == doctest::Approx(0.01));
  ErrorCounts s;
  s.symbols = 12 * 50;
  s.symbol_errors = 12;
  CHECK(s.ser() == doctest::Approx(0.02));
}

TEST_CASE("forced inactive decisions give ADER = Ka/K") {
  ActivityVector truth(10, 0);
  truth[1] = truth[4] = truth[7] = 1;
  CHECK(count_activity_errors(truth, {}).ader() == doctest::Approx(0.3));
}
