#include <sstream>

#include "doctest.h"
#include "mmd/config.hpp"
#include "mmd/error.hpp"
#include "mmd/experiment.hpp"

using namespace mmd;

TEST_CASE("config text parsing") {
  const ConfigMap m = ConfigMap::parse("# comment\nk = 100\n\n# cfg: snr_db = 3.5\nsweep.values = 0:2:1\nalgo = dsamp, amp\n");
  CHECK(m.get_int("k", 0) == 100);
  CHECK(m.get_double("snr_db", 0) == 3.5);
  CHECK(m.get_doubles("sweep.values") == std::vector<double>{0, 1, 2});
  CHECK(m.get_strings("algo") == std::vector<std::string>{"dsamp", "amp"});
  CHECK_THROWS_AS(ConfigMap::parse("bogus = 1"), ConfigError);
  CHECK_THROWS_AS(ConfigMap::parse("k 5"), ConfigError);
  CHECK_THROWS_AS(m.get_int("snr_db", 0), ConfigError);
  CHECK_THROWS_AS(ConfigMap::load_file("/nonexistent/cfg.txt"), IoError);
}

TEST_CASE("experiment spec survives a CSV round trip") {
  ConfigMap m;
  m.set("k", "200");
  m.set("ka", "20");
  m.set("nr", "64");
  m.set("sweep.axis", "j");
  m.set("sweep.values", "2,4");
  m.set("algo", "dsamp,amp");
  m.set("frames", "2");
  m.set("seed", "77");
  const ExperimentSpec spec = ExperimentSpec::from_config(m);
  std::ostringstream out;
  write_sweep_csv(out, spec, {});
  const ExperimentSpec again = ExperimentSpec::from_config(ConfigMap::parse(out.str()));
  CHECK(again.to_config().entries() == spec.to_config().entries());
  CHECK(again.sys.seed == 77u);
  CHECK(again.values == std::vector<double>{2, 4});
}

TEST_CASE("sweep rows are reproducible from the seed") {
  ConfigMap m = ConfigMap::parse("k = 40\nka = 4\nnr = 32\nj = 4\nframes = 2\nalgo = dsamp,lmmse\nsweep.values = 10\n");
  const ExperimentSpec spec = ExperimentSpec::from_config(m);
  const auto a = run_sweep(spec);
  const auto b = run_sweep(spec);
  REQUIRE(a.size() == 2u);
  CHECK(a[0].counts.bit_errors == b[0].counts.bit_errors);
  CHECK(a[1].counts.symbol_errors == b[1].counts.symbol_errors);
  CHECK(a[0].counts.frames == 2);
}

TEST_CASE("invalid specs are rejected") {
  CHECK_THROWS_AS(ExperimentSpec::from_config(ConfigMap::parse("algo = magic\n")), Error);
  CHECK_THROWS_AS(ExperimentSpec::from_config(ConfigMap::parse("sweep.axis = colour\n")), Error);
  CHECK_THROWS_AS(ExperimentSpec::from_config(ConfigMap::parse("frames = 0\n")), ConfigError);
}

TEST_CASE("sweep row count and empty algorithm list") {
  ExperimentSpec spec = ExperimentSpec::from_config(
      ConfigMap::parse("k = 20\nka = 2\nnr = 16\nj = 2\nframes = 1\nalgo = dsamp,amp\nsweep.values = 0:8:1\n"));
  CHECK(run_sweep(spec).size() == 18u);
  CHECK_THROWS_AS(ExperimentSpec::from_config(ConfigMap::parse("algo = \n")), UsageError);
}
