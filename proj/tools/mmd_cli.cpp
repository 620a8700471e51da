// Command-line front end over the C interface.
#include <cmath>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mmd/mmd.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

int exit_code(mmd_status s) {
  if (s == MMD_OK) return kExitOk;
  return (s == MMD_ERR_USAGE || s == MMD_ERR_CONFIG) ? kExitUsage : kExitRuntime;
}

int report(mmd_status s) {
  if (s != MMD_OK) std::fprintf(stderr, "mmd: error: %s\n", mmd_last_error());
  return exit_code(s);
}

/// "2.32e8" style: three significant digits, bare exponent.
std::string short_sci(double v) {
  if (v == 0.0) return "0";
  const int e = static_cast<int>(std::floor(std::log10(std::abs(v))));
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2fe%d", v / std::pow(10.0, e), e);
  return buf;
}

struct Common {
  std::string config;
  std::string out = "-";
  std::string algo;
  std::vector<std::string> sets;
  std::map<std::string, std::string> overrides;
};

void add_common(CLI::App* sub, Common& c, bool with_algo) {
  sub->add_option("--config", c.config, "key/value config file (a results CSV works too)");
  sub->add_option("--out", c.out, "output path, '-' for stdout");
  if (with_algo) sub->add_option("--algo", c.algo, "algorithm name or comma list");
  sub->add_option("--set", c.sets, "extra key=value override (repeatable)");
  static const std::vector<std::pair<std::string, std::string>> flags = {
      {"--seed", "seed"}, {"--k", "k"},         {"--ka", "ka"},       {"--nt", "nt"},     {"--m", "m"},
      {"--nr", "nr"},     {"--j", "j"},         {"--snr", "snr_db"},  {"--t0", "t0"},     {"--frames", "frames"},
      {"--alpha", "alpha"}, {"--axis", "sweep.axis"}, {"--values", "sweep.values"}};
  for (const auto& [flag, key] : flags) {
    const std::string k = key;
    sub->add_option_function<std::string>(flag, [&c, k](const std::string& v) { c.overrides[k] = v; },
                                          "override '" + key + "'");
  }
}

mmd_status build_config(const Common& c, mmd_config** out) {
  mmd_status s = mmd_config_create(out);
  if (s != MMD_OK) return s;
  if (!c.config.empty() && (s = mmd_config_load(*out, c.config.c_str())) != MMD_OK) return s;
  for (const auto& [k, v] : c.overrides)
    if ((s = mmd_config_set(*out, k.c_str(), v.c_str())) != MMD_OK) return s;
  for (const std::string& kv : c.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "mmd: --set expects key=value, got '%s'\n", kv.c_str());
      return MMD_ERR_USAGE;
    }
    if ((s = mmd_config_set(*out, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str())) != MMD_OK) return s;
  }
  return MMD_OK;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Media-modulation massive access simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(mmd_version()));

  Common sim, se, track, cx;
  CLI::App* simulate = app.add_subcommand("simulate", "Monte-Carlo sweep to CSV");
  add_common(simulate, sim, true);
  CLI::App* state_ev = app.add_subcommand("se", "state-evolution trace to CSV");
  add_common(state_ev, se, false);
  CLI::App* tracking = app.add_subcommand("track-csi", "multi-frame CSI tracking to CSV");
  add_common(tracking, track, false);
  int seeds = 0;
  tracking->add_option("--seeds", seeds, "independent tracking runs");
  CLI::App* complexity = app.add_subcommand("complexity", "complex multiplications per frame");
  add_common(complexity, cx, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  mmd_config* cfg = nullptr;
  mmd_status s = MMD_OK;
  if (simulate->parsed()) {
    if (!sim.algo.empty()) sim.overrides["algo"] = sim.algo;
    if ((s = build_config(sim, &cfg)) == MMD_OK) s = mmd_simulate(cfg, sim.out.c_str());
  } else if (state_ev->parsed()) {
    if ((s = build_config(se, &cfg)) == MMD_OK) s = mmd_state_evolution(cfg, se.out.c_str());
  } else if (tracking->parsed()) {
    if (seeds > 0) track.overrides["track.seeds"] = std::to_string(seeds);
    if ((s = build_config(track, &cfg)) == MMD_OK) s = mmd_track_csi(cfg, track.out.c_str());
  } else if (complexity->parsed()) {
    if ((s = build_config(cx, &cfg)) == MMD_OK) {
      const std::string algos = cx.algo.empty() ? "dsamp" : cx.algo;
      std::size_t start = 0;
      while (s == MMD_OK && start <= algos.size()) {
        const std::size_t comma = algos.find(',', start);
        const std::string a = algos.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        double v = 0.0;
        if ((s = mmd_complexity(cfg, a.c_str(), &v)) == MMD_OK) std::printf("%s %s (%.0f)\n", a.c_str(), short_sci(v).c_str(), v);
        if (comma == std::string::npos) break;
        start = comma + 1;
      }
    }
  }
  const int rc = report(s);
  mmd_config_destroy(cfg);
  return rc;
}
