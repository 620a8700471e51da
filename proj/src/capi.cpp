#include "mmd/mmd.h"

#include <cstring>
#include <new>
#include <sstream>
#include <string>

#include "mmd/baselines.hpp"
#include "mmd/error.hpp"
#include "mmd/experiment.hpp"

struct mmd_config {
  mmd::ConfigMap map;
};

namespace {

thread_local std::string g_last_error;

mmd_status fail(mmd_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

template <typename Fn>
mmd_status guarded(Fn&& fn) {
  try {
    g_last_error.clear();
    fn();
    return MMD_OK;
  } catch (const mmd::Error& e) {
    switch (e.kind()) {
      case mmd::ErrorKind::Usage: return fail(MMD_ERR_USAGE, e.what());
      case mmd::ErrorKind::Config: return fail(MMD_ERR_CONFIG, e.what());
      case mmd::ErrorKind::Numeric: return fail(MMD_ERR_NUMERIC, e.what());
      case mmd::ErrorKind::Io: return fail(MMD_ERR_IO, e.what());
    }
    return fail(MMD_ERR_INTERNAL, e.what());
  } catch (const std::bad_alloc&) {
    return fail(MMD_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(MMD_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(MMD_ERR_INTERNAL, "unknown failure");
  }
}

}  // namespace

extern "C" {

const char* mmd_version(void) { return "0.1.0"; }

const char* mmd_last_error(void) { return g_last_error.c_str(); }

mmd_status mmd_config_create(mmd_config** out) {
  if (!out) return fail(MMD_ERR_USAGE, "null output handle");
  return guarded([&] { *out = new mmd_config(); });
}

void mmd_config_destroy(mmd_config* cfg) { delete cfg; }

mmd_status mmd_config_load(mmd_config* cfg, const char* path) {
  if (!cfg || !path) return fail(MMD_ERR_USAGE, "null argument");
  return guarded([&] {
    const mmd::ConfigMap loaded = mmd::ConfigMap::load_file(path);
    for (const auto& [k, v] : loaded.entries()) cfg->map.set(k, v);
  });
}

mmd_status mmd_config_set(mmd_config* cfg, const char* key, const char* value) {
  if (!cfg || !key || !value) return fail(MMD_ERR_USAGE, "null argument");
  return guarded([&] { cfg->map.set(key, value); });
}

mmd_status mmd_config_get(const mmd_config* cfg, const char* key, char* buf, size_t len, size_t* needed) {
  if (!cfg || !key) return fail(MMD_ERR_USAGE, "null argument");
  if (!cfg->map.has(key)) return fail(MMD_ERR_CONFIG, std::string("key '") + key + "' is not set");
  const std::string v = cfg->map.get(key, "");
  if (needed) *needed = v.size() + 1;
  if (!buf || len < v.size() + 1) return fail(MMD_ERR_USAGE, "buffer too small");
  std::memcpy(buf, v.c_str(), v.size() + 1);
  g_last_error.clear();
  return MMD_OK;
}

mmd_status mmd_simulate(const mmd_config* cfg, const char* out_path) {
  if (!cfg) return fail(MMD_ERR_USAGE, "null config");
  return guarded([&] {
    const mmd::ExperimentSpec spec = mmd::ExperimentSpec::from_config(cfg->map);
    mmd::run_sweep_to_file(spec, out_path ? out_path : "-");
  });
}

mmd_status mmd_state_evolution(const mmd_config* cfg, const char* out_path) {
  if (!cfg) return fail(MMD_ERR_USAGE, "null config");
  return guarded([&] {
    mmd::SeConfig base = mmd::se_config_from(cfg->map);
    std::vector<double> snrs{base.sys.snr_db};
    if (cfg->map.get("sweep.axis", "snr_db") == "snr_db" && cfg->map.has("sweep.values"))
      snrs = cfg->map.get_doubles("sweep.values");
    std::vector<std::pair<mmd::SeConfig, mmd::SeTrace>> runs;
    for (double snr : snrs) {
      mmd::SeConfig c = base;
      c.sys.snr_db = snr;
      runs.emplace_back(c, mmd::se_iterate(c));
    }
    mmd::with_output(out_path ? out_path : "-", [&](std::ostream& out) {
      for (std::size_t i = 0; i < runs.size(); ++i) {
        std::ostringstream block;
        mmd::write_se_csv(block, runs[i].first, runs[i].second);
        std::string text = block.str();
        if (i > 0) {
          // Later blocks contribute data rows only.
          std::istringstream in(text);
          std::string line;
          while (std::getline(in, line))
            if (!line.empty() && line[0] != '#' && line.rfind("kind,", 0) != 0) out << line << "\n";
        } else {
          out << text;
        }
      }
    });
  });
}

mmd_status mmd_track_csi(const mmd_config* cfg, const char* out_path) {
  if (!cfg) return fail(MMD_ERR_USAGE, "null config");
  return guarded([&] {
    const mmd::TrackingConfig tc = mmd::tracking_config_from(cfg->map);
    const int seeds = cfg->map.get_int("track.seeds", 1);
    if (seeds < 1) throw mmd::ConfigError("track.seeds must be at least 1");
    std::vector<mmd::TrackingResult> runs;
    for (int i = 0; i < seeds; ++i)
      runs.push_back(mmd::run_multiframe_tracking(tc, mmd::derive_key(tc.sys.seed, {static_cast<std::uint64_t>(i)})));
    mmd::with_output(out_path ? out_path : "-", [&](std::ostream& out) { mmd::write_tracking_csv(out, tc, runs); });
  });
}

mmd_status mmd_complexity(const mmd_config* cfg, const char* algorithm, double* out) {
  if (!cfg || !algorithm || !out) return fail(MMD_ERR_USAGE, "null argument");
  return guarded([&] {
    const mmd::SystemConfig sys = mmd::system_config_from(cfg->map);
    *out = mmd::complexity_count(sys, algorithm);
  });
}

}  // extern "C"
