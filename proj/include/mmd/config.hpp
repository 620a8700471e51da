#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mmd/sysmodel.hpp"

namespace mmd {

/// Plain-text key/value configuration. Accepted line forms:
///   key = value
///   # cfg: key = value     (metadata lines of a results CSV)
/// Other lines starting with '#' and blank lines are ignored. Text holding any
/// "# cfg:" line is a results file and its CSV rows are skipped. Unknown keys
/// are rejected so typos surface as configuration errors.
class ConfigMap {
 public:
  static ConfigMap parse(const std::string& text, const std::string& origin = "<string>");
  static ConfigMap load_file(const std::string& path);

  static bool is_known_key(const std::string& key);
  static const std::vector<std::string>& known_keys();

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  void erase(const std::string& key) { entries_.erase(key); }

  std::string get(const std::string& key, const std::string& fallback) const;
  int get_int(const std::string& key, int fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  /// Comma-separated numbers; "a:b:step" expands to an inclusive range.
  std::vector<double> get_doubles(const std::string& key) const;
  std::vector<std::string> get_strings(const std::string& key) const;

  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  std::map<std::string, std::string> entries_;
};

/// Scenario from keys k, ka, nt (or nrf), m, nr, j, snr_db, seed, t0.
SystemConfig system_config_from(const ConfigMap& cfg, SystemConfig base = {});

/// Writes the scenario keys back into a map.
void store_system_config(const SystemConfig& sys, ConfigMap& cfg);

std::string format_double(double v);

}  // namespace mmd
