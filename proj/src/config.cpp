#include "mmd/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "mmd/error.hpp"

namespace mmd {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  errno = 0;
  char* end = nullptr;
  const double d = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE)
    throw ConfigError("key '" + key + "': '" + v + "' is not a number");
  return d;
}

int log2_int(int v) {
  int b = 0;
  while ((1 << b) < v) ++b;
  return (1 << b) == v ? b : -1;
}

}  // namespace

const std::vector<std::string>& ConfigMap::known_keys() {
  static const std::vector<std::string> keys = {
      "k", "ka", "nt", "nrf", "m", "nr", "j", "snr_db", "seed", "t0", "alpha", "frames", "damping",
      "algo", "paired", "sweep.axis", "sweep.values",
      "fec.iters", "fec.scale",
      "coded.enabled", "coded.interleave", "coded.sic", "coded.judge", "coded.ls", "coded.ld", "coded.nbar",
      "se.n_mc", "se.t_se", "se.epsilon", "se.gamma",
      "track.seeds", "track.signal_nmse"};
  return keys;
}

bool ConfigMap::is_known_key(const std::string& key) {
  const auto& k = known_keys();
  return std::find(k.begin(), k.end(), key) != k.end();
}

ConfigMap ConfigMap::parse(const std::string& text, const std::string& origin) {
  ConfigMap cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  // In a results file the CSV rows carry no '=' and are skipped.
  const bool results_file = text.find("# cfg:") != std::string::npos;
  while (std::getline(in, line)) {
    ++lineno;
    std::string s = trim(line);
    if (s.empty()) continue;
    if (results_file && s[0] != '#' && s.find('=') == std::string::npos) continue;
    if (s[0] == '#') {
      const std::string body = trim(s.substr(1));
      if (body.rfind("cfg:", 0) != 0) continue;
      s = trim(body.substr(4));
    } else {
      const auto hash = s.find('#');
      if (hash != std::string::npos) s = trim(s.substr(0, hash));
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    cfg.set(trim(s.substr(0, eq)), trim(s.substr(eq + 1)));
  }
  return cfg;
}

ConfigMap ConfigMap::load_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse(buf.str(), path);
}

void ConfigMap::set(const std::string& key, const std::string& value) {
  if (!is_known_key(key)) throw ConfigError("unknown configuration key '" + key + "'");
  entries_[key] = value;
}

std::string ConfigMap::get(const std::string& key, const std::string& fallback) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second;
}

int ConfigMap::get_int(const std::string& key, int fallback) const {
  if (!has(key)) return fallback;
  const double d = to_double(key, get(key, ""));
  if (d != std::floor(d) || std::abs(d) > 2e9) throw ConfigError("key '" + key + "' must be an integer");
  return static_cast<int>(d);
}

double ConfigMap::get_double(const std::string& key, double fallback) const {
  return has(key) ? to_double(key, get(key, "")) : fallback;
}

std::uint64_t ConfigMap::get_u64(const std::string& key, std::uint64_t fallback) const {
  if (!has(key)) return fallback;
  const std::string v = get(key, "");
  errno = 0;
  char* end = nullptr;
  const unsigned long long x = std::strtoull(v.c_str(), &end, 0);
  if (v.empty() || v[0] == '-' || end != v.c_str() + v.size() || errno == ERANGE)
    throw ConfigError("key '" + key + "' must be a non-negative integer");
  return x;
}

bool ConfigMap::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  std::string v = get(key, "");
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw ConfigError("key '" + key + "' must be a boolean");
}

std::vector<double> ConfigMap::get_doubles(const std::string& key) const {
  std::vector<double> out;
  for (const std::string& item : split(get(key, ""), ',')) {
    const auto parts = split(item, ':');
    if (parts.size() == 3) {
      const double a = to_double(key, parts[0]), b = to_double(key, parts[1]), step = to_double(key, parts[2]);
      if (!(step > 0.0) || b < a) throw ConfigError("key '" + key + "': bad range '" + item + "'");
      const int n = static_cast<int>(std::floor((b - a) / step + 1e-9));
      for (int i = 0; i <= n; ++i) out.push_back(a + i * step);
    } else if (parts.size() == 1) {
      out.push_back(to_double(key, parts[0]));
    } else {
      throw ConfigError("key '" + key + "': bad list item '" + item + "'");
    }
  }
  return out;
}

std::vector<std::string> ConfigMap::get_strings(const std::string& key) const { return split(get(key, ""), ','); }

SystemConfig system_config_from(const ConfigMap& cfg, SystemConfig s) {
  s.k = cfg.get_int("k", s.k);
  s.ka = cfg.get_int("ka", s.ka);
  if (cfg.has("nt")) {
    const int nrf = log2_int(cfg.get_int("nt", s.nt()));
    if (nrf < 0) throw ConfigError("nt must be a power of two");
    if (cfg.has("nrf") && cfg.get_int("nrf", nrf) != nrf) throw ConfigError("nt and nrf disagree");
    s.nrf = nrf;
  } else {
    s.nrf = cfg.get_int("nrf", s.nrf);
  }
  s.m = cfg.get_int("m", s.m);
  s.nr = cfg.get_int("nr", s.nr);
  s.j = cfg.get_int("j", s.j);
  s.snr_db = cfg.get_double("snr_db", s.snr_db);
  s.seed = cfg.get_u64("seed", s.seed);
  s.t0 = cfg.get_int("t0", s.t0);
  s.validate();
  return s;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

void store_system_config(const SystemConfig& sys, ConfigMap& cfg) {
  cfg.set("k", std::to_string(sys.k));
  cfg.set("ka", std::to_string(sys.ka));
  cfg.set("nt", std::to_string(sys.nt()));
  cfg.set("m", std::to_string(sys.m));
  cfg.set("nr", std::to_string(sys.nr));
  cfg.set("j", std::to_string(sys.j));
  cfg.set("snr_db", format_double(sys.snr_db));
  cfg.set("seed", std::to_string(sys.seed));
  cfg.set("t0", std::to_string(sys.t0));
}

}  // namespace mmd
