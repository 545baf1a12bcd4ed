#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "epfrac/material.hpp"

namespace epfrac {

/// Flat key-value configuration ("section.key = value" lines, '#' comments).
/// Keys are kept sorted so that parse(print(c)) == c.
struct Config {
  std::map<std::string, std::string> kv;

  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  }

  static Config parse(std::istream& is) {
    Config c;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      line = trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      require(eq != std::string::npos, "config: missing '=' on line " + std::to_string(lineno));
      const std::string key = trim(line.substr(0, eq));
      const std::string val = trim(line.substr(eq + 1));
      require(!key.empty(), "config: empty key on line " + std::to_string(lineno));
      c.kv[key] = val;
    }
    return c;
  }

  static Config parse_string(const std::string& text) {
    std::istringstream is(text);
    return parse(is);
  }

  static Config parse_file(const std::string& path) {
    std::ifstream is(path);
    require(is.good(), "config: cannot open " + path);
    return parse(is);
  }

  std::string print() const {
    std::ostringstream os;
    for (const auto& [k, v] : kv) os << k << " = " << v << "\n";
    return os.str();
  }

  bool operator==(const Config& o) const { return kv == o.kv; }

  bool has(const std::string& key) const { return kv.count(key) > 0; }

  void set(const std::string& key, const std::string& val) { kv[key] = val; }
  void set(const std::string& key, double val) {
    std::ostringstream os;
    os.precision(17);
    os << val;
    kv[key] = os.str();
  }
  void set(const std::string& key, int val) { kv[key] = std::to_string(val); }

  std::string get_str(const std::string& key) const {
    auto it = kv.find(key);
    require(it != kv.end(), "config: missing key '" + key + "'");
    return it->second;
  }
  std::string get_str(const std::string& key, const std::string& dflt) const {
    auto it = kv.find(key);
    return it == kv.end() ? dflt : it->second;
  }
  double get_double(const std::string& key) const { return to_double(key, get_str(key)); }
  double get_double(const std::string& key, double dflt) const {
    auto it = kv.find(key);
    return it == kv.end() ? dflt : to_double(key, it->second);
  }
  int get_int(const std::string& key, int dflt) const {
    auto it = kv.find(key);
    if (it == kv.end()) return dflt;
    return static_cast<int>(std::lround(to_double(key, it->second)));
  }
  bool get_bool(const std::string& key, bool dflt) const {
    auto it = kv.find(key);
    if (it == kv.end()) return dflt;
    const std::string& v = it->second;
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw std::invalid_argument("config: key '" + key + "' is not a boolean: " + v);
  }

  PlanarMode get_mode(const std::string& key, PlanarMode dflt) const {
    auto it = kv.find(key);
    if (it == kv.end()) return dflt;
    if (it->second == "plane-stress") return PlanarMode::plane_stress;
    if (it->second == "plane-strain") return PlanarMode::plane_strain;
    throw std::invalid_argument("config: key '" + key + "' must be plane-stress or plane-strain");
  }

 private:
  static double to_double(const std::string& key, const std::string& v) {
    try {
      size_t pos = 0;
      const double x = std::stod(v, &pos);
      require(pos == v.size(), "trailing characters");
      return x;
    } catch (const std::exception&) {
      throw std::invalid_argument("config: key '" + key + "' is not a number: " + v);
    }
  }
};

/// Material block with non-dimensionalization applied at ingestion: inputs
/// may be dimensional, divided through by the moduli/length scales E0, L0
/// (energies scale with E0*L0, stresses with E0).
inline MaterialParams material_from_config(const Config& c) {
  const double E0 = c.get_double("scale.E0", 1.0);
  const double L0 = c.get_double("scale.L0", 1.0);
  require(E0 > 0.0 && L0 > 0.0, "config: scale.E0 and scale.L0 must be positive");
  MaterialParams m;
  m.E = c.get_double("material.E", 1.0) / E0;
  m.nu = c.get_double("material.nu", 0.2);
  m.Gc = c.get_double("material.Gc", 1.0) / (E0 * L0);
  m.ell = c.get_double("material.ell", 0.25) / L0;
  m.sigma0 = c.get_double("material.sigma0", 0.5) / E0;
  m.eta = c.get_double("material.eta", 1e-6);
  m.mode = c.get_mode("material.mode", PlanarMode::plane_strain);
  if (c.get_bool("material.elastic", false)) m.sigma0 = 1e30;  // plasticity disabled
  m.validate();
  return m;
}

}  // namespace epfrac
