#include "hafem/config.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace hafem {

namespace {

const std::array<const char*, 16> kKeys{
    "domain.kind",      "domain.cells_per_unit",
    "domain.outer",     "domain.holes",
    "domain.mesh_file", "afem.theta",
    "afem.max_dofs",    "afem.tol",
    "afem.gamma",       "afem.reference_extra_refines",
    "afem.basis_method", "afem.reference_method",
    "afem.max_levels",  "output.dir",
    "verify.fault",
    "verify.max_dofs"};

bool known_key(const std::string& key) {
  return std::any_of(kKeys.begin(), kKeys.end(), [&](const char* k) { return key == k; });
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw ConfigError("'" + key + "': expected a number, got '" + v + "'");
}

long to_long(const std::string& key, const std::string& v) {
  long out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec == std::errc() && ptr == v.data() + v.size()) return out;
  // Accept integral values written in floating-point form, e.g. 3e4.
  const double d = to_double(key, v);
  if (d != static_cast<double>(static_cast<long>(d))) throw ConfigError("'" + key + "': expected an integer");
  return static_cast<long>(d);
}

std::vector<Vec2> parse_ring(const std::string& key, const std::string& text) {
  std::vector<Vec2> ring;
  std::stringstream ss(text);
  std::string point;
  while (std::getline(ss, point, ',')) {
    std::istringstream ps(point);
    double x, y;
    std::string extra;
    if (!(ps >> x >> y) || (ps >> extra)) throw ConfigError("'" + key + "': bad point '" + trim(point) + "'");
    ring.emplace_back(x, y);
  }
  return ring;
}

std::string format_ring(const std::vector<Vec2>& ring) {
  std::ostringstream os;
  os << std::setprecision(17);
  for (std::size_t i = 0; i < ring.size(); ++i) os << (i ? ", " : "") << ring[i].x() << ' ' << ring[i].y();
  return os.str();
}

}  // namespace

Settings parse_settings(std::istream& is, const std::string& source) {
  Settings out;
  std::string line, section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(lineno) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section != "domain" && section != "afem" && section != "output" && section != "verify") {
        throw ConfigError(where + "unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(where + "empty key");
    if (key.find('.') == std::string::npos && !section.empty()) key = section + "." + key;
    if (!known_key(key)) throw ConfigError(where + "unknown key '" + key + "'");
    out[key] = value;
  }
  return out;
}

Settings read_settings(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file " + path.string());
  return parse_settings(is, path.string());
}

void apply_override(Settings& settings, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' is not key=value");
  const std::string key = trim(assignment.substr(0, eq));
  if (!known_key(key)) throw ConfigError("unknown key '" + key + "' in override");
  settings[key] = trim(assignment.substr(eq + 1));
}

std::string setting_or(const Settings& settings, const std::string& key, const std::string& fallback) {
  const auto it = settings.find(key);
  return it == settings.end() ? fallback : it->second;
}

AfemConfig make_afem_config(const Settings& s) {
  AfemConfig c;
  for (const auto& [key, value] : s) {
    if (!known_key(key)) throw ConfigError("unknown key '" + key + "'");
  }
  try {
    c.domain.kind = parse_domain_kind(setting_or(s, "domain.kind", "annulus"));
  } catch (const MeshError& e) {
    throw ConfigError(std::string("domain.kind: ") + e.what());
  }
  c.domain.cells_per_unit = static_cast<int>(to_long("domain.cells_per_unit", setting_or(s, "domain.cells_per_unit", "1")));
  if (c.domain.kind == DomainKind::polygon) {
    if (!s.count("domain.outer")) throw ConfigError("domain.kind = polygon needs domain.outer");
    c.domain.polygon.outer = parse_ring("domain.outer", s.at("domain.outer"));
    if (s.count("domain.holes")) {
      std::stringstream ss(s.at("domain.holes"));
      std::string ring;
      while (std::getline(ss, ring, ';')) {
        if (!trim(ring).empty()) c.domain.polygon.holes.push_back(parse_ring("domain.holes", ring));
      }
    }
  }
  if (c.domain.kind == DomainKind::file) {
    if (!s.count("domain.mesh_file")) throw ConfigError("domain.kind = file needs domain.mesh_file");
    c.domain.mesh_file = s.at("domain.mesh_file");
  }
  c.theta = to_double("afem.theta", setting_or(s, "afem.theta", "0.5"));
  c.max_dofs = static_cast<Index>(to_long("afem.max_dofs", setting_or(s, "afem.max_dofs", "30000")));
  c.tol = to_double("afem.tol", setting_or(s, "afem.tol", "0"));
  c.gamma = to_double("afem.gamma", setting_or(s, "afem.gamma", "0.1"));
  c.reference_extra_refines =
      static_cast<int>(to_long("afem.reference_extra_refines", setting_or(s, "afem.reference_extra_refines", "2")));
  c.max_levels = static_cast<int>(to_long("afem.max_levels", setting_or(s, "afem.max_levels", "200")));
  try {
    c.basis_method = parse_basis_method(setting_or(s, "afem.basis_method", "kernel"));
    c.reference_method = parse_basis_method(setting_or(s, "afem.reference_method", "cut"));
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (s.count("output.dir")) c.out_dir = s.at("output.dir");
  return c;
}

std::string format_config(const AfemConfig& c) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "[domain]\n";
  os << "kind = " << to_string(c.domain.kind) << '\n';
  os << "cells_per_unit = " << c.domain.cells_per_unit << '\n';
  if (c.domain.kind == DomainKind::polygon) {
    os << "outer = " << format_ring(c.domain.polygon.outer) << '\n';
    if (!c.domain.polygon.holes.empty()) {
      os << "holes = ";
      for (std::size_t i = 0; i < c.domain.polygon.holes.size(); ++i) {
        os << (i ? "; " : "") << format_ring(c.domain.polygon.holes[i]);
      }
      os << '\n';
    }
  }
  if (c.domain.kind == DomainKind::file) os << "mesh_file = " << c.domain.mesh_file << '\n';
  os << "\n[afem]\n";
  os << "theta = " << c.theta << '\n';
  os << "max_dofs = " << c.max_dofs << '\n';
  os << "tol = " << c.tol << '\n';
  os << "gamma = " << c.gamma << '\n';
  os << "reference_extra_refines = " << c.reference_extra_refines << '\n';
  os << "basis_method = " << to_string(c.basis_method) << '\n';
  os << "reference_method = " << to_string(c.reference_method) << '\n';
  os << "max_levels = " << c.max_levels << '\n';
  if (!c.out_dir.empty()) os << "\n[output]\ndir = " << c.out_dir.string() << '\n';
  return os.str();
}

}  // namespace hafem
