#ifndef HAFEM_CONFIG_HPP
#define HAFEM_CONFIG_HPP

#include <filesystem>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>

#include "hafem/afem.hpp"

namespace hafem {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Flat "key = value" text. "[section]" lines prefix the following keys with
// "section."; '#' starts a comment. Recognised keys:
//   domain.kind            square | annulus | three_hole | polygon | file
//   domain.cells_per_unit  grid cells per unit length (default 1)
//   domain.outer           polygon outer ring "x y, x y, ..."
//   domain.holes           polygon holes, rings separated by ';'
//   domain.mesh_file       mesh file for kind = file
//   afem.theta, afem.max_dofs, afem.tol, afem.gamma,
//   afem.reference_extra_refines, afem.basis_method, afem.reference_method,
//   afem.max_levels
//   output.dir
//   verify.fault           none | zero_column
//   verify.max_dofs        DOF budget of the verification runs (default 4000)
using Settings = std::map<std::string, std::string>;

Settings parse_settings(std::istream& is, const std::string& source = "config");
Settings read_settings(const std::filesystem::path& path);

/// Applies one "key=value" override; throws ConfigError for unknown keys.
void apply_override(Settings& settings, const std::string& assignment);

/// Throws ConfigError for unknown keys or unparsable values.
AfemConfig make_afem_config(const Settings& settings);

/// Effective configuration in the same format, readable by parse_settings.
std::string format_config(const AfemConfig& config);

std::string setting_or(const Settings& settings, const std::string& key, const std::string& fallback);

}  // namespace hafem

#endif  // HAFEM_CONFIG_HPP
