#ifndef HAFEM_VERIFY_HPP
#define HAFEM_VERIFY_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "hafem/afem.hpp"

namespace hafem {

enum class Fault { none, zero_column };

Fault parse_fault(const std::string& name);

struct VerifyOptions {
  AfemConfig config;     // domain and marking parameters; out_dir is ignored
  Index max_dofs = 4000;
  Fault fault = Fault::none;
};

struct CheckResult {
  std::string name;
  double value = 0.0;      // measured residual or ratio
  double tolerance = 0.0;  // passes when value <= tolerance
  bool passed = false;
};

/// Runs the invariant suite on a small adaptive run of the configured
/// domain. Each check reports its worst residual over all levels.
std::vector<CheckResult> run_verification(const VerifyOptions& options);

void print_checks(std::ostream& os, const std::vector<CheckResult>& checks);

}  // namespace hafem

#endif  // HAFEM_VERIFY_HPP
