// harmonic-afem: adaptive computation of discrete harmonic 1-forms.
//
//   harmonic-afem run     [--config F] [--out DIR] [--set key=value ...]
//   harmonic-afem compare [--config F] [--out DIR] ...
//   harmonic-afem verify  [--config F] [--fault zero_column] ...
//   harmonic-afem sweep   [--config F] [--out DIR] [--thetas 0.2,0.4,...] ...
//   harmonic-afem export  --run DIR --what mesh|field|indicators [--level N] --out DIR
//
// Exit status: 0 success, 1 verification or computation failure, 2 usage or
// configuration error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "hafem/afem.hpp"
#include "hafem/config.hpp"
#include "hafem/mesh_io.hpp"
#include "hafem/run_io.hpp"
#include "hafem/verify.hpp"
#include "hafem/vtk.hpp"

namespace fs = std::filesystem;
using namespace hafem;

namespace {

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CommonOptions {
  std::string config_path;
  std::string out;
  std::vector<std::string> overrides;
  double theta = 0.0;
  long max_dofs = 0;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config,-c", o.config_path, "configuration file (key = value)");
  cmd->add_option("--out,-o", o.out, "output directory (overrides output.dir)");
  cmd->add_option("--set", o.overrides, "override a setting, e.g. --set afem.theta=0.3");
  cmd->add_option("--theta", o.theta, "Doerfler parameter in (0, 1]");
  cmd->add_option("--max-dofs", o.max_dofs, "stop once the edge count exceeds this budget");
}

Settings load_settings(const CommonOptions& o) {
  Settings s = o.config_path.empty() ? Settings{} : read_settings(o.config_path);
  for (const auto& a : o.overrides) apply_override(s, a);
  if (o.theta != 0.0) s["afem.theta"] = std::to_string(o.theta);
  if (o.max_dofs != 0) s["afem.max_dofs"] = std::to_string(o.max_dofs);
  if (!o.out.empty()) s["output.dir"] = o.out;
  return s;
}

AfemConfig require_out_dir(const Settings& s) {
  AfemConfig cfg = make_afem_config(s);
  if (cfg.out_dir.empty()) throw UsageError("an output directory is required (--out or output.dir)");
  return cfg;
}

void print_run_summary(const RunResult& r) {
  const auto& last = r.records.back();
  std::printf("%s: %zu levels, final n1 = %ld, beta = %d, E = %.6e, eta = %.6e\n", to_string(r.mode).c_str(),
              r.records.size(), static_cast<long>(last.n1), last.beta, last.E, last.eta_total);
  if (last.beta == 0) std::printf("beta = 0: the harmonic space is trivial on this domain\n");
  try {
    const RateFit f = rate_fit(r.records, decade_window(r.records));
    std::printf("%s: fitted rate %.4f over the last %d levels\n", to_string(r.mode).c_str(), f.slope, f.points);
  } catch (const std::invalid_argument&) {
  }
}

int cmd_run(const CommonOptions& o) {
  const AfemConfig cfg = require_out_dir(load_settings(o));
  const RunResult r = run_adaptive(cfg);
  if (r.failed) {
    std::cerr << "error: " << r.failure << '\n';
    return kFailure;
  }
  print_run_summary(r);
  std::printf("complexity constant %.4f\nwrote %s\n", r.complexity_constant, cfg.out_dir.c_str());
  return kOk;
}

int cmd_compare(const CommonOptions& o) {
  const AfemConfig cfg = require_out_dir(load_settings(o));
  AfemConfig a = cfg, u = cfg;
  a.out_dir = cfg.out_dir / "adaptive";
  u.out_dir = cfg.out_dir / "uniform";
  RunResult ra, ru;
  std::exception_ptr error;
  std::thread worker([&] {
    try {
      ru = run_uniform(u);
    } catch (...) {
      error = std::current_exception();
    }
  });
  ra = run_adaptive(a);
  worker.join();
  if (error) std::rethrow_exception(error);
  for (const RunResult* r : {&ra, &ru}) {
    if (r->failed) {
      std::cerr << "error: " << to_string(r->mode) << ": " << r->failure << '\n';
      return kFailure;
    }
  }
  write_compare_csv(cfg.out_dir / "compare.csv", ra, ru);
  print_run_summary(ra);
  print_run_summary(ru);
  if (ra.initial_checksum != ru.initial_checksum) {
    std::cerr << "error: initial meshes differ (" << ra.initial_checksum << " vs " << ru.initial_checksum << ")\n";
    return kFailure;
  }
  const double budget = static_cast<double>(std::min(ra.records.back().n1, ru.records.back().n1));
  std::printf("initial mesh checksum %s\n", ra.initial_checksum.c_str());
  std::printf("E at n1 = %.0f: adaptive %.6e, uniform %.6e\n", budget, error_at_dofs(ra.records, budget),
              error_at_dofs(ru.records, budget));
  std::printf("wrote %s\n", (cfg.out_dir / "compare.csv").c_str());
  return kOk;
}

int cmd_verify(const CommonOptions& o, const std::string& fault_flag) {
  const Settings s = load_settings(o);
  VerifyOptions v;
  v.config = make_afem_config(s);
  try {
    v.fault = parse_fault(fault_flag.empty() ? setting_or(s, "verify.fault", "none") : fault_flag);
    v.max_dofs = std::stol(setting_or(s, "verify.max_dofs", "4000"));
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  if (v.max_dofs > 5000) throw ConfigError("verify.max_dofs must not exceed 5000");
  const auto checks = run_verification(v);
  print_checks(std::cout, checks);
  std::size_t failed = 0;
  for (const auto& c : checks) failed += !c.passed;
  std::printf("%zu of %zu checks passed\n", checks.size() - failed, checks.size());
  return failed == 0 ? kOk : kFailure;
}

std::vector<double> parse_thetas(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw UsageError("bad theta '" + item + "'");
    }
  }
  if (out.empty()) throw UsageError("--thetas is empty");
  return out;
}

int cmd_sweep(const CommonOptions& o, const std::string& thetas) {
  const AfemConfig cfg = require_out_dir(load_settings(o));
  const auto values = parse_thetas(thetas);
  for (double t : values) {
    if (!(t > 0.0 && t <= 1.0)) throw UsageError("theta values must lie in (0, 1]");
  }
  const auto rows = threshold_study(cfg, values);
  write_threshold_csv(cfg.out_dir / "thresholds.csv", rows);
  for (const auto& r : rows) {
    std::printf("theta %.3f  levels %3d  n1 %8ld  E %.4e  rate %.4f  C %.3f\n", r.theta, r.levels,
                static_cast<long>(r.final_n1), r.final_E, r.slope, r.complexity);
  }
  std::printf("wrote %s\n", (cfg.out_dir / "thresholds.csv").c_str());
  return kOk;
}

int cmd_export(const std::string& run_dir, const std::string& what, int level, const std::string& out) {
  if (what != "mesh" && what != "field" && what != "indicators") {
    throw UsageError("--what must be mesh, field or indicators");
  }
  const StoredRun stored = load_run(run_dir);
  const int finest = static_cast<int>(stored.meshes.size()) - 1;
  if (level < 0) level = finest;
  if (level > finest) throw RunIoError("level " + std::to_string(level) + " not in run (finest " +
                                       std::to_string(finest) + ")");
  const MeshPtr& mesh = stored.meshes[level];
  const Eigen::MatrixXd& Q = stored.bases[level];
  fs::create_directories(out);
  std::vector<fs::path> written;
  if (what == "mesh") {
    written.push_back(fs::path(out) / level_file("mesh_", level, ".vtk"));
    write_vtk(written.back(), *mesh, "mesh, level " + std::to_string(level));
  } else if (what == "field") {
    for (Index j = 0; j < Q.cols(); ++j) {
      const std::string name = "q" + std::to_string(j + 1);
      VtkCellData data;
      data.vectors.emplace_back(name, barycenter_values(*mesh, Q.col(j)));
      written.push_back(fs::path(out) / level_file("field_", level, "_" + name + ".vtk"));
      write_vtk(written.back(), *mesh, "harmonic basis field " + std::to_string(j + 1), data);
    }
    if (Q.cols() == 0) std::printf("beta = 0: no fields to export\n");
  } else {
    const fs::path stored_file = fs::path(run_dir) / level_file("indicators_", level, ".csv");
    written.push_back(fs::path(out) / level_file("indicators_", level, ".csv"));
    if (fs::exists(stored_file)) {
      fs::copy_file(stored_file, written.back(), fs::copy_options::overwrite_existing);
    } else {
      // Without the reference pass only eta can be recomputed.
      const DeRhamSpaces spaces = build_spaces(mesh);
      HarmonicBasis basis;
      basis.mesh = mesh;
      basis.Q = Q;
      basis.beta = static_cast<int>(Q.cols());
      std::ofstream os(written.back());
      if (!os) throw RunIoError("cannot write " + written.back().string());
      write_indicators_csv(os, level, eta(spaces, basis), ErrorIndicators{});
    }
  }
  for (const auto& p : written) std::printf("wrote %s\n", p.c_str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive computation of discrete harmonic 1-forms on polygonal domains with holes"};
  app.require_subcommand(1);
  CommonOptions common;
  std::string fault, thetas = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9";
  std::string run_dir, what, export_out;
  int level = -1;

  auto* run_cmd = app.add_subcommand("run", "adaptive run; writes records, meshes, bases and VTK files");
  auto* compare_cmd = app.add_subcommand("compare", "adaptive and uniform runs plus compare.csv");
  auto* verify_cmd = app.add_subcommand("verify", "invariant suite on small meshes");
  auto* sweep_cmd = app.add_subcommand("sweep", "adaptive runs over several Doerfler parameters");
  auto* export_cmd = app.add_subcommand("export", "VTK or CSV export from a run directory");
  for (auto* c : {run_cmd, compare_cmd, verify_cmd, sweep_cmd}) add_common(c, common);
  verify_cmd->add_option("--fault", fault, "inject a fault: none | zero_column");
  sweep_cmd->add_option("--thetas", thetas, "comma-separated Doerfler parameters");
  export_cmd->add_option("--run", run_dir, "run directory")->required();
  export_cmd->add_option("--what", what, "mesh | field | indicators")->required();
  export_cmd->add_option("--level", level, "level to export (default: finest)");
  export_cmd->add_option("--out,-o", export_out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*run_cmd) return cmd_run(common);
    if (*compare_cmd) return cmd_compare(common);
    if (*verify_cmd) return cmd_verify(common, fault);
    if (*sweep_cmd) return cmd_sweep(common, thetas);
    if (*export_cmd) return cmd_export(run_dir, what, level, export_out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kUsage;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const RunIoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return kUsage;
  } catch (const MeshError& e) {
    std::cerr << "mesh error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kUsage;
}
