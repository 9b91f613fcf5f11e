#include "hafem/run_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "hafem/config.hpp"
#include "hafem/mesh_io.hpp"
#include "hafem/vtk.hpp"

namespace hafem {

namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw RunIoError("cannot open " + path.string() + " for writing");
  os << std::setprecision(17);
  return os;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& s, const fs::path& path, int lineno) {
  double v = 0.0;
  const char* first = s.data() + (!s.empty() && s[0] == '+');
  const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
  if (ec == std::errc() && ptr == s.data() + s.size()) return v;
  throw RunIoError(path.string() + ":" + std::to_string(lineno) + ": bad number '" + s + "'");
}

// Keeps CSV output stable across platforms for non-finite values.
struct Num {
  double v;
};

std::ostream& operator<<(std::ostream& os, Num n) {
  if (std::isnan(n.v)) return os << "nan";
  if (std::isinf(n.v)) return os << (n.v > 0 ? "inf" : "-inf");
  return os << n.v;
}

}  // namespace

std::string level_file(const std::string& prefix, int level, const std::string& extension) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%03d", level);
  return prefix + buf + extension;
}

void write_basis_csv(const fs::path& path, const Eigen::MatrixXd& Q) {
  auto os = open_out(path);
  os << "edge";
  for (Index j = 0; j < Q.cols(); ++j) os << ",q" << j + 1;
  os << '\n';
  for (Index e = 0; e < Q.rows(); ++e) {
    os << e;
    for (Index j = 0; j < Q.cols(); ++j) os << ',' << Q(e, j);
    os << '\n';
  }
}

Eigen::MatrixXd read_basis_csv(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw RunIoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(is, line)) throw RunIoError(path.string() + ": empty basis file");
  const auto header = split_csv(line);
  if (header.empty() || header[0] != "edge") throw RunIoError(path.string() + ": header must start with 'edge'");
  const Index cols = static_cast<Index>(header.size()) - 1;
  std::vector<std::vector<double>> rows;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (static_cast<Index>(cells.size()) != cols + 1) {
      throw RunIoError(path.string() + ":" + std::to_string(lineno) + ": expected " + std::to_string(cols + 1) +
                       " fields");
    }
    if (parse_number(cells[0], path, lineno) != static_cast<double>(rows.size())) {
      throw RunIoError(path.string() + ":" + std::to_string(lineno) + ": edges out of order");
    }
    std::vector<double> r(cols);
    for (Index j = 0; j < cols; ++j) r[j] = parse_number(cells[j + 1], path, lineno);
    rows.push_back(std::move(r));
  }
  Eigen::MatrixXd Q(static_cast<Index>(rows.size()), cols);
  for (Index e = 0; e < Q.rows(); ++e) {
    for (Index j = 0; j < cols; ++j) Q(e, j) = rows[e][j];
  }
  return Q;
}

const std::vector<std::string>& record_columns() {
  static const std::vector<std::string> cols{"level",      "n_triangles",       "n1",           "beta",
                                             "E",          "eta_total",         "mu_total",     "P_norm",
                                             "P_inv_norm", "contraction_ratio", "marked_count", "refined_count",
                                             "linf_max"};
  return cols;
}

void write_records_csv(std::ostream& os, const std::vector<ConvergenceRecord>& records) {
  const auto& cols = record_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << '\n';
  const auto precision = os.precision(17);
  for (const auto& r : records) {
    os << r.level << ',' << r.n_triangles << ',' << r.n1 << ',' << r.beta << ',' << Num{r.E} << ','
       << Num{r.eta_total} << ',' << Num{r.mu_total} << ',' << Num{r.P_norm} << ',' << Num{r.P_inv_norm} << ','
       << Num{r.contraction_ratio} << ',' << r.marked_count << ',' << r.refined_count << ',' << Num{r.linf_max}
       << '\n';
  }
  os.precision(precision);
}

void write_records_csv(const fs::path& path, const std::vector<ConvergenceRecord>& records) {
  auto os = open_out(path);
  write_records_csv(os, records);
}

std::vector<ConvergenceRecord> read_records_csv(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw RunIoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(is, line)) throw RunIoError(path.string() + ": empty records file");
  if (split_csv(line) != record_columns()) throw RunIoError(path.string() + ": unexpected records header");
  std::vector<ConvergenceRecord> out;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto c = split_csv(line);
    if (c.size() != record_columns().size()) {
      throw RunIoError(path.string() + ":" + std::to_string(lineno) + ": wrong field count");
    }
    std::vector<double> v(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) v[i] = parse_number(c[i], path, lineno);
    ConvergenceRecord r;
    r.level = static_cast<int>(v[0]);
    r.n_triangles = static_cast<Index>(v[1]);
    r.n1 = static_cast<Index>(v[2]);
    r.beta = static_cast<int>(v[3]);
    r.E = v[4];
    r.eta_total = v[5];
    r.mu_total = v[6];
    r.P_norm = v[7];
    r.P_inv_norm = v[8];
    r.contraction_ratio = v[9];
    r.marked_count = static_cast<Index>(v[10]);
    r.refined_count = static_cast<Index>(v[11]);
    r.linf_max = v[12];
    out.push_back(r);
  }
  return out;
}

void write_diagnostics_csv(const fs::path& path, const RunResult& run) {
  auto os = open_out(path);
  os << "level,sigma_gap,residual_gradient,residual_rot,residual_orthonormality,defect_E,frobenius_residual,gap,"
        "gap_ref_to_level,gap_level_to_ref,sigma_min,min_projection_norm,equivalence_upper,equivalence_lower,"
        "projection_increment,orthogonality_residual,localized_ratio,contraction_g0.01,contraction_g0.1,"
        "contraction_g1\n";
  for (std::size_t l = 0; l < run.diagnostics.size(); ++l) {
    const auto& d = run.diagnostics[l];
    double pmin = kNaN;
    for (double p : d.projection_norms) pmin = std::isnan(pmin) ? p : std::min(pmin, p);
    os << l << ',' << Num{d.sigma_gap} << ',' << Num{d.harmonic.gradient} << ',' << Num{d.harmonic.rot} << ','
       << Num{d.harmonic.orthonormality} << ',' << Num{d.defect_E} << ',' << Num{d.frobenius_residual} << ','
       << Num{d.gap} << ',' << Num{d.gap_ref_to_level} << ',' << Num{d.gap_level_to_ref} << ',' << Num{d.sigma_min}
       << ',' << Num{pmin} << ',' << Num{d.equivalence_upper} << ',' << Num{d.equivalence_lower} << ','
       << Num{d.projection_increment} << ',' << Num{d.orthogonality_residual} << ',' << Num{d.localized_ratio};
    for (double c : d.contraction) os << ',' << Num{c};
    os << '\n';
  }
}

void write_indicators_csv(std::ostream& os, int level, const ErrorIndicators& eta, const ErrorIndicators& mu) {
  const auto precision = os.precision(17);
  os << "level,triangle_id,eta,mu\n";
  const bool has_mu = mu.per_element.size() == eta.per_element.size();
  for (std::size_t t = 0; t < eta.per_element.size(); ++t) {
    os << level << ',' << t << ',' << Num{eta.per_element[t]} << ',' << Num{has_mu ? mu.per_element[t] : kNaN}
       << '\n';
  }
  os.precision(precision);
}

void write_compare_csv(const fs::path& path, const RunResult& adaptive, const RunResult& uniform) {
  auto os = open_out(path);
  os << "method,level,dofs,E,eta\n";
  for (const RunResult* r : {&adaptive, &uniform}) {
    for (const auto& rec : r->records) {
      os << to_string(r->mode) << ',' << rec.level << ',' << rec.n1 << ',' << Num{rec.E} << ',' << Num{rec.eta_total}
         << '\n';
    }
  }
}

void write_threshold_csv(const fs::path& path, const std::vector<ThresholdRow>& rows) {
  auto os = open_out(path);
  os << "theta,slope,levels,final_n1,total_marked,final_E,complexity\n";
  for (const auto& r : rows) {
    char theta[32];
    std::snprintf(theta, sizeof theta, "%.6g", r.theta);
    os << theta << ',' << Num{r.slope} << ',' << r.levels << ',' << r.final_n1 << ',' << r.total_marked << ','
       << Num{r.final_E} << ',' << Num{r.complexity} << '\n';
  }
}

std::string mesh_checksum(const Mesh& mesh) {
  std::ostringstream os;
  write_mesh(os, mesh);
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : os.str()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

StoredRun load_run(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw RunIoError("run directory " + dir.string() + " does not exist");
  StoredRun out;
  out.dir = dir;
  std::vector<std::string> missing;
  for (int level = 0;; ++level) {
    const fs::path mesh_path = dir / level_file("level_", level, ".mesh");
    if (!fs::exists(mesh_path)) {
      if (level == 0) missing.push_back(mesh_path.filename().string());
      break;
    }
    const MeshFile file = read_mesh(mesh_path);
    out.meshes.push_back(level == 0 ? file.mesh : attach_lineage(file, out.meshes.back()));
    const fs::path basis_path = dir / level_file("basis_", level, ".csv");
    if (!fs::exists(basis_path)) {
      missing.push_back(basis_path.filename().string());
      out.bases.emplace_back();
      continue;
    }
    out.bases.push_back(read_basis_csv(basis_path));
    if (out.bases.back().rows() != out.meshes.back()->num_edges()) {
      throw RunIoError(basis_path.string() + ": row count does not match the mesh edge count");
    }
  }
  if (fs::exists(dir / "records.csv")) {
    out.records = read_records_csv(dir / "records.csv");
    if (out.records.size() != out.meshes.size()) missing.push_back("level files for every row of records.csv");
  }
  if (!missing.empty()) {
    std::string msg = "run directory " + dir.string() + " is missing:";
    for (const auto& m : missing) msg += " " + m;
    throw RunIoError(msg);
  }
  return out;
}

void write_run_outputs(const RunResult& run) {
  const fs::path& dir = run.config.out_dir;
  fs::create_directories(dir);
  {
    auto os = open_out(dir / "config.txt");
    os << format_config(run.config);
  }
  write_records_csv(dir / "records.csv", run.records);
  write_diagnostics_csv(dir / "diagnostics.csv", run);
  for (const auto& L : run.levels) {
    auto os = open_out(dir / level_file("indicators_", L.level, ".csv"));
    write_indicators_csv(os, L.level, L.eta, L.mu);
  }
  {
    auto os = open_out(dir / "summary.txt");
    os << "mode = " << to_string(run.mode) << '\n';
    os << "levels = " << run.records.size() << '\n';
    os << "initial_checksum = " << run.initial_checksum << '\n';
    if (!run.records.empty()) {
      os << "beta = " << run.records.back().beta << '\n';
      os << "final_n1 = " << run.records.back().n1 << '\n';
      os << "final_E = " << Num{run.records.back().E} << '\n';
      try {
        const int w = decade_window(run.records);
        os << "rate_window = " << w << '\n';
        os << "rate_n1 = " << rate_fit(run.records, w).slope << '\n';
        os << "rate_work = " << rate_fit_work(run.records, w).slope << '\n';
      } catch (const std::invalid_argument&) {
        os << "rate_n1 = nan\n";
      }
    }
    os << "complexity_constant = " << Num{run.complexity_constant} << '\n';
    os << "failed = " << (run.failed ? "true" : "false") << '\n';
    if (run.failed) os << "failure = " << run.failure << '\n';
  }
  if (run.levels.empty()) return;
  const LevelData& last = run.levels.back();
  VtkCellData mesh_data;
  mesh_data.scalars.emplace_back("eta", last.eta.per_element);
  write_vtk(dir / "final_mesh.vtk", *last.mesh, "final mesh, level " + std::to_string(last.level), mesh_data);
  for (Index j = 0; j < last.basis.Q.cols(); ++j) {
    VtkCellData field;
    field.vectors.emplace_back("q" + std::to_string(j + 1), barycenter_values(*last.mesh, last.basis.Q.col(j)));
    write_vtk(dir / ("final_field_q" + std::to_string(j + 1) + ".vtk"), *last.mesh,
              "harmonic basis field " + std::to_string(j + 1), field);
  }
}

}  // namespace hafem
