#ifndef HAFEM_RUN_IO_HPP
#define HAFEM_RUN_IO_HPP

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "hafem/afem.hpp"

namespace hafem {

// Run directory layout:
//   config.txt               effective configuration (key = value)
//   level_NNN.mesh           mesh of level NNN, with lineage after level 0
//   basis_NNN.csv            "edge,q1,...,qB", one row per edge
//   indicators_NNN.csv       "level,triangle_id,eta,mu"
//   records.csv              one ConvergenceRecord per level
//   diagnostics.csv          per-level identity residuals
//   summary.txt              fitted rates and run constants (key = value)
//   final_mesh.vtk           final mesh with the eta indicator
//   final_field_qJ.vtk       basis column J (1-based) at the barycenters

class RunIoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string level_file(const std::string& prefix, int level, const std::string& extension);

void write_basis_csv(const std::filesystem::path& path, const Eigen::MatrixXd& Q);
Eigen::MatrixXd read_basis_csv(const std::filesystem::path& path);

/// Column order of records.csv.
const std::vector<std::string>& record_columns();
void write_records_csv(std::ostream& os, const std::vector<ConvergenceRecord>& records);
void write_records_csv(const std::filesystem::path& path, const std::vector<ConvergenceRecord>& records);
std::vector<ConvergenceRecord> read_records_csv(const std::filesystem::path& path);

void write_diagnostics_csv(const std::filesystem::path& path, const RunResult& run);
void write_indicators_csv(std::ostream& os, int level, const ErrorIndicators& eta, const ErrorIndicators& mu);
void write_compare_csv(const std::filesystem::path& path, const RunResult& adaptive, const RunResult& uniform);
void write_threshold_csv(const std::filesystem::path& path, const std::vector<ThresholdRow>& rows);

/// FNV-1a hash of the mesh file text, as 16 hex digits.
std::string mesh_checksum(const Mesh& mesh);

/// Everything a finished (or interrupted) run left on disk.
struct StoredRun {
  std::filesystem::path dir;
  std::vector<MeshPtr> meshes;  // lineage reattached level by level
  std::vector<Eigen::MatrixXd> bases;
  std::vector<ConvergenceRecord> records;  // empty if records.csv is absent
};

/// Throws RunIoError naming the missing artifacts.
StoredRun load_run(const std::filesystem::path& dir);

/// Writes the per-level artifacts, records, diagnostics, summary and the
/// final-level VTK files of a completed run into config.out_dir.
void write_run_outputs(const RunResult& run);

}  // namespace hafem

#endif  // HAFEM_RUN_IO_HPP
