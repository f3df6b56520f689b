#pragma once

#include <array>
#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cpdtopo/cpd.hpp"
#include "cpdtopo/mesh.hpp"

namespace cpdtopo {

struct BenchmarkSpec {
  std::string name;
  int nelx = 60;
  int nely = 20;
  int nelz = 4;
  double volume_fraction = 0.3;
  double load = 1.0;  // total magnitude, applied downward (-y)
  Material material;
  // cantilever-hole only: (x, y) of the through-thickness (z) axis, radius
  std::optional<std::array<double, 2>> hole_center;
  std::optional<double> hole_radius;
};

const std::vector<std::string>& benchmark_names();

/// Spec with the default mesh of the named benchmark. Throws InvalidArgument
/// for an unknown name.
BenchmarkSpec default_benchmark(const std::string& name);

/// Builds the loads and supports of a named benchmark:
///   cantilever-distributed  x = 0 face clamped; load split over the nodes of
///                           the edge x = nelx, y = 0
///   cantilever-central      x = 0 face clamped; point load at the centre of
///                           the x = nelx face
///   mbb-distributed         bottom edge lines x = 0 (pinned) and x = nelx
///                           (y roller); load along the top mid-span line
///   mbb-central             bottom corners, x = 0 pinned and x = nelx y
///                           rollers; point load at the top-face centre
///   cantilever-hole         cantilever-distributed plus a forced-void
///                           cylinder along z (centre and radius required)
///   wheel                   four bottom corners pinned; point load at the
///                           bottom-face centre
/// A load point that falls between nodes is shared by the nearest 2 or 4.
ProblemDef generate_benchmark(const BenchmarkSpec& spec);

/// Versioned key-value text format:
///
///   cpd-problem v1
///   nelx 60            (also nely, nelz)
///   E 1                (also nu, emin, volfrac)
///   fixed 0 1 2 ...    (repeatable; DOF indices)
///   load 3 -0.5        (repeatable; DOF and value)
///   void 12 13 ...     (repeatable; element indices)
///   solid 40 ...       (repeatable; element indices)
///
/// '#' starts a comment. Reals are written with 17 significant digits, so a
/// written problem reads back identical.
std::string format_problem(const ProblemDef& problem);
ProblemDef parse_problem(std::istream& in);
void save_problem(const std::filesystem::path& path, const ProblemDef& problem);
ProblemDef load_problem(const std::filesystem::path& path);

/// Legacy VTK STRUCTURED_POINTS with one density scalar per cell, in element
/// numbering order (x fastest, z slowest).
void write_vtk(const std::filesystem::path& path, const VoxelMesh& mesh,
               std::span<const double> rho);

struct VtkField {
  std::array<int, 3> cells{};
  std::vector<double> values;
};

VtkField read_vtk(const std::filesystem::path& path);

inline constexpr const char* kCsvHeader = "gamma,V,compliance,dual,inner_iters,change,seconds";

std::string format_csv_row(const StepRecord& row);

/// Streams rows to `<path>.part`, flushing each one; finish() renames the file
/// into place.
class CsvLog {
 public:
  explicit CsvLog(std::filesystem::path path);
  void append(const StepRecord& row);
  void finish();

 private:
  std::filesystem::path path_;
  std::filesystem::path part_;
  std::ofstream out_;
};

void write_csv(const std::filesystem::path& path, const ConvergenceRecord& record);

/// Writes to a sibling temporary file and renames it over `path`.
void write_atomic(const std::filesystem::path& path, const std::string& content);

struct RunSummary {
  std::string method;
  std::string problem;
  double compliance = 0.0;
  double volume_fraction = 0.0;
  int iterations = 0;
  int volume_reductions = 0;
  bool converged = false;
  double seconds = 0.0;
  std::size_t gray_elements = 0;  // rho in (0.01, 0.99)
};

std::string format_summary(const RunSummary& summary);

}  // namespace cpdtopo
