#include "cpdtopo/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>

#include "cpdtopo/error.hpp"

namespace cpdtopo {

namespace fs = std::filesystem;

namespace {

std::string real(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// Grid indices nearest to a possibly fractional coordinate: one or two.
std::vector<int> nearest(double x) {
  const int lo = static_cast<int>(std::floor(x));
  if (static_cast<double>(lo) == x) return {lo};
  return {lo, lo + 1};
}

void add_nodes_load(ProblemDef& p, const std::vector<Index>& nodes, double total) {
  const double each = -total / static_cast<double>(nodes.size());
  for (Index n : nodes) p.loads.push_back({3 * n + 1, each});
}

std::vector<Index> nodes_at(const VoxelMesh& m, const std::vector<int>& is,
                            const std::vector<int>& js, const std::vector<int>& ks) {
  std::vector<Index> nodes;
  for (int k : ks) {
    for (int j : js) {
      for (int i : is) nodes.push_back(m.node_index(i, j, k));
    }
  }
  std::sort(nodes.begin(), nodes.end());
  return nodes;
}

std::vector<int> all(int n) {
  std::vector<int> out(n + 1);
  for (int i = 0; i <= n; ++i) out[i] = i;
  return out;
}

void clamp_face(ProblemDef& p) {
  const auto& m = p.mesh;
  const auto nodes = select_region(m, {{0, 0, 0}, {0, double(m.nely()), double(m.nelz())}});
  add_fixed_dofs(p, node_dofs(nodes));
}

}  // namespace

const std::vector<std::string>& benchmark_names() {
  static const std::vector<std::string> names = {
      "cantilever-distributed", "cantilever-central", "mbb-distributed",
      "mbb-central",            "cantilever-hole",    "wheel"};
  return names;
}

BenchmarkSpec default_benchmark(const std::string& name) {
  const auto& names = benchmark_names();
  if (std::find(names.begin(), names.end(), name) == names.end()) {
    std::string list;
    for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
    throw InvalidArgument("unknown benchmark '" + name + "'; valid names: " + list);
  }
  BenchmarkSpec spec;
  spec.name = name;
  if (name == "wheel") {
    spec.nelx = 40;
    spec.nely = 20;
    spec.nelz = 40;
  } else if (name == "cantilever-hole") {
    spec.nelx = 70;
    spec.nely = 30;
    spec.nelz = 6;
  }
  return spec;
}

ProblemDef generate_benchmark(const BenchmarkSpec& spec) {
  default_benchmark(spec.name);  // validates the name
  ProblemDef p(VoxelMesh(spec.nelx, spec.nely, spec.nelz));
  p.material = spec.material;
  p.volume_fraction = spec.volume_fraction;
  const auto& m = p.mesh;
  const int nx = m.nelx();
  const int ny = m.nely();
  const int nz = m.nelz();
  const std::string& name = spec.name;

  if (name == "cantilever-distributed" || name == "cantilever-hole") {
    clamp_face(p);
    add_nodes_load(p, nodes_at(m, {nx}, {0}, all(nz)), spec.load);
    if (name == "cantilever-hole") {
      if (!spec.hole_center || !spec.hole_radius) {
        throw InvalidArgument("cantilever-hole needs a hole centre and radius");
      }
      p = mark_cylindrical_void(std::move(p), Axis::kZ, *spec.hole_center, *spec.hole_radius);
    }
  } else if (name == "cantilever-central") {
    clamp_face(p);
    add_nodes_load(p, nodes_at(m, {nx}, nearest(ny / 2.0), nearest(nz / 2.0)), spec.load);
  } else if (name == "mbb-distributed") {
    add_fixed_dofs(p, node_dofs(nodes_at(m, {0}, {0}, all(nz))));
    add_fixed_dofs(p, node_dofs(nodes_at(m, {nx}, {0}, all(nz)), {false, true, false}));
    add_nodes_load(p, nodes_at(m, nearest(nx / 2.0), {ny}, all(nz)), spec.load);
  } else if (name == "mbb-central") {
    add_fixed_dofs(p, node_dofs(nodes_at(m, {0}, {0}, {0, nz})));
    add_fixed_dofs(p, node_dofs(nodes_at(m, {nx}, {0}, {0, nz}), {false, true, false}));
    add_nodes_load(p, nodes_at(m, nearest(nx / 2.0), {ny}, nearest(nz / 2.0)), spec.load);
  } else {  // wheel
    add_fixed_dofs(p, node_dofs(nodes_at(m, {0, nx}, {0}, {0, nz})));
    add_nodes_load(p, nodes_at(m, nearest(nx / 2.0), {0}, nearest(nz / 2.0)), spec.load);
  }
  p.validate();
  return p;
}

std::string format_problem(const ProblemDef& p) {
  std::ostringstream out;
  out << "cpd-problem v1\n";
  out << "nelx " << p.mesh.nelx() << "\nnely " << p.mesh.nely() << "\nnelz " << p.mesh.nelz()
      << "\n";
  out << "E " << real(p.material.E) << "\nnu " << real(p.material.nu) << "\nemin "
      << real(p.material.E_min) << "\nvolfrac " << real(p.volume_fraction) << "\n";
  auto list = [&out](const char* key, const std::vector<Index>& items) {
    for (std::size_t i = 0; i < items.size(); i += 16) {
      out << key;
      for (std::size_t j = i; j < std::min(items.size(), i + 16); ++j) out << ' ' << items[j];
      out << '\n';
    }
  };
  list("fixed", p.fixed_dofs);
  for (const auto& l : p.loads) out << "load " << l.dof << ' ' << real(l.value) << '\n';
  std::vector<Index> voids, solids;
  for (std::size_t e = 0; e < p.passive.size(); ++e) {
    if (p.passive[e] == Passive::kVoid) voids.push_back(static_cast<Index>(e));
    if (p.passive[e] == Passive::kSolid) solids.push_back(static_cast<Index>(e));
  }
  list("void", voids);
  list("solid", solids);
  return out.str();
}

ProblemDef parse_problem(std::istream& in) {
  std::string line;
  int line_no = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++line_no;
      if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
    }
    return false;
  };
  if (!next_line()) throw ParseError("empty problem file", line_no);
  {
    std::istringstream head(line);
    std::string magic, version, extra;
    head >> magic >> version;
    if (magic != "cpd-problem") throw ParseError("missing 'cpd-problem' header", line_no);
    if (version != "v1") throw ParseError("unsupported version '" + version + "'", line_no);
    if (head >> extra) throw ParseError("unexpected text after header", line_no);
  }

  std::map<std::string, double> scalars;
  std::map<std::string, int> ints;
  std::vector<Index> fixed;
  std::vector<std::pair<PointLoad, int>> loads;
  std::vector<std::pair<Index, int>> voids, solids;

  auto read_int = [&](std::istringstream& s, const std::string& key) {
    long long v;
    if (!(s >> v)) throw ParseError("expected an integer for '" + key + "'", line_no);
    if (v < std::numeric_limits<Index>::min() || v > std::numeric_limits<Index>::max()) {
      throw ParseError("integer out of range for '" + key + "'", line_no);
    }
    return static_cast<Index>(v);
  };
  auto read_real = [&](std::istringstream& s, const std::string& key) {
    std::string tok;
    if (!(s >> tok)) throw ParseError("expected a number for '" + key + "'", line_no);
    try {
      std::size_t used = 0;
      const double v = std::stod(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      return v;
    } catch (const std::exception&) {
      throw ParseError("'" + tok + "' is not a number", line_no);
    }
  };
  auto expect_end = [&](std::istringstream& s) {
    std::string extra;
    if (s >> extra) throw ParseError("unexpected token '" + extra + "'", line_no);
  };

  while (next_line()) {
    std::istringstream s(line);
    std::string key;
    s >> key;
    if (key == "nelx" || key == "nely" || key == "nelz") {
      if (ints.count(key)) throw ParseError("duplicate key '" + key + "'", line_no);
      ints[key] = read_int(s, key);
      expect_end(s);
    } else if (key == "E" || key == "nu" || key == "emin" || key == "volfrac") {
      if (scalars.count(key)) throw ParseError("duplicate key '" + key + "'", line_no);
      scalars[key] = read_real(s, key);
      expect_end(s);
    } else if (key == "fixed") {
      while (s >> std::ws && !s.eof()) fixed.push_back(read_int(s, key));
    } else if (key == "load") {
      PointLoad l;
      l.dof = read_int(s, key);
      l.value = read_real(s, key);
      expect_end(s);
      loads.push_back({l, line_no});
    } else if (key == "void" || key == "solid") {
      auto& target = key == "void" ? voids : solids;
      while (s >> std::ws && !s.eof()) target.push_back({read_int(s, key), line_no});
    } else {
      throw ParseError("unknown key '" + key + "'", line_no);
    }
  }

  for (const char* key : {"nelx", "nely", "nelz"}) {
    if (!ints.count(key)) throw ParseError(std::string("missing key '") + key + "'", line_no);
  }
  if (!scalars.count("volfrac")) throw ParseError("missing key 'volfrac'", line_no);
  VoxelMesh mesh = [&] {
    try {
      return VoxelMesh(ints["nelx"], ints["nely"], ints["nelz"]);
    } catch (const InvalidArgument& err) {
      throw ParseError(err.what(), line_no);
    }
  }();
  ProblemDef p(std::move(mesh));
  if (scalars.count("E")) p.material.E = scalars["E"];
  if (scalars.count("nu")) p.material.nu = scalars["nu"];
  if (scalars.count("emin")) p.material.E_min = scalars["emin"];
  p.volume_fraction = scalars["volfrac"];
  const auto m = static_cast<Index>(p.mesh.num_dofs());
  const auto n = static_cast<Index>(p.mesh.num_elements());
  for (const auto& [l, at] : loads) {
    if (l.dof < 0 || l.dof >= m) throw ParseError("load DOF out of range", at);
    p.loads.push_back(l);
  }
  for (Index d : fixed) {
    if (d < 0 || d >= m) throw ParseError("fixed DOF " + std::to_string(d) + " out of range", line_no);
  }
  add_fixed_dofs(p, fixed);
  for (const auto& [e, at] : voids) {
    if (e < 0 || e >= n) throw ParseError("void element out of range", at);
    p.passive[e] = Passive::kVoid;
  }
  for (const auto& [e, at] : solids) {
    if (e < 0 || e >= n) throw ParseError("solid element out of range", at);
    if (p.passive[e] == Passive::kVoid) throw ParseError("element both void and solid", at);
    p.passive[e] = Passive::kSolid;
  }
  return p;
}

void write_atomic(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

void save_problem(const fs::path& path, const ProblemDef& problem) {
  write_atomic(path, format_problem(problem));
}

ProblemDef load_problem(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return parse_problem(in);
}

void write_vtk(const fs::path& path, const VoxelMesh& mesh, std::span<const double> rho) {
  if (rho.size() != mesh.num_elements()) {
    throw InvalidArgument("density length does not match element count");
  }
  std::ostringstream out;
  out << "# vtk DataFile Version 3.0\n"
      << "cpd-topo density\n"
      << "ASCII\n"
      << "DATASET STRUCTURED_POINTS\n"
      << "DIMENSIONS " << mesh.nelx() + 1 << ' ' << mesh.nely() + 1 << ' ' << mesh.nelz() + 1
      << "\nORIGIN 0 0 0\n"
      << "SPACING " << real(mesh.element_size()) << ' ' << real(mesh.element_size()) << ' '
      << real(mesh.element_size()) << "\n"
      << "CELL_DATA " << rho.size() << "\n"
      << "SCALARS density double 1\n"
      << "LOOKUP_TABLE default\n";
  for (double r : rho) out << real(r) << '\n';
  write_atomic(path, out.str());
}

VtkField read_vtk(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  VtkField field;
  std::string line;
  int line_no = 0;
  std::size_t cells = 0;
  bool in_data = false;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream s(line);
    std::string key;
    if (!(s >> key)) continue;
    if (in_data) {
      try {
        field.values.push_back(std::stod(key));
      } catch (const std::exception&) {
        throw ParseError("bad density value '" + key + "'", line_no);
      }
      continue;
    }
    if (key == "DIMENSIONS") {
      int a, b, c;
      if (!(s >> a >> b >> c)) throw ParseError("bad DIMENSIONS line", line_no);
      field.cells = {a - 1, b - 1, c - 1};
    } else if (key == "CELL_DATA") {
      if (!(s >> cells)) throw ParseError("bad CELL_DATA line", line_no);
    } else if (key == "LOOKUP_TABLE") {
      in_data = true;
    }
  }
  if (!in_data) throw ParseError("no cell data found", line_no);
  if (field.values.size() != cells) {
    throw ParseError("expected " + std::to_string(cells) + " values, found " +
                         std::to_string(field.values.size()),
                     line_no);
  }
  return field;
}

std::string format_csv_row(const StepRecord& r) {
  return std::to_string(r.gamma) + ',' + real(r.volume) + ',' + real(r.compliance) + ',' +
         real(r.dual) + ',' + std::to_string(r.inner_iterations) + ',' + real(r.change) + ',' +
         real(r.seconds);
}

CsvLog::CsvLog(fs::path path) : path_(std::move(path)), part_(path_) {
  part_ += ".part";
  out_.open(part_, std::ios::trunc);
  if (!out_) throw IoError("cannot write " + part_.string());
  out_ << kCsvHeader << '\n' << std::flush;
}

void CsvLog::append(const StepRecord& row) {
  out_ << format_csv_row(row) << '\n' << std::flush;
  if (!out_) throw IoError("write failed for " + part_.string());
}

void CsvLog::finish() {
  out_.close();
  std::error_code ec;
  fs::rename(part_, path_, ec);
  if (ec) throw IoError("cannot rename " + part_.string() + ": " + ec.message());
}

void write_csv(const fs::path& path, const ConvergenceRecord& record) {
  std::string text = std::string(kCsvHeader) + '\n';
  for (const auto& r : record) text += format_csv_row(r) + '\n';
  write_atomic(path, text);
}

std::string format_summary(const RunSummary& s) {
  std::ostringstream out;
  out << "method " << s.method << '\n'
      << "problem " << s.problem << '\n'
      << "compliance " << real(s.compliance) << '\n'
      << "volume_fraction " << real(s.volume_fraction) << '\n'
      << "iterations " << s.iterations << '\n'
      << "volume_reductions " << s.volume_reductions << '\n'
      << "converged " << (s.converged ? "yes" : "no") << '\n'
      << "gray_elements " << s.gray_elements << '\n'
      << "seconds " << real(s.seconds) << '\n';
  return out.str();
}

}  // namespace cpdtopo
