#include "cpdtopo/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cpdtopo/error.hpp"

namespace cpdtopo {

VoxelMesh::VoxelMesh(int nelx, int nely, int nelz)
    : nelx_(nelx), nely_(nely), nelz_(nelz) {
  if (nelx < 1 || nely < 1 || nelz < 1) {
    throw InvalidArgument("mesh dimensions must be >= 1, got " +
                          std::to_string(nelx) + "x" + std::to_string(nely) +
                          "x" + std::to_string(nelz));
  }
  connectivity_.resize(8 * num_elements());
  Index* out = connectivity_.data();
  for (int k = 0; k < nelz_; ++k) {
    for (int j = 0; j < nely_; ++j) {
      for (int i = 0; i < nelx_; ++i) {
        for (const auto& s : kLocalSigns) {
          *out++ = node_index(i + (s[0] > 0), j + (s[1] > 0), k + (s[2] > 0));
        }
      }
    }
  }
}

std::array<int, 3> VoxelMesh::node_grid(Index node) const noexcept {
  const int nx = nelx_ + 1;
  const int ny = nely_ + 1;
  return {node % nx, (node / nx) % ny, node / (nx * ny)};
}

std::array<int, 3> VoxelMesh::element_grid(Index element) const noexcept {
  return {element % nelx_, (element / nelx_) % nely_, element / (nelx_ * nely_)};
}

Vec3 VoxelMesh::node_position(Index node) const noexcept {
  const auto g = node_grid(node);
  const double h = element_size();
  return {h * g[0], h * g[1], h * g[2]};
}

Vec3 VoxelMesh::element_centroid(Index element) const noexcept {
  const auto g = element_grid(element);
  const double h = element_size();
  return {h * (g[0] + 0.5), h * (g[1] + 0.5), h * (g[2] + 0.5)};
}

std::array<Index, 24> VoxelMesh::element_dofs(Index element) const noexcept {
  std::array<Index, 24> dofs{};
  const auto nodes = element_nodes(element);
  for (int a = 0; a < 8; ++a) {
    for (int d = 0; d < 3; ++d) dofs[3 * a + d] = 3 * nodes[a] + d;
  }
  return dofs;
}

VoxelMesh build_mesh(int nelx, int nely, int nelz) {
  return VoxelMesh(nelx, nely, nelz);
}

std::vector<Index> select_region(const VoxelMesh& mesh, const Box& box) {
  // Node coordinates are integers times h, so the box reduces to index ranges.
  const double h = mesh.element_size();
  auto range = [h](double lo, double hi, int n) {
    const int a = std::max(0, static_cast<int>(std::ceil(lo / h - 1e-9)));
    const int b = std::min(n, static_cast<int>(std::floor(hi / h + 1e-9)));
    return std::array<int, 2>{a, b};
  };
  const auto rx = range(box.lo.x, box.hi.x, mesh.nelx());
  const auto ry = range(box.lo.y, box.hi.y, mesh.nely());
  const auto rz = range(box.lo.z, box.hi.z, mesh.nelz());

  std::vector<Index> nodes;
  for (int k = rz[0]; k <= rz[1]; ++k) {
    for (int j = ry[0]; j <= ry[1]; ++j) {
      for (int i = rx[0]; i <= rx[1]; ++i) nodes.push_back(mesh.node_index(i, j, k));
    }
  }
  return nodes;
}

std::vector<Index> node_dofs(std::span<const Index> nodes,
                             std::array<bool, 3> components) {
  std::vector<Index> dofs;
  dofs.reserve(3 * nodes.size());
  for (Index n : nodes) {
    for (int d = 0; d < 3; ++d) {
      if (components[d]) dofs.push_back(3 * n + d);
    }
  }
  std::sort(dofs.begin(), dofs.end());
  dofs.erase(std::unique(dofs.begin(), dofs.end()), dofs.end());
  return dofs;
}

void add_fixed_dofs(ProblemDef& problem, std::span<const Index> dofs) {
  auto& fixed = problem.fixed_dofs;
  fixed.insert(fixed.end(), dofs.begin(), dofs.end());
  std::sort(fixed.begin(), fixed.end());
  fixed.erase(std::unique(fixed.begin(), fixed.end()), fixed.end());
}

void ProblemDef::validate() const {
  const auto m = static_cast<Index>(mesh.num_dofs());
  if (fixed_dofs.empty()) throw InvalidProblem("no fixed DOFs: structure is unsupported");
  if (!std::is_sorted(fixed_dofs.begin(), fixed_dofs.end()) ||
      std::adjacent_find(fixed_dofs.begin(), fixed_dofs.end()) != fixed_dofs.end()) {
    throw InvalidProblem("fixed DOF list must be sorted and unique");
  }
  if (fixed_dofs.front() < 0 || fixed_dofs.back() >= m) {
    throw InvalidProblem("fixed DOF out of range");
  }
  bool any_load = false;
  for (const auto& l : loads) {
    if (l.dof < 0 || l.dof >= m) throw InvalidProblem("load DOF out of range");
    if (!std::isfinite(l.value)) throw InvalidProblem("load value is not finite");
    any_load = any_load || l.value != 0.0;
  }
  if (!any_load) throw InvalidProblem("no nonzero load");
  if (!(material.E > 0.0)) throw InvalidProblem("Young's modulus must be positive");
  if (!(material.E_min > 0.0) || !(material.E_min < material.E)) {
    throw InvalidProblem("E_min must satisfy 0 < E_min < E");
  }
  if (!(material.nu >= 0.0) || !(material.nu < 0.5)) {
    throw InvalidProblem("Poisson ratio must satisfy 0 <= nu < 0.5");
  }
  if (!(volume_fraction > 0.0) || volume_fraction > 1.0) {
    throw InvalidProblem("target volume fraction must lie in (0, 1]");
  }
  if (passive.size() != mesh.num_elements()) {
    throw InvalidProblem("passive mask length does not match element count");
  }
  if (forced_solid_volume() > volume_fraction * mesh.total_volume() * (1.0 + 1e-12)) {
    throw InvalidProblem("forced-solid volume exceeds the target volume");
  }
}

std::vector<double> ProblemDef::load_vector() const {
  std::vector<double> f(mesh.num_dofs(), 0.0);
  for (const auto& l : loads) f[l.dof] += l.value;
  return f;
}

double ProblemDef::forced_solid_volume() const {
  return mesh.element_volume() *
         static_cast<double>(std::count(passive.begin(), passive.end(), Passive::kSolid));
}

double ProblemDef::designable_volume() const {
  return mesh.element_volume() *
         static_cast<double>(std::count(passive.begin(), passive.end(), Passive::kDesignable));
}

ProblemDef mark_cylindrical_void(ProblemDef problem, Axis axis,
                                 std::array<double, 2> center, double radius) {
  if (!(radius > 0.0)) throw InvalidArgument("cylinder radius must be positive");
  const auto& mesh = problem.mesh;
  const double r2 = radius * radius;
  std::size_t marked = 0;
  for (Index e = 0; e < static_cast<Index>(mesh.num_elements()); ++e) {
    const Vec3 p = mesh.element_centroid(e);
    double a = 0.0;
    double b = 0.0;
    switch (axis) {
      case Axis::kX: a = p.y; b = p.z; break;
      case Axis::kY: a = p.x; b = p.z; break;
      case Axis::kZ: a = p.x; b = p.y; break;
    }
    const double da = a - center[0];
    const double db = b - center[1];
    if (da * da + db * db < r2) {
      problem.passive[e] = Passive::kVoid;
      ++marked;
    }
  }
  if (marked == mesh.num_elements()) {
    throw InvalidProblem("cylindrical void covers every element");
  }
  return problem;
}

}  // namespace cpdtopo
