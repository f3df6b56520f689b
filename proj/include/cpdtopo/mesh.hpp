#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace cpdtopo {

using Index = std::int32_t;

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

/// Closed axis-aligned box in node coordinates (unit element edges).
struct Box {
  Vec3 lo;
  Vec3 hi;
};

enum class Axis { kX, kY, kZ };

enum class Passive : std::uint8_t { kDesignable = 0, kVoid = 1, kSolid = 2 };

/// Structured grid of unit-cube hex8 elements.
///
/// Nodes are numbered i + j*(nelx+1) + k*(nelx+1)*(nely+1) and elements
/// i + j*nelx + k*nelx*nely, x fastest. Each node carries three DOFs
/// (3*node + {0,1,2} for x, y, z). Local node order within an element follows
/// the natural-coordinate sign pattern (-,-,-), (+,-,-), (+,+,-), (-,+,-) on
/// the bottom face, then the same four on the top face.
class VoxelMesh {
 public:
  /// Local (xi1, xi2, xi3) sign of each of the 8 element nodes.
  static constexpr std::array<std::array<int, 3>, 8> kLocalSigns = {{
      {-1, -1, -1}, {1, -1, -1}, {1, 1, -1}, {-1, 1, -1},
      {-1, -1, 1},  {1, -1, 1},  {1, 1, 1},  {-1, 1, 1},
  }};

  VoxelMesh(int nelx, int nely, int nelz);

  int nelx() const noexcept { return nelx_; }
  int nely() const noexcept { return nely_; }
  int nelz() const noexcept { return nelz_; }

  double element_size() const noexcept { return 1.0; }
  double element_volume() const noexcept { return 1.0; }
  double total_volume() const noexcept {
    return element_volume() * static_cast<double>(num_elements());
  }

  std::size_t num_elements() const noexcept {
    return static_cast<std::size_t>(nelx_) * nely_ * nelz_;
  }
  std::size_t num_nodes() const noexcept {
    return static_cast<std::size_t>(nelx_ + 1) * (nely_ + 1) * (nelz_ + 1);
  }
  std::size_t num_dofs() const noexcept { return 3 * num_nodes(); }

  Index node_index(int i, int j, int k) const noexcept {
    return static_cast<Index>(i + (nelx_ + 1) * (j + (nely_ + 1) * k));
  }
  Index element_index(int i, int j, int k) const noexcept {
    return static_cast<Index>(i + nelx_ * (j + nely_ * k));
  }
  std::array<int, 3> node_grid(Index node) const noexcept;
  std::array<int, 3> element_grid(Index element) const noexcept;

  Vec3 node_position(Index node) const noexcept;
  Vec3 element_centroid(Index element) const noexcept;

  std::span<const Index, 8> element_nodes(Index element) const noexcept {
    return std::span<const Index, 8>(connectivity_.data() + 8 * element, 8);
  }
  std::array<Index, 24> element_dofs(Index element) const noexcept;

  const std::vector<Index>& connectivity() const noexcept { return connectivity_; }

  friend bool operator==(const VoxelMesh& a, const VoxelMesh& b) {
    return a.nelx_ == b.nelx_ && a.nely_ == b.nely_ && a.nelz_ == b.nelz_;
  }

 private:
  int nelx_;
  int nely_;
  int nelz_;
  std::vector<Index> connectivity_;
};

VoxelMesh build_mesh(int nelx, int nely, int nelz);

/// Nodes whose coordinates lie in the closed box, ascending.
std::vector<Index> select_region(const VoxelMesh& mesh, const Box& box);

/// DOF indices of the given nodes, restricted to the flagged components.
std::vector<Index> node_dofs(std::span<const Index> nodes,
                             std::array<bool, 3> components = {true, true, true});

struct Material {
  double E = 1.0;
  double nu = 0.3;
  double E_min = 1e-9;

  friend bool operator==(const Material&, const Material&) = default;
};

struct PointLoad {
  Index dof = 0;
  double value = 0.0;

  friend bool operator==(const PointLoad&, const PointLoad&) = default;
};

struct ProblemDef {
  VoxelMesh mesh;
  std::vector<Index> fixed_dofs;  // sorted, unique
  std::vector<PointLoad> loads;
  Material material;
  double volume_fraction = 0.3;
  std::vector<Passive> passive;  // one entry per element

  explicit ProblemDef(VoxelMesh m)
      : mesh(std::move(m)), passive(mesh.num_elements(), Passive::kDesignable) {}

  /// Throws InvalidProblem when an invariant is violated.
  void validate() const;

  std::vector<double> load_vector() const;
  double forced_solid_volume() const;
  double designable_volume() const;

  friend bool operator==(const ProblemDef&, const ProblemDef&) = default;
};

/// Adds a sorted, de-duplicated set of DOFs to the problem's fixed set.
void add_fixed_dofs(ProblemDef& problem, std::span<const Index> dofs);

/// Forces every element whose centroid lies strictly inside the cylinder to
/// void. `center` holds the two coordinates transverse to `axis` in (x,y,z)
/// order with the axis coordinate removed.
ProblemDef mark_cylindrical_void(ProblemDef problem, Axis axis,
                                 std::array<double, 2> center, double radius);

}  // namespace cpdtopo
