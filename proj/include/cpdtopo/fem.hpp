#pragma once

#include <array>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "cpdtopo/kernels.hpp"
#include "cpdtopo/mesh.hpp"
#include "cpdtopo/sparse.hpp"

namespace cpdtopo {

/// Voigt order (xx, yy, zz, xy, xz, yz).
using Matrix6 = Eigen::Matrix<double, 6, 6>;
using Matrix6x24 = Eigen::Matrix<double, 6, 24>;
/// Row-major so that data() can be handed to the kernels directly.
using Matrix24 = Eigen::Matrix<double, 24, 24, Eigen::RowMajor>;

/// Trilinear shape functions N1..N8 at natural coordinates.
std::array<double, 8> shape_functions(double xi1, double xi2, double xi3);

/// dN_i/dxi_j at natural coordinates.
std::array<std::array<double, 3>, 8> shape_gradients(double xi1, double xi2, double xi3);

/// Strain-displacement matrix of a cube of edge h; throws InvalidArgument for h <= 0.
Matrix6x24 strain_displacement(double xi1, double xi2, double xi3, double h);

/// Isotropic Hooke matrix; throws InvalidArgument unless E > 0 and 0 <= nu < 0.5.
Matrix6 constitutive_matrix(double E, double nu);

/// Integral of B^T H B over the cube, 2x2x2 Gauss rule.
Matrix24 element_stiffness(const Matrix6& H, double h);

/// E_min + (E - E_min) * rho_e.
std::vector<double> linear_interpolation(std::span<const double> rho, double E, double E_min);

/// E_min + (E - E_min) * rho_e^p.
std::vector<double> power_interpolation(std::span<const double> rho, double E, double E_min,
                                        double p);

/// Holds the global sparsity pattern and gather map of a mesh so repeated
/// assemblies only rewrite values.
class StiffnessAssembler {
 public:
  StiffnessAssembler(const VoxelMesh& mesh, const Matrix24& ke);

  /// K = sum_e factors[e] * Ke scattered to the element DOFs.
  CsrMatrix assemble(std::span<const double> factors) const;

  const CsrMatrix& pattern() const noexcept { return pattern_; }
  const Matrix24& element_matrix() const noexcept { return ke_; }

 private:
  std::size_t num_elements_;
  Matrix24 ke_;
  CsrMatrix pattern_;
  kernels::AssemblyMap map_;
};

struct GlobalSystem {
  CsrMatrix K;                   // full m x m, before constraints
  std::vector<double> f;         // length m
  std::vector<Index> fixed_dofs; // sorted
};

/// K(rho) only; f is zero and no DOF is fixed.
GlobalSystem assemble(const VoxelMesh& mesh, std::span<const double> rho, const Matrix24& ke,
                      double E, double E_min);

/// K(rho) with the problem's loads and supports.
GlobalSystem assemble(const ProblemDef& problem, std::span<const double> rho,
                      const Matrix24& ke);

struct SolverOptions {
  double rel_tol = 1e-8;
  int max_iterations = 0;             // 0 -> 10 * free DOFs
  std::size_t direct_threshold = 3000; // sparse Cholesky at or below this many free DOFs
};

struct SolveResult {
  std::vector<double> u;  // length m, fixed DOFs exactly zero
  int iterations = 0;
  double rel_residual = 0.0;
  bool direct = false;
};

/// Solves K u = f on the free DOFs (row/column elimination of fixed DOFs).
/// Throws InvalidProblem when nothing is fixed or the reduced matrix is not
/// positive definite, SolverFailure when PCG misses the tolerance.
SolveResult solve_displacements(const GlobalSystem& system, const SolverOptions& options = {},
                                std::span<const double> initial_guess = {});

/// Reference dense Cholesky solve on the free DOFs, used as a test oracle.
std::vector<double> solve_dense(const GlobalSystem& system);

/// c_e = 0.5 * u_e^T (E Ke) u_e.
std::vector<double> element_energies(const VoxelMesh& mesh, std::span<const double> u,
                                     const Matrix24& ke, double E);

struct Compliance {
  double strain_energy = 0.0;  // C = 0.5 u^T K u
  double reported = 0.0;       // 2C, the value tabulated as "compliance"
};

Compliance compliance(const GlobalSystem& system, std::span<const double> u);

/// Reduced (free-DOF) view of a global system.
struct ReducedSystem {
  CsrMatrix K;
  std::vector<double> f;
  std::vector<Index> free_dofs;
};

ReducedSystem reduce(const GlobalSystem& system);

}  // namespace cpdtopo
