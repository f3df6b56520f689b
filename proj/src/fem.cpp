#include "cpdtopo/fem.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "cpdtopo/error.hpp"

namespace cpdtopo {

namespace {

constexpr double kGauss2 = 0.57735026918962576451;  // 1/sqrt(3)

}  // namespace

std::array<double, 8> shape_functions(double xi1, double xi2, double xi3) {
  std::array<double, 8> n{};
  for (int i = 0; i < 8; ++i) {
    const auto& s = VoxelMesh::kLocalSigns[i];
    n[i] = 0.125 * (1.0 + s[0] * xi1) * (1.0 + s[1] * xi2) * (1.0 + s[2] * xi3);
  }
  return n;
}

std::array<std::array<double, 3>, 8> shape_gradients(double xi1, double xi2, double xi3) {
  std::array<std::array<double, 3>, 8> g{};
  for (int i = 0; i < 8; ++i) {
    const auto& s = VoxelMesh::kLocalSigns[i];
    const double a = 1.0 + s[0] * xi1;
    const double b = 1.0 + s[1] * xi2;
    const double c = 1.0 + s[2] * xi3;
    g[i] = {0.125 * s[0] * b * c, 0.125 * a * s[1] * c, 0.125 * a * b * s[2]};
  }
  return g;
}

Matrix6x24 strain_displacement(double xi1, double xi2, double xi3, double h) {
  if (!(h > 0.0)) throw InvalidArgument("element edge length must be positive");
  const double scale = 2.0 / h;  // d/dx = (2/h) d/dxi on the affine cube map
  const auto g = shape_gradients(xi1, xi2, xi3);
  Matrix6x24 b = Matrix6x24::Zero();
  for (int i = 0; i < 8; ++i) {
    const double dx = scale * g[i][0];
    const double dy = scale * g[i][1];
    const double dz = scale * g[i][2];
    const int c = 3 * i;
    b(0, c) = dx;
    b(1, c + 1) = dy;
    b(2, c + 2) = dz;
    b(3, c) = dy;
    b(3, c + 1) = dx;
    b(4, c) = dz;
    b(4, c + 2) = dx;
    b(5, c + 1) = dz;
    b(5, c + 2) = dy;
  }
  return b;
}

Matrix6 constitutive_matrix(double E, double nu) {
  if (!(E > 0.0)) throw InvalidArgument("Young's modulus must be positive");
  if (!(nu >= 0.0) || !(nu < 0.5)) {
    throw InvalidArgument("Poisson ratio must satisfy 0 <= nu < 0.5");
  }
  const double f = E / ((1.0 + nu) * (1.0 - 2.0 * nu));
  Matrix6 h = Matrix6::Zero();
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) h(i, j) = f * (i == j ? 1.0 - nu : nu);
    h(3 + i, 3 + i) = f * (1.0 - 2.0 * nu) / 2.0;
  }
  return h;
}

Matrix24 element_stiffness(const Matrix6& H, double h) {
  if (!(h > 0.0)) throw InvalidArgument("element edge length must be positive");
  const double det_j = (h / 2.0) * (h / 2.0) * (h / 2.0);
  Matrix24 ke = Matrix24::Zero();
  const double pts[2] = {-kGauss2, kGauss2};
  for (double a : pts) {
    for (double b : pts) {
      for (double c : pts) {
        const Matrix6x24 bm = strain_displacement(a, b, c, h);
        ke.noalias() += det_j * (bm.transpose() * H * bm);
      }
    }
  }
  // Symmetrize away the last-bit asymmetry of the triple product.
  const Matrix24 sym = 0.5 * (ke + ke.transpose());
  return sym;
}

std::vector<double> linear_interpolation(std::span<const double> rho, double E, double E_min) {
  std::vector<double> out(rho.size());
  for (std::size_t e = 0; e < rho.size(); ++e) out[e] = E_min + (E - E_min) * rho[e];
  return out;
}

std::vector<double> power_interpolation(std::span<const double> rho, double E, double E_min,
                                        double p) {
  std::vector<double> out(rho.size());
  for (std::size_t e = 0; e < rho.size(); ++e) {
    out[e] = E_min + (E - E_min) * std::pow(rho[e], p);
  }
  return out;
}

StiffnessAssembler::StiffnessAssembler(const VoxelMesh& mesh, const Matrix24& ke)
    : num_elements_(mesh.num_elements()), ke_(ke) {
  const int nx = mesh.nelx() + 1;
  const int ny = mesh.nely() + 1;
  const int nz = mesh.nelz() + 1;
  const auto m = static_cast<std::int32_t>(mesh.num_dofs());

  // Node-to-node adjacency of a structured grid: the 3x3x3 block around each
  // node. Looping k, j, i ascending yields ascending column indices.
  pattern_.rows = m;
  pattern_.cols = m;
  pattern_.row_ptr.assign(m + 1, 0);
  for (int k = 0; k < nz; ++k) {
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        std::vector<std::int32_t> cols;
        for (int kk = std::max(0, k - 1); kk <= std::min(nz - 1, k + 1); ++kk) {
          for (int jj = std::max(0, j - 1); jj <= std::min(ny - 1, j + 1); ++jj) {
            for (int ii = std::max(0, i - 1); ii <= std::min(nx - 1, i + 1); ++ii) {
              const std::int32_t b = mesh.node_index(ii, jj, kk);
              for (int d = 0; d < 3; ++d) cols.push_back(3 * b + d);
            }
          }
        }
        const std::int32_t a = mesh.node_index(i, j, k);
        for (int d = 0; d < 3; ++d) {
          const std::int32_t row = 3 * a + d;
          pattern_.row_ptr[row + 1] = static_cast<std::int32_t>(cols.size());
        }
      }
    }
  }
  for (std::int32_t r = 0; r < m; ++r) pattern_.row_ptr[r + 1] += pattern_.row_ptr[r];
  pattern_.col.resize(pattern_.row_ptr[m]);
  pattern_.val.assign(pattern_.row_ptr[m], 0.0);
  for (int k = 0; k < nz; ++k) {
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        const std::int32_t a = mesh.node_index(i, j, k);
        for (int d = 0; d < 3; ++d) {
          std::int32_t p = pattern_.row_ptr[3 * a + d];
          for (int kk = std::max(0, k - 1); kk <= std::min(nz - 1, k + 1); ++kk) {
            for (int jj = std::max(0, j - 1); jj <= std::min(ny - 1, j + 1); ++jj) {
              for (int ii = std::max(0, i - 1); ii <= std::min(nx - 1, i + 1); ++ii) {
                const std::int32_t b = mesh.node_index(ii, jj, kk);
                for (int dd = 0; dd < 3; ++dd) pattern_.col[p++] = 3 * b + dd;
              }
            }
          }
        }
      }
    }
  }

  auto position = [this](std::int32_t row, std::int32_t col) {
    const auto first = pattern_.col.begin() + pattern_.row_ptr[row];
    const auto last = pattern_.col.begin() + pattern_.row_ptr[row + 1];
    return static_cast<std::size_t>(std::lower_bound(first, last, col) - pattern_.col.begin());
  };

  // Two passes over elements in ascending order: count, then fill. Each
  // nonzero's contribution list therefore comes out sorted by element.
  const std::size_t nnz = pattern_.nnz();
  map_.ptr.assign(nnz + 1, 0);
  const auto ne = static_cast<Index>(mesh.num_elements());
  for (Index e = 0; e < ne; ++e) {
    const auto dofs = mesh.element_dofs(e);
    for (int r = 0; r < 24; ++r) {
      for (int c = 0; c < 24; ++c) ++map_.ptr[position(dofs[r], dofs[c]) + 1];
    }
  }
  for (std::size_t p = 0; p < nnz; ++p) map_.ptr[p + 1] += map_.ptr[p];
  map_.element.resize(map_.ptr[nnz]);
  map_.local.resize(map_.ptr[nnz]);
  std::vector<std::int64_t> cursor(map_.ptr.begin(), map_.ptr.end() - 1);
  for (Index e = 0; e < ne; ++e) {
    const auto dofs = mesh.element_dofs(e);
    for (int r = 0; r < 24; ++r) {
      for (int c = 0; c < 24; ++c) {
        const auto q = cursor[position(dofs[r], dofs[c])]++;
        map_.element[q] = e;
        map_.local[q] = static_cast<std::int16_t>(24 * r + c);
      }
    }
  }
}

CsrMatrix StiffnessAssembler::assemble(std::span<const double> factors) const {
  if (factors.size() != num_elements_) {
    throw InvalidArgument("interpolation factor count does not match element count");
  }
  CsrMatrix k = pattern_;
  kernels::omp::assemble_values(map_, factors, std::span<const double>(ke_.data(), 576), k.val);
  return k;
}

GlobalSystem assemble(const VoxelMesh& mesh, std::span<const double> rho, const Matrix24& ke,
                      double E, double E_min) {
  if (rho.size() != mesh.num_elements()) {
    throw InvalidArgument("density length " + std::to_string(rho.size()) +
                          " does not match element count " +
                          std::to_string(mesh.num_elements()));
  }
  const StiffnessAssembler assembler(mesh, ke);
  GlobalSystem system;
  system.K = assembler.assemble(linear_interpolation(rho, E, E_min));
  system.f.assign(mesh.num_dofs(), 0.0);
  return system;
}

GlobalSystem assemble(const ProblemDef& problem, std::span<const double> rho,
                      const Matrix24& ke) {
  GlobalSystem system =
      assemble(problem.mesh, rho, ke, problem.material.E, problem.material.E_min);
  system.f = problem.load_vector();
  system.fixed_dofs = problem.fixed_dofs;
  return system;
}

ReducedSystem reduce(const GlobalSystem& system) {
  const CsrMatrix& k = system.K;
  std::vector<std::int32_t> map(k.rows, -1);
  ReducedSystem r;
  {
    auto it = system.fixed_dofs.begin();
    for (std::int32_t d = 0; d < k.rows; ++d) {
      while (it != system.fixed_dofs.end() && *it < d) ++it;
      if (it != system.fixed_dofs.end() && *it == d) continue;
      map[d] = static_cast<std::int32_t>(r.free_dofs.size());
      r.free_dofs.push_back(d);
    }
  }
  const auto n = static_cast<std::int32_t>(r.free_dofs.size());
  r.K.rows = n;
  r.K.cols = n;
  r.K.row_ptr.assign(n + 1, 0);
  r.f.resize(n);
  for (std::int32_t i = 0; i < n; ++i) {
    const std::int32_t row = r.free_dofs[i];
    r.f[i] = system.f[row];
    for (std::int32_t p = k.row_ptr[row]; p < k.row_ptr[row + 1]; ++p) {
      const std::int32_t c = map[k.col[p]];
      if (c < 0) continue;
      r.K.col.push_back(c);
      r.K.val.push_back(k.val[p]);
    }
    r.K.row_ptr[i + 1] = static_cast<std::int32_t>(r.K.col.size());
  }
  return r;
}

namespace {

double reduced_residual(const CsrMatrix& k, std::span<const double> f,
                        std::span<const double> x) {
  std::vector<double> r(f.size());
  kernels::omp::spmv(k, x, r);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= f[i];
  const double fn = std::sqrt(kernels::omp::dot(f, f));
  return std::sqrt(kernels::omp::dot(r, r)) / fn;
}

std::vector<double> dense_cholesky(const ReducedSystem& r) {
  const auto n = r.K.rows;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (std::int32_t i = 0; i < n; ++i) {
    for (std::int32_t p = r.K.row_ptr[i]; p < r.K.row_ptr[i + 1]; ++p) a(i, r.K.col[p]) = r.K.val[p];
  }
  const Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) {
    throw InvalidProblem("reduced stiffness matrix is not positive definite");
  }
  const Eigen::VectorXd x = llt.solve(Eigen::Map<const Eigen::VectorXd>(r.f.data(), n));
  return {x.data(), x.data() + n};
}

std::vector<double> sparse_cholesky(const ReducedSystem& r) {
  const auto n = r.K.rows;
  // CSR of a symmetric matrix read as CSC is the same matrix.
  const Eigen::Map<const Eigen::SparseMatrix<double, Eigen::ColMajor, std::int32_t>> a(
      n, n, static_cast<std::int32_t>(r.K.nnz()), r.K.row_ptr.data(), r.K.col.data(),
      r.K.val.data());
  const Eigen::SimplicialLLT<Eigen::SparseMatrix<double>, Eigen::Lower> llt(a);
  if (llt.info() != Eigen::Success) {
    throw InvalidProblem("reduced stiffness matrix is not positive definite");
  }
  const Eigen::VectorXd x = llt.solve(Eigen::Map<const Eigen::VectorXd>(r.f.data(), n));
  return {x.data(), x.data() + n};
}

}  // namespace

SolveResult solve_displacements(const GlobalSystem& system, const SolverOptions& options,
                                std::span<const double> initial_guess) {
  if (system.fixed_dofs.empty()) {
    throw InvalidProblem("no supports: the stiffness matrix is singular");
  }
  if (system.f.size() != static_cast<std::size_t>(system.K.rows)) {
    throw InvalidArgument("load vector length does not match the stiffness matrix");
  }
  const ReducedSystem r = reduce(system);
  SolveResult out;
  out.u.assign(system.K.rows, 0.0);
  if (kernels::omp::dot(r.f, r.f) == 0.0) return out;

  std::vector<double> x(r.free_dofs.size(), 0.0);
  if (r.free_dofs.size() <= options.direct_threshold) {
    x = sparse_cholesky(r);
    out.direct = true;
  } else {
    if (initial_guess.size() == out.u.size()) {
      for (std::size_t i = 0; i < x.size(); ++i) x[i] = initial_guess[r.free_dofs[i]];
    }
    PcgOptions pcg;
    pcg.rel_tol = options.rel_tol;
    pcg.max_iterations = options.max_iterations;
    const PcgResult res = pcg_solve(r.K, r.f, x, pcg);
    out.iterations = res.iterations;
    if (!res.converged) {
      throw SolverFailure("PCG did not reach relative residual " +
                              std::to_string(options.rel_tol) + " (got " +
                              std::to_string(res.rel_residual) + ")",
                          res.rel_residual, res.iterations);
    }
  }
  out.rel_residual = reduced_residual(r.K, r.f, x);
  for (std::size_t i = 0; i < x.size(); ++i) out.u[r.free_dofs[i]] = x[i];
  return out;
}

std::vector<double> solve_dense(const GlobalSystem& system) {
  if (system.fixed_dofs.empty()) {
    throw InvalidProblem("no supports: the stiffness matrix is singular");
  }
  const ReducedSystem r = reduce(system);
  std::vector<double> u(system.K.rows, 0.0);
  const auto x = dense_cholesky(r);
  for (std::size_t i = 0; i < x.size(); ++i) u[r.free_dofs[i]] = x[i];
  return u;
}

std::vector<double> element_energies(const VoxelMesh& mesh, std::span<const double> u,
                                     const Matrix24& ke, double E) {
  if (u.size() != mesh.num_dofs()) {
    throw InvalidArgument("displacement length does not match DOF count");
  }
  std::vector<double> c(mesh.num_elements());
  const std::vector<double> scale(mesh.num_elements(), E);
  kernels::omp::element_energies(mesh, u, std::span<const double>(ke.data(), 576), scale, c);
  return c;
}

Compliance compliance(const GlobalSystem& system, std::span<const double> u) {
  std::vector<double> ku(u.size());
  kernels::omp::spmv(system.K, u, ku);
  Compliance c;
  c.strain_energy = 0.5 * kernels::omp::dot(u, ku);
  c.reported = 2.0 * c.strain_energy;
  return c;
}

}  // namespace cpdtopo
