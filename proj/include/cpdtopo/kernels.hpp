#pragma once

// Data-parallel inner loops. Every kernel exists twice: `serial` is the
// straightforward reference used by tests, `omp` is the OpenMP version used by
// the solvers. Except for `dot` and `sum`, both variants perform the same
// floating-point operations per output entry and agree bitwise. The `omp`
// reductions sum fixed-size chunks and then add the partials in chunk order,
// so their result does not depend on the thread count.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cpdtopo/mesh.hpp"
#include "cpdtopo/sparse.hpp"

namespace cpdtopo::kernels {

inline constexpr std::size_t kReductionChunk = 2048;

/// Gather list for row-wise assembly: nonzero p of the global matrix receives
/// sum_{q in [ptr[p], ptr[p+1])} factor[element[q]] * Ke[local[q]].
struct AssemblyMap {
  std::vector<std::int64_t> ptr;
  std::vector<std::int32_t> element;
  std::vector<std::int16_t> local;  // row-major index into the 24x24 Ke
};

namespace serial {

void spmv(const CsrMatrix& a, std::span<const double> x, std::span<double> y);
double dot(std::span<const double> a, std::span<const double> b);
double sum(std::span<const double> a);

void assemble_values(const AssemblyMap& map, std::span<const double> factors,
                     std::span<const double> ke, std::span<double> values);

/// out[e] = 0.5 * scale[e] * u_e^T Ke u_e (scale empty -> 1).
void element_energies(const VoxelMesh& mesh, std::span<const double> u,
                      std::span<const double> ke, std::span<const double> scale,
                      std::span<double> out);

void solve_sigma(std::span<const double> theta, double beta, std::span<double> sigma);

}  // namespace serial

namespace omp {

void spmv(const CsrMatrix& a, std::span<const double> x, std::span<double> y);
double dot(std::span<const double> a, std::span<const double> b);
double sum(std::span<const double> a);

void assemble_values(const AssemblyMap& map, std::span<const double> factors,
                     std::span<const double> ke, std::span<double> values);

void element_energies(const VoxelMesh& mesh, std::span<const double> u,
                      std::span<const double> ke, std::span<const double> scale,
                      std::span<double> out);

void solve_sigma(std::span<const double> theta, double beta, std::span<double> sigma);

}  // namespace omp

}  // namespace cpdtopo::kernels
