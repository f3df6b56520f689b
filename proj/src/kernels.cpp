#include "cpdtopo/kernels.hpp"

#include <algorithm>
#include <array>

#include "cpdtopo/dual.hpp"

namespace cpdtopo::kernels {

namespace {

inline double row_dot(const CsrMatrix& a, std::int32_t r, std::span<const double> x) {
  double s = 0.0;
  for (std::int32_t p = a.row_ptr[r]; p < a.row_ptr[r + 1]; ++p) s += a.val[p] * x[a.col[p]];
  return s;
}

inline double gather(const AssemblyMap& map, std::size_t p, std::span<const double> factors,
                     std::span<const double> ke) {
  double s = 0.0;
  for (std::int64_t q = map.ptr[p]; q < map.ptr[p + 1]; ++q) {
    s += factors[map.element[q]] * ke[map.local[q]];
  }
  return s;
}

inline double element_energy(const VoxelMesh& mesh, Index e, std::span<const double> u,
                             std::span<const double> ke) {
  std::array<double, 24> ue{};
  const auto nodes = mesh.element_nodes(e);
  for (int a = 0; a < 8; ++a) {
    for (int d = 0; d < 3; ++d) ue[3 * a + d] = u[3 * static_cast<std::size_t>(nodes[a]) + d];
  }
  double s = 0.0;
  for (int i = 0; i < 24; ++i) {
    double row = 0.0;
    for (int j = 0; j < 24; ++j) row += ke[24 * i + j] * ue[j];
    s += ue[i] * row;
  }
  return 0.5 * s;
}

template <class Term>
double chunked_sum(std::size_t n, Term term) {
  const std::size_t chunks = (n + kReductionChunk - 1) / kReductionChunk;
  std::vector<double> partial(chunks, 0.0);
  const auto nc = static_cast<std::int64_t>(chunks);
#pragma omp parallel for schedule(static)
  for (std::int64_t c = 0; c < nc; ++c) {
    const std::size_t lo = static_cast<std::size_t>(c) * kReductionChunk;
    const std::size_t hi = std::min(n, lo + kReductionChunk);
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += term(i);
    partial[c] = s;
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

}  // namespace

namespace serial {

void spmv(const CsrMatrix& a, std::span<const double> x, std::span<double> y) {
  for (std::int32_t r = 0; r < a.rows; ++r) y[r] = row_dot(a, r, x);
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double sum(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s += v;
  return s;
}

void assemble_values(const AssemblyMap& map, std::span<const double> factors,
                     std::span<const double> ke, std::span<double> values) {
  for (std::size_t p = 0; p < values.size(); ++p) values[p] = gather(map, p, factors, ke);
}

void element_energies(const VoxelMesh& mesh, std::span<const double> u,
                      std::span<const double> ke, std::span<const double> scale,
                      std::span<double> out) {
  for (Index e = 0; e < static_cast<Index>(out.size()); ++e) {
    const double s = scale.empty() ? 1.0 : scale[e];
    out[e] = s * element_energy(mesh, e, u, ke);
  }
}

void solve_sigma(std::span<const double> theta, double beta, std::span<double> sigma) {
  for (std::size_t e = 0; e < theta.size(); ++e) {
    sigma[e] = detail::positive_cubic_root(theta[e], beta);
  }
}

}  // namespace serial

namespace omp {

void spmv(const CsrMatrix& a, std::span<const double> x, std::span<double> y) {
#pragma omp parallel for schedule(static)
  for (std::int32_t r = 0; r < a.rows; ++r) y[r] = row_dot(a, r, x);
}

double dot(std::span<const double> a, std::span<const double> b) {
  return chunked_sum(a.size(), [&](std::size_t i) { return a[i] * b[i]; });
}

double sum(std::span<const double> a) {
  return chunked_sum(a.size(), [&](std::size_t i) { return a[i]; });
}

void assemble_values(const AssemblyMap& map, std::span<const double> factors,
                     std::span<const double> ke, std::span<double> values) {
  const auto n = static_cast<std::int64_t>(values.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t p = 0; p < n; ++p) {
    values[p] = gather(map, static_cast<std::size_t>(p), factors, ke);
  }
}

void element_energies(const VoxelMesh& mesh, std::span<const double> u,
                      std::span<const double> ke, std::span<const double> scale,
                      std::span<double> out) {
  const auto n = static_cast<Index>(out.size());
#pragma omp parallel for schedule(static)
  for (Index e = 0; e < n; ++e) {
    const double s = scale.empty() ? 1.0 : scale[e];
    out[e] = s * element_energy(mesh, e, u, ke);
  }
}

void solve_sigma(std::span<const double> theta, double beta, std::span<double> sigma) {
  const auto n = static_cast<std::int64_t>(theta.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t e = 0; e < n; ++e) {
    sigma[e] = detail::positive_cubic_root(theta[e], beta);
  }
}

}  // namespace omp

}  // namespace cpdtopo::kernels
