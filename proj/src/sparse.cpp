#include "cpdtopo/sparse.hpp"

#include <algorithm>
#include <cmath>

#include "cpdtopo/error.hpp"
#include "cpdtopo/kernels.hpp"

namespace cpdtopo {

double CsrMatrix::at(std::int32_t r, std::int32_t c) const noexcept {
  const auto first = col.begin() + row_ptr[r];
  const auto last = col.begin() + row_ptr[r + 1];
  const auto it = std::lower_bound(first, last, c);
  if (it == last || *it != c) return 0.0;
  return val[it - col.begin()];
}

std::vector<double> CsrMatrix::diagonal() const {
  std::vector<double> d(rows, 0.0);
  for (std::int32_t r = 0; r < rows; ++r) d[r] = at(r, r);
  return d;
}

PcgResult pcg_solve(const CsrMatrix& a, std::span<const double> b, std::span<double> x,
                    const PcgOptions& options) {
  namespace k = kernels::omp;
  const auto n = static_cast<std::size_t>(a.rows);
  if (b.size() != n || x.size() != n) throw InvalidArgument("PCG dimension mismatch");

  PcgResult res;
  const double bnorm = std::sqrt(k::dot(b, b));
  if (bnorm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    res.converged = true;
    return res;
  }
  std::vector<double> inv_diag = a.diagonal();
  for (double& d : inv_diag) {
    if (!(d > 0.0)) throw InvalidProblem("matrix has a non-positive diagonal entry");
    d = 1.0 / d;
  }

  std::vector<double> r(n), z(n), p(n), q(n);
  k::spmv(a, x, q);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - q[i];
  double rnorm = std::sqrt(k::dot(r, r));
  if (rnorm / bnorm <= options.rel_tol) {
    res.rel_residual = rnorm / bnorm;
    res.converged = true;
    return res;
  }
  for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
  p = z;
  double rz = k::dot(r, z);

  const int cap = options.max_iterations > 0 ? options.max_iterations : 10 * a.rows;
  for (int it = 1; it <= cap; ++it) {
    k::spmv(a, p, q);
    const double pq = k::dot(p, q);
    if (!(pq > 0.0)) throw InvalidProblem("matrix is not positive definite");
    const double alpha = rz / pq;
    const auto m = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < m; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * q[i];
      z[i] = inv_diag[i] * r[i];
    }
    rnorm = std::sqrt(k::dot(r, r));
    res.iterations = it;
    res.rel_residual = rnorm / bnorm;
    if (res.rel_residual <= options.rel_tol) {
      res.converged = true;
      return res;
    }
    const double rz_new = k::dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < m; ++i) p[i] = z[i] + beta * p[i];
  }
  return res;
}

}  // namespace cpdtopo
