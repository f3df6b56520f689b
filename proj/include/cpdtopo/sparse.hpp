#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace cpdtopo {

/// Compressed sparse row matrix with sorted column indices per row.
struct CsrMatrix {
  std::int32_t rows = 0;
  std::int32_t cols = 0;
  std::vector<std::int32_t> row_ptr;
  std::vector<std::int32_t> col;
  std::vector<double> val;

  std::size_t nnz() const noexcept { return val.size(); }

  /// Entry (r, c); zero when outside the pattern.
  double at(std::int32_t r, std::int32_t c) const noexcept;

  std::vector<double> diagonal() const;
};

struct PcgOptions {
  double rel_tol = 1e-8;
  int max_iterations = 0;  // 0 -> 10 * rows
};

struct PcgResult {
  int iterations = 0;
  double rel_residual = 0.0;
  bool converged = false;
};

/// Jacobi-preconditioned conjugate gradients on a symmetric positive definite
/// matrix. `x` holds the initial guess on entry and the solution on exit.
PcgResult pcg_solve(const CsrMatrix& a, std::span<const double> b, std::span<double> x,
                    const PcgOptions& options);

}  // namespace cpdtopo
