#include "cpdtopo/simp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include <spdlog/spdlog.h>

#include "cpdtopo/error.hpp"

namespace cpdtopo {

void SimpConfig::validate() const {
  if (!(penalty >= 1.0)) throw InvalidArgument("SIMP penalty must be >= 1");
  if (!(move > 0.0 && move <= 1.0)) throw InvalidArgument("move limit must lie in (0, 1]");
  if (!(rho_min > 0.0 && rho_min < 1.0)) throw InvalidArgument("rho_min must lie in (0, 1)");
  if (!(tolerance > 0.0)) throw InvalidArgument("tolerance must be positive");
  if (max_iterations < 1) throw InvalidArgument("max_iterations must be >= 1");
}

SimpResult run_simp(const ProblemDef& problem, const SimpConfig& config, const RecordSink& sink) {
  problem.validate();
  config.validate();
  const VoxelMesh& mesh = problem.mesh;
  const Material& mat = problem.material;
  const std::size_t n = mesh.num_elements();
  const double total = mesh.total_volume();
  const double ve = mesh.element_volume();
  const double target = problem.volume_fraction * total;

  std::vector<Index> designable;
  for (std::size_t e = 0; e < n; ++e) {
    if (problem.passive[e] == Passive::kDesignable) designable.push_back(static_cast<Index>(e));
  }
  if (designable.empty()) throw InvalidProblem("no designable elements");
  const double free_target = target - problem.forced_solid_volume();

  std::vector<double> rho(n, 0.0);
  const double start_value =
      std::clamp(free_target / (ve * static_cast<double>(designable.size())), config.rho_min, 1.0);
  for (std::size_t e = 0; e < n; ++e) {
    if (problem.passive[e] == Passive::kSolid) rho[e] = 1.0;
  }
  for (Index e : designable) rho[e] = start_value;

  const Matrix24 ke = element_stiffness(constitutive_matrix(1.0, mat.nu), mesh.element_size());
  const StiffnessAssembler assembler(mesh, ke);
  const std::vector<double> load = problem.load_vector();

  SimpResult out;
  std::vector<double> u;
  std::vector<double> energy(n);
  std::vector<double> next(n);
  for (int it = 1; it <= config.max_iterations; ++it) {
    const auto start = std::chrono::steady_clock::now();
    GlobalSystem system;
    system.K = assembler.assemble(power_interpolation(rho, mat.E, mat.E_min, config.penalty));
    system.f = load;
    system.fixed_dofs = problem.fixed_dofs;
    SolveResult solved = solve_displacements(system, config.solver, u);
    u = std::move(solved.u);
    const double reported = compliance(system, u).reported;
    kernels::omp::element_energies(mesh, u, std::span<const double>(ke.data(), 576), {}, energy);

    // -dc/drho_e = p rho^(p-1) (E - E_min) u_e^T Ke u_e, for the reported 2C.
    std::vector<double> b(designable.size());
    for (std::size_t i = 0; i < designable.size(); ++i) {
      const Index e = designable[i];
      b[i] = config.penalty * std::pow(rho[e], config.penalty - 1.0) * (mat.E - mat.E_min) *
             2.0 * energy[e] / ve;
    }
    next = rho;
    auto volume_at = [&](double lambda) {
      double vol = 0.0;
      for (std::size_t i = 0; i < designable.size(); ++i) {
        const Index e = designable[i];
        const double lo = std::max(config.rho_min, rho[e] - config.move);
        const double hi = std::min(1.0, rho[e] + config.move);
        const double trial = lambda > 0.0 ? rho[e] * std::sqrt(b[i] / lambda) : hi;
        next[e] = std::clamp(trial, lo, hi);
        vol += ve * next[e];
      }
      return vol;
    };
    double l1 = 0.0;
    double l2 = 1.0;
    while (volume_at(l2) > free_target && l2 < 1e300) l2 *= 2.0;
    int steps = 0;
    double residual = std::abs(volume_at(l2) - free_target) / total;
    while (residual > config.volume_tolerance && steps < 2000) {
      const double mid = 0.5 * (l1 + l2);
      if (mid <= l1 || mid >= l2) break;
      const double vol = volume_at(mid);
      ++steps;
      residual = std::abs(vol - free_target) / total;
      if (vol > free_target) {
        l1 = mid;
      } else {
        l2 = mid;
      }
    }
    if (residual > config.volume_tolerance) {
      throw RunFailure("SIMP bisection missed the volume target (residual " +
                           std::to_string(residual) + ")",
                       out.record);
    }

    StepRecord row;
    row.gamma = it;
    row.compliance = reported;
    row.inner_iterations = steps;
    double vol = 0.0;
    for (std::size_t e = 0; e < n; ++e) {
      row.change = std::max(row.change, std::abs(next[e] - rho[e]));
      vol += ve * next[e];
    }
    row.volume = vol / total;
    rho.swap(next);
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.record.push_back(row);
    if (sink) sink(row);
    spdlog::info("simp it {:3d}: compliance {:.6g} V {:.6f} change {:.3g}", it, reported,
                 row.volume, row.change);
    if (row.change <= config.tolerance) {
      out.converged = true;
      break;
    }
  }
  if (!out.converged) spdlog::warn("simp: no convergence in {} iterations", config.max_iterations);
  out.rho = std::move(rho);
  out.u = std::move(u);
  return out;
}

}  // namespace cpdtopo
