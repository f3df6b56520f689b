#include "cpdtopo/cpd.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <queue>

#include <spdlog/spdlog.h>

#include "cpdtopo/error.hpp"

namespace cpdtopo {

void CpdConfig::validate() const {
  if (!(mu > 0.0 && mu < 1.0)) throw InvalidArgument("mu must lie in (0, 1)");
  if (!(beta > 0.0)) throw InvalidArgument("beta must be positive");
  if (!(omega1 > 0.0) || !(omega2 > 0.0)) throw InvalidArgument("omega1 and omega2 must be positive");
  if (!(varsigma0 > 0.0)) throw InvalidArgument("initial varsigma must be positive");
  if (max_outer < 1 || max_inner < 1) throw InvalidArgument("iteration caps must be >= 1");
}

std::vector<double> volume_schedule(double mu, double v0, double vc) {
  if (!(mu > 0.0 && mu < 1.0)) throw InvalidArgument("mu must lie in (0, 1)");
  if (!(vc > 0.0) || !(v0 > 0.0)) throw InvalidArgument("volumes must be positive");
  std::vector<double> out;
  if (vc >= v0) return out;
  const auto n = static_cast<std::size_t>(std::ceil(std::log(vc / v0) / std::log(mu)));
  out.reserve(n);
  for (std::size_t g = 1; g <= n; ++g) out.push_back(v0 * std::pow(mu, static_cast<double>(g)));
  out.back() = vc;
  return out;
}

namespace {

using Clock = std::chrono::steady_clock;

struct Fem {
  const ProblemDef& problem;
  Matrix24 ke;
  StiffnessAssembler assembler;
  std::vector<double> load;

  explicit Fem(const ProblemDef& p)
      : problem(p),
        ke(element_stiffness(constitutive_matrix(1.0, p.material.nu), p.mesh.element_size())),
        assembler(p.mesh, ke),
        load(p.load_vector()) {}

  // Solves K(rho) u = f and returns the interpolation factors used.
  std::vector<double> solve(std::span<const double> rho, const SolverOptions& options,
                            std::vector<double>& u, double& reported) const {
    const Material& mat = problem.material;
    std::vector<double> factors = linear_interpolation(rho, mat.E, mat.E_min);
    GlobalSystem system;
    system.K = assembler.assemble(factors);
    system.f = load;
    system.fixed_dofs = problem.fixed_dofs;
    SolveResult res = solve_displacements(system, options, u);
    u = std::move(res.u);
    reported = compliance(system, u).reported;
    spdlog::debug("fem: {} iterations, residual {:.3e}", res.iterations, res.rel_residual);
    return factors;
  }

  std::vector<double> energies(std::span<const double> u, std::span<const double> factors,
                               EnergyWeighting weighting) const {
    std::vector<double> c(problem.mesh.num_elements());
    std::vector<double> scale;
    if (weighting == EnergyWeighting::kInterpolated) {
      scale.assign(factors.begin(), factors.end());
    } else {
      scale.assign(c.size(), problem.material.E);
    }
    kernels::omp::element_energies(problem.mesh, u, std::span<const double>(ke.data(), 576), scale,
                                   c);
    // Ke is positive semidefinite; negatives are roundoff on rigid motions.
    for (double& x : c) x = std::max(x, 0.0);
    return c;
  }
};

}  // namespace

CpdResult run_cpd(const ProblemDef& problem, const CpdConfig& config, const StepObserver& observer,
                  const RecordSink& sink) {
  problem.validate();
  config.validate();
  const double vc = problem.volume_fraction;
  const std::size_t n = problem.mesh.num_elements();
  const double total = problem.mesh.total_volume();
  const double forced = problem.forced_solid_volume();

  std::vector<Index> designable;
  std::vector<double> rho(n, 0.0);
  for (std::size_t e = 0; e < n; ++e) {
    if (problem.passive[e] == Passive::kDesignable) designable.push_back(static_cast<Index>(e));
    if (problem.passive[e] != Passive::kVoid) rho[e] = 1.0;
  }
  if (designable.empty()) throw InvalidProblem("no designable elements");

  const Fem fem(problem);
  CpdResult out;
  std::vector<double> u;
  double reported = 0.0;
  std::vector<double> factors = fem.solve(rho, config.solver, u, reported);
  std::vector<double> c = fem.energies(u, factors, config.weighting);
  out.initial_compliance = reported;
  spdlog::info("cpd: {} elements ({} designable), initial compliance {:.6g}", n,
               designable.size(), reported);

  KnapsackInstance instance;
  instance.c.resize(designable.size());
  instance.v.assign(designable.size(), problem.mesh.element_volume());
  double varsigma = config.varsigma0;
  double volume = 1.0;

  for (int gamma = 1; gamma <= config.max_outer; ++gamma) {
    const auto start = Clock::now();
    const double next = std::max(volume * config.mu, vc);
    if (next < volume) ++out.volume_reductions;
    volume = next;

    for (std::size_t i = 0; i < designable.size(); ++i) instance.c[i] = c[designable[i]];
    instance.budget = volume * total - forced;

    StepRecord row;
    row.gamma = gamma;
    row.volume = volume;
    std::vector<double> next_rho = rho;
    if (instance.budget <= kVolumeSlack * total) {
      for (Index e : designable) next_rho[e] = 0.0;
    } else {
      KnapsackOptions options;
      options.beta = config.beta;
      options.varsigma0 = varsigma;
      options.omega1 = config.omega1;
      options.max_inner = config.max_inner;
      KnapsackResult ks = knapsack_solve(instance, options);
      if (!ks.converged) {
        spdlog::warn("cpd step {}: knapsack did not converge in {} iterations, retrying with beta {}",
                     gamma, ks.iterations, 10.0 * config.beta);
        options.beta = 10.0 * config.beta;
        const int first = ks.iterations;
        ks = knapsack_solve(instance, options);
        ks.iterations += first;
        if (!ks.converged) {
          throw RunFailure("knapsack did not converge at step " + std::to_string(gamma),
                           out.record, rho);
        }
      }
      if (observer) observer(StepView{gamma, instance, ks, designable});
      for (std::size_t i = 0; i < designable.size(); ++i) next_rho[designable[i]] = ks.rho[i];
      if (ks.state.varsigma > 0.0) varsigma = ks.state.varsigma;
      row.dual = dual_value(ks.state, instance);
      row.inner_iterations = ks.iterations;
    }

    for (std::size_t e = 0; e < n; ++e) row.change = std::max(row.change, std::abs(next_rho[e] - rho[e]));
    rho = std::move(next_rho);
    try {
      factors = fem.solve(rho, config.solver, u, reported);
    } catch (const SolverFailure& err) {
      throw RunFailure(std::string("displacement solve failed: ") + err.what(), out.record, rho);
    }
    c = fem.energies(u, factors, config.weighting);
    row.compliance = reported;
    row.seconds = std::chrono::duration<double>(Clock::now() - start).count();
    out.record.push_back(row);
    if (sink) sink(row);
    spdlog::info("cpd step {:3d}: V {:.4f} compliance {:.6g} dual {:.6g} inner {} change {:.3g}",
                 gamma, volume, reported, row.dual, row.inner_iterations, row.change);

    if (row.change <= config.omega2 && volume <= vc) {
      out.rho = std::move(rho);
      out.u = std::move(u);
      return out;
    }
  }
  throw RunFailure("outer iteration cap reached", out.record, std::move(rho));
}

Components connected_components(std::span<const double> rho, const VoxelMesh& mesh,
                                const ProblemDef* problem) {
  const std::size_t n = mesh.num_elements();
  if (rho.size() != n) throw InvalidArgument("density length does not match element count");
  Components out;
  out.label.assign(n, -1);
  std::queue<Index> queue;
  for (std::size_t s = 0; s < n; ++s) {
    if (rho[s] < 0.5 || out.label[s] >= 0) continue;
    const int id = out.count++;
    out.label[s] = id;
    queue.push(static_cast<Index>(s));
    while (!queue.empty()) {
      const Index e = queue.front();
      queue.pop();
      const auto g = mesh.element_grid(e);
      const int dims[3] = {mesh.nelx(), mesh.nely(), mesh.nelz()};
      for (int axis = 0; axis < 3; ++axis) {
        for (int step : {-1, 1}) {
          auto h = g;
          h[axis] += step;
          if (h[axis] < 0 || h[axis] >= dims[axis]) continue;
          const Index f = mesh.element_index(h[0], h[1], h[2]);
          if (rho[f] < 0.5 || out.label[f] >= 0) continue;
          out.label[f] = id;
          queue.push(f);
        }
      }
    }
  }
  if (problem == nullptr || out.count == 0) return out;

  // Components touching each node.
  std::vector<std::vector<int>> node_components(mesh.num_nodes());
  for (std::size_t e = 0; e < n; ++e) {
    if (out.label[e] < 0) continue;
    for (Index node : mesh.element_nodes(static_cast<Index>(e))) {
      auto& list = node_components[node];
      if (std::find(list.begin(), list.end(), out.label[e]) == list.end()) list.push_back(out.label[e]);
    }
  }
  std::vector<Index> loaded;
  for (const PointLoad& load : problem->loads) {
    if (load.value != 0.0) loaded.push_back(load.dof / 3);
  }
  for (int id = 0; id < out.count && !out.supports_and_loads_connected; ++id) {
    auto touches = [&](Index node) {
      const auto& list = node_components[node];
      return std::find(list.begin(), list.end(), id) != list.end();
    };
    const bool all_loads = std::all_of(loaded.begin(), loaded.end(), touches);
    const bool any_support = std::any_of(problem->fixed_dofs.begin(), problem->fixed_dofs.end(),
                                         [&](Index dof) { return touches(dof / 3); });
    out.supports_and_loads_connected = all_loads && any_support;
  }
  return out;
}

}  // namespace cpdtopo
