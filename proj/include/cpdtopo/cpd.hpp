#pragma once

#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "cpdtopo/dual.hpp"
#include "cpdtopo/fem.hpp"
#include "cpdtopo/mesh.hpp"

namespace cpdtopo {

/// Which modulus scales the element energies handed to the knapsack.
enum class EnergyWeighting {
  kInterpolated,  // c_e = (E_min + (E - E_min) rho_e) * 0.5 u_e^T Ke u_e
  kFull,          // c_e = E * 0.5 u_e^T Ke u_e
};

struct CpdConfig {
  double mu = 0.89;
  double beta = 4000.0;
  double omega1 = 1e-6;
  double omega2 = 1e-3;
  double varsigma0 = 1.0;
  int max_outer = 200;
  int max_inner = 500;
  // Tighter than the FEM default so z-mirror energy pairs tie to ~1e-13.
  SolverOptions solver{.rel_tol = 1e-10};
  EnergyWeighting weighting = EnergyWeighting::kInterpolated;

  void validate() const;
};

/// One row per outer step.
struct StepRecord {
  int gamma = 0;
  double volume = 0.0;      // V_gamma as a fraction of the total volume
  double compliance = 0.0;  // 2C after the step's re-solve
  double dual = 0.0;        // final P^d_beta of the step's knapsack
  int inner_iterations = 0;
  double change = 0.0;  // max |rho_new - rho_old|
  double seconds = 0.0;
};

using ConvergenceRecord = std::vector<StepRecord>;

struct CpdResult {
  std::vector<double> rho;  // full element field, binary
  std::vector<double> u;
  ConvergenceRecord record;
  double initial_compliance = 0.0;  // all-solid design
  int volume_reductions = 0;        // steps whose budget was below the previous one
};

/// Raised when the run cannot finish; carries what was computed so far.
class RunFailure : public std::runtime_error {
 public:
  RunFailure(const std::string& what, ConvergenceRecord record, std::vector<double> rho = {})
      : std::runtime_error(what), record_(std::move(record)), rho_(std::move(rho)) {}
  const ConvergenceRecord& record() const noexcept { return record_; }
  /// Last design reached, empty if none.
  const std::vector<double>& rho() const noexcept { return rho_; }

 private:
  ConvergenceRecord record_;
  std::vector<double> rho_;
};

/// Budgets V0 mu^g for g = 1, 2, ... down to vc, the last clamped to vc.
/// Empty when vc >= v0.
std::vector<double> volume_schedule(double mu, double v0, double vc);

/// What the driver saw at one outer step, for callers that want to audit it.
struct StepView {
  int gamma;
  const KnapsackInstance& instance;      // designable elements only
  const KnapsackResult& knapsack;
  std::span<const Index> designable;     // element index of each knapsack entry
};

using StepObserver = std::function<void(const StepView&)>;

/// Called after each record row is complete.
using RecordSink = std::function<void(const StepRecord&)>;

CpdResult run_cpd(const ProblemDef& problem, const CpdConfig& config,
                  const StepObserver& observer = {}, const RecordSink& sink = {});

struct Components {
  std::vector<int> label;  // -1 for void elements
  int count = 0;
  /// All loaded and all supported nodes touch solids of one component.
  bool supports_and_loads_connected = false;
};

/// 6-face connectivity of the elements with rho >= 0.5. Support and load
/// reachability is only evaluated when `problem` is given.
Components connected_components(std::span<const double> rho, const VoxelMesh& mesh,
                                const ProblemDef* problem = nullptr);

}  // namespace cpdtopo
