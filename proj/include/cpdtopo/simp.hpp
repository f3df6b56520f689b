#pragma once

#include <vector>

#include "cpdtopo/cpd.hpp"
#include "cpdtopo/fem.hpp"
#include "cpdtopo/mesh.hpp"

namespace cpdtopo {

/// Optimality-criteria SIMP without a density filter.
struct SimpConfig {
  double penalty = 3.0;
  double move = 0.2;
  double rho_min = 1e-3;
  double tolerance = 0.01;  // on max |rho_new - rho_old|
  int max_iterations = 200;
  double r_min = 1.5;       // accepted for parity with filtered codes; unused
  double volume_tolerance = 1e-9;
  SolverOptions solver;

  void validate() const;
};

struct SimpResult {
  std::vector<double> rho;  // continuous
  std::vector<double> u;
  ConvergenceRecord record;  // dual column is 0, inner_iterations = bisection steps
  bool converged = false;
};

/// Starts from rho = V_c and runs OC updates with bisection on the volume
/// multiplier. Throws RunFailure if the bisection cannot meet the volume.
SimpResult run_simp(const ProblemDef& problem, const SimpConfig& config,
                    const RecordSink& sink = {});

}  // namespace cpdtopo
