#pragma once

#include <span>
#include <vector>

#include "cpdtopo/mesh.hpp"

namespace cpdtopo {

/// min -c^T rho  s.t.  v^T rho <= budget, rho in {0,1}^n.
struct KnapsackInstance {
  std::vector<double> c;  // nonnegative values
  std::vector<double> v;  // positive volumes
  double budget = 0.0;

  /// Throws InvalidArgument on size mismatch, c < 0, v <= 0 or budget <= 0.
  void validate() const;
};

/// Canonical dual pair: sigma > 0 per element, varsigma >= 0 for the volume
/// constraint, and the perturbation parameter beta.
struct DualState {
  std::vector<double> sigma;
  double varsigma = 0.0;
  double beta = 0.0;
};

/// Relative slack used wherever a selection is tested against the budget.
inline constexpr double kVolumeSlack = 1e-9;

/// Positive root of 2 sigma^3 / beta + sigma^2 = theta^2. Throws
/// DegenerateTheta for theta == 0 and InvalidArgument for beta <= 0.
double solve_sigma(double theta, double beta);

namespace detail {
/// Unchecked root; returns 0 for theta == 0.
double positive_cubic_root(double theta, double beta) noexcept;
}  // namespace detail

/// varsigma = [sum v (1 + c/sigma) - 2 V] / sum v^2/sigma, clamped at 0.
double update_multiplier(std::span<const double> sigma, const KnapsackInstance& instance);

/// rho_e = (1 - theta_e / sigma_e) / 2 clamped to [0, 1].
std::vector<double> recover_rho(const DualState& state, const KnapsackInstance& instance);

/// P^d_u = -1/4 sum tau^2/sigma - varsigma V with tau = sigma + c - varsigma v.
double dual_value_unperturbed(const DualState& state, const KnapsackInstance& instance);

/// P^d_beta = P^d_u - |sigma|^2 / (4 beta).
double dual_value(const DualState& state, const KnapsackInstance& instance);

struct KnapsackOptions {
  double beta = 4000.0;
  double varsigma0 = 1.0;
  double omega1 = 1e-6;
  int max_inner = 500;
};

struct KnapsackResult {
  /// Binary selection. Elements are decided by the sign of theta; the group
  /// sitting on the threshold (theta -> 0, where recovery is 0/0) is kept
  /// together and included only if it fits the budget.
  std::vector<double> rho;
  std::vector<double> rho_rounded;  // relaxed rho rounded at 0.5
  std::vector<double> rho_relaxed;  // clamped recovery formula
  DualState state;                  // sigma consistent with the final varsigma
  std::vector<double> dual_history; // P^d_beta after each inner iteration
  std::vector<Index> threshold_group;
  bool threshold_included = false;
  int iterations = 0;
  bool converged = false;
  int perturbed = 0;  // theta == 0 occurrences replaced by a perturbation
  int extrapolations = 0;  // accepted varsigma extrapolations
  bool repaired = false;   // over-full selection trimmed by ascending c/v
};

KnapsackResult knapsack_solve(const KnapsackInstance& instance, const KnapsackOptions& options);

/// Runs knapsack_solve for each beta in turn, warm-starting varsigma; returns
/// the last result with iterations summed.
KnapsackResult knapsack_solve_escalating(const KnapsackInstance& instance,
                                         std::span<const double> betas,
                                         KnapsackOptions options);

struct BruteForceResult {
  std::vector<double> rho;
  double objective = 0.0;  // -c^T rho
};

/// Exhaustive search, n <= 25. Ties are broken toward the lexicographically
/// smallest rho. A subset is feasible when its volume is at most
/// budget * (1 + kVolumeSlack).
BruteForceResult brute_force_knapsack(const KnapsackInstance& instance);

}  // namespace cpdtopo
