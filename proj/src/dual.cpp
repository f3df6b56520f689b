#include "cpdtopo/dual.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

#include <spdlog/spdlog.h>

#include "cpdtopo/error.hpp"
#include "cpdtopo/kernels.hpp"

namespace cpdtopo {

void KnapsackInstance::validate() const {
  if (c.size() != v.size()) throw InvalidArgument("knapsack c and v differ in length");
  if (c.empty()) throw InvalidArgument("knapsack instance is empty");
  for (std::size_t e = 0; e < c.size(); ++e) {
    if (!(c[e] >= 0.0) || !std::isfinite(c[e])) {
      throw InvalidArgument("knapsack value c[" + std::to_string(e) + "] is negative or not finite");
    }
    if (!(v[e] > 0.0) || !std::isfinite(v[e])) {
      throw InvalidArgument("knapsack volume v[" + std::to_string(e) + "] is not positive");
    }
  }
  if (!(budget > 0.0)) throw InvalidArgument("knapsack budget must be positive");
}

namespace detail {

double positive_cubic_root(double theta, double beta) noexcept {
  const double a = std::abs(theta);
  if (a == 0.0) return 0.0;
  // With eta = beta^2/27 and s = |theta|/sqrt(eta), sigma = (beta/6)(t - 1)
  // where t^3 - 3t = 4 s^2 - 2. Both branches below avoid the cancellation
  // in t - 1 for small s.
  const double s = a * std::sqrt(27.0) / beta;
  double sigma;
  if (s <= 1.0) {
    const double alpha = (2.0 / 3.0) * std::asin(s);
    sigma = (2.0 * beta / 3.0) * std::sin(std::numbers::pi / 3.0 - alpha / 2.0) *
            std::sin(alpha / 2.0);
  } else {
    const double t = 2.0 * std::cosh(std::acosh(2.0 * s * s - 1.0) / 3.0);
    sigma = (beta / 6.0) * (t - 1.0);
  }
  const double f = 2.0 * sigma * sigma * sigma / beta + sigma * sigma - a * a;
  const double df = 6.0 * sigma * sigma / beta + 2.0 * sigma;
  if (df > 0.0) {
    const double polished = sigma - f / df;
    if (polished > 0.0) sigma = polished;
  }
  return sigma;
}

}  // namespace detail

double solve_sigma(double theta, double beta) {
  if (!(beta > 0.0)) throw InvalidArgument("beta must be positive");
  if (theta == 0.0) throw DegenerateTheta("theta == 0 has no positive root");
  return detail::positive_cubic_root(theta, beta);
}

double update_multiplier(std::span<const double> sigma, const KnapsackInstance& instance) {
  const auto& c = instance.c;
  const auto& v = instance.v;
  const std::size_t n = c.size();
  std::vector<double> num(n), den(n);
  for (std::size_t e = 0; e < n; ++e) {
    num[e] = v[e] * (1.0 + c[e] / sigma[e]);
    den[e] = v[e] * v[e] / sigma[e];
  }
  const double value =
      (kernels::omp::sum(num) - 2.0 * instance.budget) / kernels::omp::sum(den);
  return std::max(0.0, value);
}

std::vector<double> recover_rho(const DualState& state, const KnapsackInstance& instance) {
  const std::size_t n = instance.c.size();
  std::vector<double> rho(n);
  for (std::size_t e = 0; e < n; ++e) {
    const double theta = state.varsigma * instance.v[e] - instance.c[e];
    rho[e] = std::clamp(0.5 * (1.0 - theta / state.sigma[e]), 0.0, 1.0);
  }
  return rho;
}

double dual_value_unperturbed(const DualState& state, const KnapsackInstance& instance) {
  const std::size_t n = instance.c.size();
  std::vector<double> terms(n);
  for (std::size_t e = 0; e < n; ++e) {
    const double tau = state.sigma[e] + instance.c[e] - state.varsigma * instance.v[e];
    terms[e] = tau * tau / state.sigma[e];
  }
  return -0.25 * kernels::omp::sum(terms) - state.varsigma * instance.budget;
}

double dual_value(const DualState& state, const KnapsackInstance& instance) {
  return dual_value_unperturbed(state, instance) -
         kernels::omp::dot(state.sigma, state.sigma) / (4.0 * state.beta);
}

namespace {

// sigma for the current varsigma; theta == 0 is moved off the degenerate
// point by raising c_e by 1e-12 max(c).
int update_sigma(const KnapsackInstance& instance, double varsigma, double beta, double shift,
                 std::vector<double>& theta, std::vector<double>& sigma) {
  const std::size_t n = instance.c.size();
  int perturbed = 0;
  for (std::size_t e = 0; e < n; ++e) {
    theta[e] = varsigma * instance.v[e] - instance.c[e];
    if (theta[e] == 0.0) {
      theta[e] = -shift;
      ++perturbed;
    }
  }
  kernels::omp::solve_sigma(theta, beta, sigma);
  return perturbed;
}

void resolve_threshold(const KnapsackInstance& instance, KnapsackResult& out) {
  const std::size_t n = instance.c.size();
  const double varsigma = out.state.varsigma;
  double max_ratio = 0.0;
  std::size_t m = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t e = 0; e < n; ++e) {
    const double r = instance.c[e] / instance.v[e];
    max_ratio = std::max(max_ratio, r);
    const double gap = std::abs(varsigma - r);
    if (gap < best) {
      best = gap;
      m = e;
    }
  }
  const double rm = instance.c[m] / instance.v[m];
  const double tie = 1e-12 * max_ratio;
  double selected = 0.0;
  double group = 0.0;
  out.rho.assign(n, 0.0);
  out.threshold_group.clear();
  for (std::size_t e = 0; e < n; ++e) {
    const double r = instance.c[e] / instance.v[e];
    if (std::abs(r - rm) <= tie) {
      out.threshold_group.push_back(static_cast<Index>(e));
      group += instance.v[e];
    } else if (r > varsigma) {
      out.rho[e] = 1.0;
      selected += instance.v[e];
    }
  }
  // varsigma resting below the true threshold over-selects; drop the weakest
  // tie groups until the selection fits.
  const double limit = instance.budget * (1.0 + kVolumeSlack);
  if (selected > limit) {
    std::vector<Index> chosen;
    for (std::size_t e = 0; e < n; ++e) {
      if (out.rho[e] == 1.0) chosen.push_back(static_cast<Index>(e));
    }
    std::stable_sort(chosen.begin(), chosen.end(), [&](Index a, Index b) {
      return instance.c[a] / instance.v[a] < instance.c[b] / instance.v[b];
    });
    std::size_t i = 0;
    while (selected > limit) {
      const double low = instance.c[chosen[i]] / instance.v[chosen[i]];
      out.threshold_group.clear();
      group = 0.0;
      for (; i < chosen.size() && instance.c[chosen[i]] / instance.v[chosen[i]] - low <= tie; ++i) {
        out.rho[chosen[i]] = 0.0;
        out.threshold_group.push_back(chosen[i]);
        selected -= instance.v[chosen[i]];
        group += instance.v[chosen[i]];
      }
    }
    std::sort(out.threshold_group.begin(), out.threshold_group.end());
    out.repaired = true;
    out.threshold_included = false;
    return;
  }
  out.threshold_included = selected + group <= limit;
  if (out.threshold_included) {
    for (Index e : out.threshold_group) out.rho[e] = 1.0;
  }
}

}  // namespace

KnapsackResult knapsack_solve(const KnapsackInstance& instance, const KnapsackOptions& options) {
  instance.validate();
  if (!(options.beta > 0.0)) throw InvalidArgument("beta must be positive");
  if (!(options.varsigma0 >= 0.0)) throw InvalidArgument("initial varsigma must be >= 0");
  if (!(options.omega1 > 0.0)) throw InvalidArgument("omega1 must be positive");
  if (options.max_inner < 1) throw InvalidArgument("max_inner must be at least 1");

  const std::size_t n = instance.c.size();
  double shift = 1e-12 * *std::max_element(instance.c.begin(), instance.c.end());
  if (shift == 0.0) shift = 1e-12;

  KnapsackResult out;
  out.state.beta = options.beta;
  out.state.varsigma = options.varsigma0;
  out.state.sigma.assign(n, 0.0);
  std::vector<double> theta(n);

  double previous = 0.0;
  std::vector<double> trail;  // varsigma after consecutive plain updates
  DualState trial = out.state;
  for (int k = 1; k <= options.max_inner; ++k) {
    out.perturbed +=
        update_sigma(instance, out.state.varsigma, options.beta, shift, theta, out.state.sigma);
    out.state.varsigma = update_multiplier(out.state.sigma, instance);
    const double p = dual_value(out.state, instance);
    out.dual_history.push_back(p);
    out.iterations = k;
    if (k > 1 && std::abs(p - previous) <= options.omega1) {
      out.converged = true;
      break;
    }
    previous = p;

    // Near a degenerate budget varsigma creeps geometrically toward its limit.
    // Aitken extrapolation of the last three values, kept only if the dual
    // (with sigma re-solved) does not decrease.
    trail.push_back(out.state.varsigma);
    if (trail.size() < 3) continue;
    const double d1 = trail[1] - trail[0];
    const double d2 = trail[2] - trail[1];
    trail.erase(trail.begin());
    const double r = d2 / d1;
    if (!(r > 0.0 && r < 1.0)) continue;
    trial.beta = options.beta;
    trial.varsigma = std::max(0.0, trail[1] + d2 * r / (1.0 - r));
    trial.sigma = out.state.sigma;
    out.perturbed += update_sigma(instance, trial.varsigma, options.beta, shift, theta, trial.sigma);
    if (dual_value(trial, instance) >= p) {
      out.state.varsigma = trial.varsigma;
      ++out.extrapolations;
      trail.clear();
    }
  }
  out.perturbed +=
      update_sigma(instance, out.state.varsigma, options.beta, shift, theta, out.state.sigma);
  if (out.perturbed > 0) {
    spdlog::debug("knapsack: theta == 0 perturbed {} times", out.perturbed);
  }

  resolve_threshold(instance, out);
  if (out.repaired) {
    // Move varsigma up to the dropped group, where the dual is no lower and
    // the signs of theta agree with rho.
    double top = 0.0;
    for (Index e : out.threshold_group) top = std::max(top, instance.c[e] / instance.v[e]);
    out.state.varsigma = top;
    out.perturbed +=
        update_sigma(instance, out.state.varsigma, options.beta, shift, theta, out.state.sigma);
  }
  out.rho_relaxed = recover_rho(out.state, instance);
  out.rho_rounded.resize(n);
  for (std::size_t e = 0; e < n; ++e) out.rho_rounded[e] = out.rho_relaxed[e] >= 0.5 ? 1.0 : 0.0;
  return out;
}

KnapsackResult knapsack_solve_escalating(const KnapsackInstance& instance,
                                         std::span<const double> betas,
                                         KnapsackOptions options) {
  if (betas.empty()) throw InvalidArgument("beta schedule is empty");
  KnapsackResult result;
  int total = 0;
  for (double beta : betas) {
    options.beta = beta;
    result = knapsack_solve(instance, options);
    total += result.iterations;
    options.varsigma0 = result.state.varsigma;
  }
  result.iterations = total;
  return result;
}

BruteForceResult brute_force_knapsack(const KnapsackInstance& instance) {
  instance.validate();
  const std::size_t n = instance.c.size();
  if (n > 25) throw InvalidArgument("brute force refuses n > 25");
  const double limit = instance.budget * (1.0 + kVolumeSlack);

  // lexicographic order on rho: at the lowest differing index, 0 < 1
  auto lex_less = [](std::uint32_t a, std::uint32_t b) {
    const std::uint32_t d = a ^ b;
    return d != 0 && (a & (d & (~d + 1))) == 0;
  };

  // Gray-code walk: one element flips per step.
  std::uint32_t mask = 0;
  double volume = 0.0;
  double value = 0.0;
  std::uint32_t best_mask = 0;
  double best_value = 0.0;
  const std::uint64_t count = std::uint64_t{1} << n;
  for (std::uint64_t i = 1; i < count; ++i) {
    const int bit = std::countr_zero(i);
    mask ^= std::uint32_t{1} << bit;
    if (mask & (std::uint32_t{1} << bit)) {
      volume += instance.v[bit];
      value += instance.c[bit];
    } else {
      volume -= instance.v[bit];
      value -= instance.c[bit];
    }
    if (volume > limit) continue;
    if (value > best_value || (value == best_value && lex_less(mask, best_mask))) {
      best_value = value;
      best_mask = mask;
    }
  }

  BruteForceResult out;
  out.rho.assign(n, 0.0);
  double exact = 0.0;
  for (std::size_t e = 0; e < n; ++e) {
    if (best_mask & (std::uint32_t{1} << e)) {
      out.rho[e] = 1.0;
      exact += instance.c[e];
    }
  }
  out.objective = -exact;
  return out;
}

}  // namespace cpdtopo
