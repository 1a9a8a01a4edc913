#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gchain/errors.hpp"
#include "gchain/parallel.hpp"
#include "gchain/supply_model.hpp"

namespace gchain {

enum class AllocationMethod { ClosedForm, ProjectedGradient, GridOracle };

inline const char* to_string(AllocationMethod m) {
  switch (m) {
    case AllocationMethod::ClosedForm: return "closed_form";
    case AllocationMethod::ProjectedGradient: return "projected_gradient";
    case AllocationMethod::GridOracle: return "grid_oracle";
  }
  return "unknown";
}

struct AllocationResult {
  Allocation P_star;
  double cost_at_optimum = 0.0;
  /// Lagrange multiplier of the sum-to-one constraint, -dC/dP_i at the optimum.
  double kkt_multiplier = 0.0;
  /// 1 - 2 u beta / (a gamma); geometric batches with a != 0 only.
  std::optional<double> B_constant;
  double kkt_residual = 0.0;
  double hessian_min = 0.0;
  AllocationMethod method = AllocationMethod::ClosedForm;
  std::size_t iterations = 0;
};

struct NumericalOptions {
  double tol = 1e-9;
  std::size_t max_iters = 50000;
  double armijo = 1e-4;
  double shrink = 0.5;
  double initial_step = 1.0;
  /// Central-difference steps used when the batch law has no analytic derivative.
  double gradient_step = 1e-6;
  double hessian_step = 1e-4;
  SolverOptions solver;
};

/// Distance kept between numerical_allocation iterates and the stability bounds.
inline constexpr double kStabilityGap = 1e-7;

/**
 * Euclidean projection onto {x : x_i >= 0, sum x_i = 1}.
 *
 * Sort-based: find the largest k with v_(k) - (sum_{j<=k} v_(j) - 1)/k > 0
 * and shift by that threshold. std::stable_sort keeps equal entries in index
 * order so the result is deterministic.
 */
inline std::vector<double> project_to_simplex(std::span<const double> v) {
  const std::size_t n = v.size();
  if (n == 0) throw InvalidArgument("cannot project an empty vector");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return v[a] > v[b]; });
  double running = 0.0, theta = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    running += v[order[k]];
    const double t = (running - 1.0) / static_cast<double>(k + 1);
    if (v[order[k]] - t > 0.0) theta = t;
  }
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = std::max(v[i] - theta, 0.0);
  return x;
}

namespace detail {

// Projection onto {x : x_i >= lower_i, sum x_i = 1}; total = 1 - sum lower > 0.
inline std::vector<double> project_above(std::span<const double> v, std::span<const double> lower,
                                         double total) {
  std::vector<double> w(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) w[i] = (v[i] - lower[i]) / total;
  auto x = project_to_simplex(w);
  for (std::size_t i = 0; i < v.size(); ++i) x[i] = lower[i] + total * x[i];
  return x;
}

// Sum of q_i mu_i. C = c0 + a (sum lambda - this), so differences of C are
// taken here: no cancellation against c0 + a sum lambda.
inline double perish_flow(const SupplyChainInstance& inst, std::span<const double> P,
                          const SolverOptions& opts) {
  const auto s = steady_state(inst, P, opts);
  double f = 0.0;
  for (std::size_t i = 0; i < inst.n; ++i) f += s.q[i] * inst.mu[i];
  return f;
}

inline std::vector<double> fd_gradient(const SupplyChainInstance& inst, std::span<const double> P,
                                       double h, const SolverOptions& opts) {
  std::vector<double> g(inst.n), x(P.begin(), P.end());
  for (std::size_t i = 0; i < inst.n; ++i) {
    const double lo = std::max(0.0, P[i] - h), hi = P[i] + h;
    x[i] = hi;
    const double f_hi = perish_flow(inst, x, opts);
    x[i] = lo;
    const double f_lo = perish_flow(inst, x, opts);
    x[i] = P[i];
    g[i] = -inst.a * (f_hi - f_lo) / (hi - lo);
  }
  return g;
}

inline std::vector<double> fd_hessian_diag(const SupplyChainInstance& inst,
                                           std::span<const double> P, double h,
                                           const SolverOptions& opts) {
  std::vector<double> d(inst.n), x(P.begin(), P.end());
  const double f0 = perish_flow(inst, P, opts);
  for (std::size_t i = 0; i < inst.n; ++i) {
    // Shift the stencil right when P_i is too close to 0 for a centered one.
    const double mid = std::max(P[i], h);
    x[i] = mid + h;
    const double f_hi = perish_flow(inst, x, opts);
    x[i] = mid - h;
    const double f_lo = perish_flow(inst, x, opts);
    x[i] = mid;
    const double f_mid = mid == P[i] ? f0 : perish_flow(inst, x, opts);
    x[i] = P[i];
    d[i] = -inst.a * (f_hi - 2.0 * f_mid + f_lo) / (h * h);
  }
  return d;
}

inline std::vector<double> gradient(const SupplyChainInstance& inst, std::span<const double> P,
                                    const NumericalOptions& opts) {
  if (inst.batch.is_geometric()) {
    std::vector<double> g(inst.n);
    const Allocation view{std::vector<double>(P.begin(), P.end())};
    for (std::size_t i = 0; i < inst.n; ++i) g[i] = -inst.a * inst.mu[i] * dq_dP(inst, view, i);
    return g;
  }
  return fd_gradient(inst, P, opts.gradient_step, opts.solver);
}

// Fills cost, multiplier, KKT residual and the second-order certificate at P.
// Coordinates pinned at their lower limit (0, or just above the stability
// bound when `lower` is given) are excluded from the stationarity test since
// their multipliers are free to absorb the gradient gap.
inline AllocationResult diagnose(const SupplyChainInstance& inst, std::vector<double> P,
                                 AllocationMethod method, const NumericalOptions& opts,
                                 std::span<const double> lower = {}) {
  AllocationResult r;
  r.method = method;
  r.cost_at_optimum = steady_state(inst, P, opts.solver).unit_cost;

  const auto g = gradient(inst, P, opts);
  auto is_free = [&](std::size_t i) { return P[i] > (lower.empty() ? 0.0 : lower[i]); };
  double sum = 0.0;
  std::size_t free = 0;
  for (std::size_t i = 0; i < inst.n; ++i) {
    if (is_free(i)) {
      sum += g[i];
      ++free;
    }
  }
  r.kkt_multiplier = free > 0 ? -sum / static_cast<double>(free) : 0.0;
  r.kkt_residual = 0.0;
  for (std::size_t i = 0; i < inst.n; ++i) {
    if (is_free(i)) r.kkt_residual = std::max(r.kkt_residual, std::abs(g[i] + r.kkt_multiplier));
  }

  std::vector<double> h;
  if (inst.batch.is_geometric()) {
    h = cost_hessian_diag(inst, Allocation{P});
    if (inst.a != 0.0) {
      r.B_constant =
          1.0 - 2.0 * inst.batch.geometric_u() * r.kkt_multiplier / (inst.a * inst.gamma);
    }
  } else {
    h = fd_hessian_diag(inst, P, opts.hessian_step, opts.solver);
  }
  r.hessian_min = *std::min_element(h.begin(), h.end());
  r.P_star = Allocation{std::move(P)};
  return r;
}

}  // namespace detail

/**
 * Optimal allocation for a geometric batch law from the Lagrange conditions:
 *
 *   P_i* = sqrt(lambda_i mu_i)/gamma * (gamma + sum_j(mu_j + lambda_j u)) / sum_j sqrt(lambda_j mu_j)
 *          - (mu_i + lambda_i u)/gamma
 *
 * Only valid when this point is interior to the stable part of the simplex;
 * otherwise throws InteriorViolation and the caller should use
 * numerical_allocation.
 */
inline AllocationResult closed_form_allocation(const SupplyChainInstance& inst,
                                               const NumericalOptions& opts = {}) {
  inst.validate();
  const double u = inst.batch.geometric_u();
  double root_sum = 0.0, offset_sum = 0.0;
  for (std::size_t i = 0; i < inst.n; ++i) {
    root_sum += std::sqrt(inst.lambda[i] * inst.mu[i]);
    offset_sum += inst.mu[i] + inst.lambda[i] * u;
  }
  const double scale = (inst.gamma + offset_sum) / root_sum;
  std::vector<double> P(inst.n);
  for (std::size_t i = 0; i < inst.n; ++i) {
    P[i] = (std::sqrt(inst.lambda[i] * inst.mu[i]) * scale - (inst.mu[i] + inst.lambda[i] * u)) /
           inst.gamma;
  }

  const auto L = feasibility_lower_bounds(inst);
  std::vector<std::size_t> bad;
  std::string msg;
  for (std::size_t i = 0; i < inst.n; ++i) {
    if (!(P[i] > 0.0) || !(P[i] > L[i])) {
      bad.push_back(i);
      msg += (msg.empty() ? "" : "; ") + ("P_" + std::to_string(i + 1) + " = " +
                                          std::to_string(P[i]) + " (lower bound " +
                                          std::to_string(L[i]) + ")");
    }
  }
  if (!bad.empty()) {
    throw InteriorViolation("closed-form optimum is not interior: " + msg, std::move(bad));
  }

  const double total = std::accumulate(P.begin(), P.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-12) {
    throw std::logic_error("closed-form allocation sums to " + std::to_string(total));
  }
  return detail::diagnose(inst, std::move(P), AllocationMethod::ClosedForm, opts);
}

/**
 * Minimizes the unit cost over the simplex by projected gradient descent with
 * Armijo backtracking. Works for any batch law; the gradient is analytic for
 * geometric batches and a central difference otherwise. Unstable trial points
 * count as failed line-search steps, and the projection keeps every P_i at
 * least kStabilityGap above its stability bound, so iterates never leave the
 * stable region. When the cost keeps falling toward a stability bound the
 * result sits at that bound plus the gap.
 *
 * The descent runs on (C - c0 - a sum lambda) / |a| = sum q_i mu_i, the total
 * perishing rate: same minimizer, `tol` independent of the price slope, and
 * no rounding against the large constant part of C.
 */
inline AllocationResult numerical_allocation(const SupplyChainInstance& inst,
                                             const NumericalOptions& opts = {}) {
  inst.validate();
  const std::size_t n = inst.n;
  const auto L = feasibility_lower_bounds(inst);
  const double slack = 1.0 - std::accumulate(L.begin(), L.end(), 0.0);
  if (!(slack > 0.0)) {
    throw Infeasible("no stable allocation: lower bounds sum to " + std::to_string(1.0 - slack));
  }
  // Iterates live in {P_i >= L_i + gap, sum P = 1}; the gap keeps q_i off 1.
  std::vector<double> lower(n);
  for (std::size_t i = 0; i < n; ++i) {
    lower[i] = L[i] > 0.0 ? L[i] + std::min(kStabilityGap, slack / static_cast<double>(2 * n)) : 0.0;
  }
  const double room = 1.0 - std::accumulate(lower.begin(), lower.end(), 0.0);
  auto project = [&](std::span<const double> v) { return detail::project_above(v, lower, room); };
  std::vector<double> P(n);
  for (std::size_t i = 0; i < n; ++i) P[i] = lower[i] + room / static_cast<double>(n);

  // C = c0 + a sum lambda + |a| sum q mu for a < 0: descend on sum q mu.
  const double weight = inst.a != 0.0 ? 1.0 / std::abs(inst.a) : 0.0;
  auto cost = [&](std::span<const double> x) -> std::optional<double> {
    try {
      const double f = detail::perish_flow(inst, x, opts.solver);
      return inst.a != 0.0 ? f : 0.0;
    } catch (const Unstable&) {
      return std::nullopt;
    } catch (const NonConvergence&) {
      return std::nullopt;
    }
  };
  auto c = cost(P);
  if (!c) throw Infeasible("starting allocation is unstable");

  std::vector<double> trial(n), step(n), prev_P, prev_g;
  std::size_t it = 0;
  double pg_norm = HUGE_VAL;
  for (; it < opts.max_iters; ++it) {
    auto g = detail::gradient(inst, P, opts);
    for (auto& gi : g) gi *= weight;

    for (std::size_t i = 0; i < n; ++i) step[i] = P[i] - g[i];
    const auto unit = project(step);
    pg_norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) pg_norm = std::max(pg_norm, std::abs(unit[i] - P[i]));
    if (pg_norm < opts.tol) break;

    // First trial step: Barzilai-Borwein s's / s'y from the previous move.
    double t = opts.initial_step;
    if (!prev_P.empty()) {
      double ss = 0.0, sy = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double si = P[i] - prev_P[i], yi = g[i] - prev_g[i];
        ss += si * si;
        sy += si * yi;
      }
      if (sy > 0.0) t = std::clamp(ss / sy, 1e-10, 1e10);
    }
    prev_P = P;
    prev_g = g;

    bool moved = false;
    while (t > 1e-20) {
      for (std::size_t i = 0; i < n; ++i) step[i] = P[i] - t * g[i];
      trial = project(step);
      double decrease = 0.0;
      for (std::size_t i = 0; i < n; ++i) decrease += g[i] * (trial[i] - P[i]);
      const auto ct = cost(trial);
      // Slack of a few ulps: near the optimum the predicted decrease drops
      // below the rounding noise of the objective.
      const double noise = 8.0 * std::numeric_limits<double>::epsilon() * (std::abs(*c) + 1.0);
      if (ct && *ct <= *c + opts.armijo * decrease + noise) {
        moved = trial != P;
        P = trial;
        c = ct;
        break;
      }
      t *= opts.shrink;
    }
    // No admissible step: P is optimal to working precision.
    if (!moved) break;
  }
  if (it == opts.max_iters) {
    throw NonConvergence("projected gradient did not converge in " + std::to_string(it) +
                             " iterations",
                         it, pg_norm);
  }
  auto r = detail::diagnose(inst, std::move(P), AllocationMethod::ProjectedGradient, opts, lower);
  r.iterations = it;
  return r;
}

/**
 * Exhaustive search over the simplex lattice {k / resolution : sum k = resolution}
 * for n <= 4, skipping unstable points. Ties go to the lexicographically first
 * lattice point.
 */
inline AllocationResult grid_oracle(const SupplyChainInstance& inst, std::size_t resolution,
                                    const NumericalOptions& opts = {}) {
  inst.validate();
  const std::size_t n = inst.n;
  if (n > 4) throw InvalidArgument("grid oracle is limited to n <= 4 warehouses");
  if (resolution < 1) throw InvalidArgument("grid resolution must be >= 1");
  const double h = 1.0 / static_cast<double>(resolution);

  struct Best {
    double cost = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> k;
  };
  // One slot per value of the first coordinate.
  std::vector<Best> best(resolution + 1);
  parallel_for(resolution + 1, [&](std::size_t k0) {
    std::vector<std::size_t> k(n, 0);
    std::vector<double> P(n);
    k[0] = k0;
    Best& slot = best[k0];
    const std::function<void(std::size_t, std::size_t)> walk = [&](std::size_t idx,
                                                                   std::size_t left) {
      if (idx == n - 1) {
        k[idx] = left;
        for (std::size_t i = 0; i < n; ++i) P[i] = static_cast<double>(k[i]) * h;
        if (const auto c = try_cost(inst, P, opts.solver); c && *c < slot.cost) {
          slot.cost = *c;
          slot.k = k;
        }
        return;
      }
      for (std::size_t v = 0; v <= left; ++v) {
        k[idx] = v;
        walk(idx + 1, left - v);
      }
    };
    if (n == 1) {
      if (k0 == resolution) walk(0, resolution);
    } else {
      walk(1, resolution - k0);
    }
  });

  const Best* winner = nullptr;
  for (const auto& b : best) {
    if (!b.k.empty() && (!winner || b.cost < winner->cost)) winner = &b;
  }
  if (!winner) throw Infeasible("no stable lattice point at resolution " + std::to_string(resolution));
  std::vector<double> P(n);
  for (std::size_t i = 0; i < n; ++i) P[i] = static_cast<double>(winner->k[i]) * h;
  return detail::diagnose(inst, std::move(P), AllocationMethod::GridOracle, opts);
}

enum class SweepTarget { Lambda, Mu };

struct SweepRow {
  double value = 0.0;
  std::optional<AllocationResult> result;
  /// Why this row has no result (interior violation or instability).
  std::string error;
};

/**
 * Recomputes the closed-form optimum while lambda_i or mu_i runs over
 * `steps` evenly spaced values in [from, to]. A degenerate range (from == to)
 * yields one row; steps == 0 yields none. Rows whose optimum is not interior
 * are flagged rather than aborting the sweep.
 */
inline std::vector<SweepRow> sensitivity_sweep(const SupplyChainInstance& inst, SweepTarget target,
                                               std::size_t index, double from, double to,
                                               std::size_t steps,
                                               const NumericalOptions& opts = {}) {
  inst.validate();
  if (index >= inst.n) throw InvalidArgument("sweep index out of range");
  if (steps == 0) return {};
  const std::size_t count = from == to ? 1 : steps;
  std::vector<SweepRow> rows(count);
  parallel_for(count, [&](std::size_t k) {
    const double value =
        count == 1 ? from
                   : from + (to - from) * static_cast<double>(k) / static_cast<double>(count - 1);
    SupplyChainInstance swept = inst;
    (target == SweepTarget::Lambda ? swept.lambda : swept.mu)[index] = value;
    rows[k].value = value;
    try {
      rows[k].result = closed_form_allocation(swept, opts);
    } catch (const std::exception& e) {
      rows[k].error = e.what();
    }
  });
  return rows;
}

}  // namespace gchain
