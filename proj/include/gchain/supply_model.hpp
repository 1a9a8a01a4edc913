#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gchain/batch.hpp"
#include "gchain/errors.hpp"
#include "gchain/gnetwork.hpp"

namespace gchain {

/**
 * N warehouses fed by independent Poisson object streams and sharing one
 * Poisson order stream of rate gamma, split by an allocation vector P.
 *
 * Objects in warehouse i perish through a single exponential timer of rate
 * mu[i] (active while the warehouse is stocked). Each order asks for a batch
 * drawn from `batch` and takes what is available. The buyer pays
 * c0 + a * (total purchase rate) per object, with a <= 0.
 */
struct SupplyChainInstance {
  std::size_t n = 0;
  std::vector<double> lambda;
  std::vector<double> mu;
  double gamma = 0.0;
  BatchDistribution batch;
  double c0 = 0.0;
  double a = 0.0;

  void validate() const {
    if (n < 1) throw InvalidArgument("need at least one warehouse");
    if (lambda.size() != n || mu.size() != n) {
      throw InvalidArgument("lambda and mu must have n = " + std::to_string(n) + " entries");
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (!(lambda[i] >= 0.0) || !std::isfinite(lambda[i])) {
        throw InvalidArgument("lambda[" + std::to_string(i) + "] must be nonnegative and finite");
      }
      if (!(mu[i] > 0.0) || !std::isfinite(mu[i])) {
        throw InvalidArgument("mu[" + std::to_string(i) + "] must be positive and finite");
      }
    }
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw InvalidArgument("gamma must be positive");
    if (!std::isfinite(c0)) throw InvalidArgument("c0 must be finite");
    if (!(a <= 0.0) || !std::isfinite(a)) throw InvalidArgument("a must be finite and <= 0");
  }
};

struct Allocation {
  std::vector<double> P;

  void validate(std::size_t n) const {
    if (P.size() != n) {
      throw InvalidArgument("allocation has " + std::to_string(P.size()) +
                            " entries, expected " + std::to_string(n));
    }
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!(P[i] >= 0.0) || !std::isfinite(P[i])) {
        throw InvalidArgument("P[" + std::to_string(i) + "] must be nonnegative");
      }
      total += P[i];
    }
    if (std::abs(total - 1.0) > 1e-12) {
      throw InvalidArgument("allocation sums to " + std::to_string(total) + ", expected 1");
    }
  }
};

struct SteadyState {
  std::vector<double> q;
  std::vector<double> expected_sale;
  std::vector<double> purchase_rate;
  double unit_cost = 0.0;
};

/// Margin below 1 that utilizations must keep; shared by both utilization routes.
inline constexpr double kStabilityMargin = 1e-9;

namespace detail {

struct GeometricTerms {
  double A;     // (gamma P + mu + lambda u) / (2 u mu)
  double c;     // lambda / (mu u)
  double disc;  // A^2 - c
};

inline GeometricTerms geometric_terms(const SupplyChainInstance& inst, double P_i,
                                      std::size_t i) {
  const double u = inst.batch.geometric_u();
  const double mu = inst.mu[i];
  const double A = (inst.gamma * P_i + mu + inst.lambda[i] * u) / (2.0 * u * mu);
  const double c = inst.lambda[i] / (mu * u);
  return {A, c, A * A - c};
}

// Smaller root of u mu q^2 - (gamma P + mu + lambda u) q + lambda = 0, written
// as c / (A + sqrt(A^2 - c)) so it stays accurate when A is large.
inline double geometric_root(const SupplyChainInstance& inst, double P_i, std::size_t i) {
  const auto t = geometric_terms(inst, P_i, i);
  if (t.disc < 0.0) {
    throw DomainError("negative discriminant in geometric utilization for warehouse " +
                      std::to_string(i + 1));
  }
  return t.c / (t.A + std::sqrt(t.disc));
}

inline double stability_bound(const SupplyChainInstance& inst, std::size_t i) {
  return (inst.lambda[i] - inst.mu[i]) / (inst.gamma * inst.batch.mean());
}

inline std::string stability_bound_message(const SupplyChainInstance& inst,
                                           std::span<const double> P, std::size_t i) {
  return "warehouse " + std::to_string(i + 1) + " is unstable at P = " + std::to_string(P[i]) +
         " (requires P > (lambda - mu)/(gamma E[R]) = " + std::to_string(stability_bound(inst, i)) +
         ")";
}

inline void check_rates(const SupplyChainInstance& inst, std::span<const double> P) {
  if (P.size() != inst.n) {
    throw InvalidArgument("allocation has " + std::to_string(P.size()) + " entries, expected " +
                          std::to_string(inst.n));
  }
  for (std::size_t i = 0; i < inst.n; ++i) {
    if (!(P[i] >= 0.0) || !std::isfinite(P[i])) {
      throw InvalidArgument("P[" + std::to_string(i) + "] must be nonnegative");
    }
  }
}

inline GNetwork to_gnetwork(const SupplyChainInstance& inst, std::span<const double> P) {
  GNetwork net = GNetwork::isolated(inst.n);
  for (std::size_t i = 0; i < inst.n; ++i) {
    net.Lambda[i] = inst.lambda[i];
    net.beta[i] = inst.mu[i];
    net.lambda_sig[i] = inst.gamma * P[i];
    net.batch[i] = inst.batch;
  }
  return net;
}

inline std::vector<double> fixed_point_q(const SupplyChainInstance& inst, std::span<const double> P,
                                         const SolverOptions& opts) {
  try {
    return solve_traffic(to_gnetwork(inst, P), opts).q;
  } catch (const Unstable& e) {
    std::string msg;
    for (auto i : e.queues()) msg += (msg.empty() ? "" : "; ") + stability_bound_message(inst, P, i);
    throw Unstable(msg, e.queues());
  }
}

inline std::vector<double> closed_form_q(const SupplyChainInstance& inst,
                                         std::span<const double> P) {
  std::vector<double> q(inst.n);
  std::vector<std::size_t> bad;
  std::string msg;
  for (std::size_t i = 0; i < inst.n; ++i) {
    q[i] = geometric_root(inst, P[i], i);
    if (q[i] >= 1.0 - kStabilityMargin) {
      bad.push_back(i);
      msg += (msg.empty() ? "" : "; ") + stability_bound_message(inst, P, i);
    }
  }
  if (!bad.empty()) throw Unstable(msg, std::move(bad));
  return q;
}

}  // namespace detail

/// Warehouses as isolated queues: no service, perishing as beta, orders as signals.
inline GNetwork to_gnetwork(const SupplyChainInstance& inst, const Allocation& alloc) {
  return detail::to_gnetwork(inst, alloc.P);
}

/// q_i by damped fixed-point iteration on the traffic equation (any batch law).
inline std::vector<double> utilization_fixed_point(const SupplyChainInstance& inst,
                                                   const Allocation& alloc,
                                                   const SolverOptions& opts = {}) {
  inst.validate();
  alloc.validate(inst.n);
  return detail::fixed_point_q(inst, alloc.P, opts);
}

/// q_i from the quadratic closed form; requires a geometric batch law.
inline std::vector<double> utilization_geometric_closed_form(const SupplyChainInstance& inst,
                                                             const Allocation& alloc) {
  inst.validate();
  alloc.validate(inst.n);
  if (!inst.batch.is_geometric()) {
    throw InvalidArgument("closed-form utilization requires a geometric batch law");
  }
  return detail::closed_form_q(inst, alloc.P);
}

/// E[S | R = r] = q (1 - q^r) / (1 - q): objects sold to an order for r.
inline double expected_sale_conditional(double q, std::uint64_t r) {
  detail::check_half_open(q, "expected_sale_conditional");
  if (r < 1) throw DomainError("expected_sale_conditional: r must be >= 1");
  return q * detail::geometric_partial_sum(q, r);
}

/// E[S] = q (1 - F(q)) / (1 - q): objects sold per order at utilization q.
inline double expected_sale(double q, const BatchDistribution& batch) {
  detail::check_half_open(q, "expected_sale");
  return q * removal_factor(batch, q);
}

/**
 * Steady state for an arbitrary nonnegative order-split vector P (the
 * components need not sum to 1, which lets derivative checks move one
 * coordinate at a time). Utilization comes from the closed form for
 * geometric batches and from the fixed-point solver otherwise.
 *
 * The price is computed from the purchase rates gamma P_i E[S_i] and checked
 * against the equivalent flow-balance form sum(lambda_i - q_i mu_i).
 */
inline SteadyState steady_state(const SupplyChainInstance& inst, std::span<const double> P,
                                const SolverOptions& opts = {}) {
  inst.validate();
  detail::check_rates(inst, P);
  SteadyState s;
  s.q = inst.batch.is_geometric() ? detail::closed_form_q(inst, P)
                                  : detail::fixed_point_q(inst, P, opts);
  s.expected_sale.resize(inst.n);
  s.purchase_rate.resize(inst.n);
  double total = 0.0, balance = 0.0, scale = 1.0;
  for (std::size_t i = 0; i < inst.n; ++i) {
    s.expected_sale[i] = expected_sale(s.q[i], inst.batch);
    s.purchase_rate[i] = inst.gamma * P[i] * s.expected_sale[i];
    total += s.purchase_rate[i];
    balance += inst.lambda[i] - s.q[i] * inst.mu[i];
    scale += inst.lambda[i];
  }
  if (std::abs(total - balance) > 1e-9 * scale) {
    throw std::logic_error("flow conservation violated: purchase rate " + std::to_string(total) +
                           " vs net inflow " + std::to_string(balance));
  }
  s.unit_cost = inst.c0 + inst.a * total;
  return s;
}

/// Steady state and per-object price at a valid allocation.
inline SteadyState unit_cost(const SupplyChainInstance& inst, const Allocation& alloc,
                             const SolverOptions& opts = {}) {
  alloc.validate(inst.n);
  return steady_state(inst, alloc.P, opts);
}

/// Price only, or nullopt when P is not stable. Used by searches.
inline std::optional<double> try_cost(const SupplyChainInstance& inst, std::span<const double> P,
                                      const SolverOptions& opts = {}) {
  try {
    return steady_state(inst, P, opts).unit_cost;
  } catch (const Unstable&) {
    return std::nullopt;
  } catch (const NonConvergence&) {
    return std::nullopt;
  }
}

/**
 * Smallest order share each warehouse needs to stay stable: q_i < 1 iff
 * lambda_i < mu_i + gamma P_i E[R], so L_i = max(0, (lambda_i - mu_i)/(gamma E[R])).
 * For a geometric law E[R] = 1/(1-u) and this is (lambda_i - mu_i)(1-u)/gamma.
 */
inline std::vector<double> feasibility_lower_bounds(const SupplyChainInstance& inst) {
  inst.validate();
  std::vector<double> L(inst.n);
  for (std::size_t i = 0; i < inst.n; ++i) L[i] = std::max(0.0, detail::stability_bound(inst, i));
  return L;
}

/// dq_i/dP_i for a geometric batch law; strictly negative.
inline double dq_dP(const SupplyChainInstance& inst, const Allocation& alloc, std::size_t i) {
  const double u = inst.batch.geometric_u();
  const auto t = detail::geometric_terms(inst, alloc.P.at(i), i);
  if (!(t.disc > 0.0)) {
    throw DomainError("dq_dP: degenerate discriminant at warehouse " + std::to_string(i + 1));
  }
  return inst.gamma / (2.0 * inst.mu[i] * u) * (1.0 - t.A / std::sqrt(t.disc));
}

/// dC/dP_i = -a mu_i dq_i/dP_i (geometric batch law).
inline std::vector<double> cost_gradient(const SupplyChainInstance& inst, const Allocation& alloc) {
  std::vector<double> g(inst.n);
  for (std::size_t i = 0; i < inst.n; ++i) g[i] = -inst.a * inst.mu[i] * dq_dP(inst, alloc, i);
  return g;
}

/// Diagonal of the Hessian of C in P (C is separable, so it is diagonal).
inline std::vector<double> cost_hessian_diag(const SupplyChainInstance& inst,
                                             const Allocation& alloc) {
  const double u = inst.batch.geometric_u();
  std::vector<double> h(inst.n);
  for (std::size_t i = 0; i < inst.n; ++i) {
    const auto t = detail::geometric_terms(inst, alloc.P.at(i), i);
    if (!(t.disc > 0.0)) {
      throw DomainError("cost_hessian_diag: degenerate discriminant at warehouse " +
                        std::to_string(i + 1));
    }
    const double mu = inst.mu[i];
    h[i] = -inst.a * inst.gamma * inst.gamma * inst.lambda[i] /
           (4.0 * mu * mu * u * u * u * std::pow(t.disc, 1.5));
  }
  return h;
}

}  // namespace gchain
