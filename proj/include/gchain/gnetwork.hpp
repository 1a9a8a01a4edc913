#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "gchain/batch.hpp"
#include "gchain/errors.hpp"

namespace gchain {

/**
 * Open G-network with positive customers, signals and batch removal.
 *
 * Queue i receives positive customers at rate Lambda[i] and signals at rate
 * lambda_sig[i] from outside. A customer served at rate mu[i] moves to j as a
 * positive customer with probability p_plus[i][j], as a signal with
 * probability p_minus[i][j], or leaves with probability d[i]. Customers also
 * leave without routing at the perish rate beta[i]. Each signal arriving at a
 * nonempty queue removes a batch drawn from batch[i] (or empties the queue).
 */
struct GNetwork {
  std::size_t n = 0;
  std::vector<double> Lambda;
  std::vector<double> lambda_sig;
  std::vector<double> mu;
  std::vector<double> beta;
  std::vector<std::vector<double>> p_plus;
  std::vector<std::vector<double>> p_minus;
  std::vector<double> d;
  std::vector<BatchDistribution> batch;

  /// n isolated queues with no routing (d = 1) and unit batches.
  static GNetwork isolated(std::size_t n) {
    GNetwork net;
    net.n = n;
    net.Lambda.assign(n, 0.0);
    net.lambda_sig.assign(n, 0.0);
    net.mu.assign(n, 0.0);
    net.beta.assign(n, 0.0);
    net.p_plus.assign(n, std::vector<double>(n, 0.0));
    net.p_minus.assign(n, std::vector<double>(n, 0.0));
    net.d.assign(n, 1.0);
    net.batch.assign(n, BatchDistribution::deterministic(1));
    return net;
  }

  /// Throws InvalidArgument describing the first violated invariant.
  void validate() const {
    if (n < 1) throw InvalidArgument("network needs at least one queue");
    auto check_vec = [this](const std::vector<double>& v, const char* name) {
      if (v.size() != n) {
        throw InvalidArgument(std::string(name) + " has " + std::to_string(v.size()) +
                              " entries, expected " + std::to_string(n));
      }
      for (std::size_t i = 0; i < n; ++i) {
        if (!(v[i] >= 0.0) || !std::isfinite(v[i])) {
          throw InvalidArgument(std::string(name) + "[" + std::to_string(i) +
                                "] must be finite and nonnegative");
        }
      }
    };
    check_vec(Lambda, "Lambda");
    check_vec(lambda_sig, "lambda_sig");
    check_vec(mu, "mu");
    check_vec(beta, "beta");
    check_vec(d, "d");
    if (p_plus.size() != n || p_minus.size() != n) {
      throw InvalidArgument("routing matrices must be n x n");
    }
    if (batch.size() != n) throw InvalidArgument("need one batch distribution per queue");
    for (std::size_t i = 0; i < n; ++i) {
      check_vec(p_plus[i], "p_plus row");
      check_vec(p_minus[i], "p_minus row");
      double total = d[i];
      for (std::size_t j = 0; j < n; ++j) total += p_plus[i][j] + p_minus[i][j];
      if (std::abs(total - 1.0) > 1e-12) {
        throw InvalidArgument("routing out of queue " + std::to_string(i) +
                              " sums to " + std::to_string(total) + ", expected 1");
      }
    }
  }
};

struct SolverOptions {
  double tol = 1e-12;
  std::size_t max_iters = 100000;
  double damping = 0.5;
  /// Solutions with some q_i >= 1 - margin are rejected as unstable.
  double margin = 1e-9;
};

struct TrafficSolution {
  std::vector<double> q;
  std::vector<double> Lambda_plus;
  std::vector<double> lambda_minus;
  std::size_t iterations = 0;
  double residual = 0.0;
};

namespace detail {

inline void effective_rates(const GNetwork& net, std::span<const double> q,
                            std::vector<double>& Lambda_plus, std::vector<double>& lambda_minus) {
  Lambda_plus = net.Lambda;
  lambda_minus = net.lambda_sig;
  for (std::size_t j = 0; j < net.n; ++j) {
    const double out = q[j] * net.mu[j];
    if (out == 0.0) continue;
    for (std::size_t i = 0; i < net.n; ++i) {
      Lambda_plus[i] += out * net.p_plus[j][i];
      lambda_minus[i] += out * net.p_minus[j][i];
    }
  }
}

// Right-hand side of the utilization equation for queue i. May exceed 1.
inline double traffic_map(const GNetwork& net, std::size_t i, double q_i, double Lambda_plus,
                          double lambda_minus) {
  const double denom =
      net.mu[i] + net.beta[i] + lambda_minus * removal_factor(net.batch[i], q_i);
  if (denom == 0.0) return Lambda_plus > 0.0 ? HUGE_VAL : 0.0;
  return Lambda_plus / denom;
}

}  // namespace detail

/**
 * Solves the traffic equations of a G-network with batch removal by damped
 * fixed-point iteration started from q = 0.
 *
 * Each sweep recomputes the effective arrival rates from the current q and
 * moves q toward the right-hand side by the damping factor. The factor is
 * halved whenever the residual grows (a steep, decreasing right-hand side makes
 * plain iteration oscillate). Iterates are kept in [0, 1 - margin] so the removal factor stays defined. Throws Unstable when
 * the converged point has a queue at the clamp, NonConvergence when the
 * iteration cap is hit.
 */
inline TrafficSolution solve_traffic(const GNetwork& net, const SolverOptions& opts = {}) {
  net.validate();
  if (!(opts.damping > 0.0 && opts.damping <= 1.0)) {
    throw InvalidArgument("damping must lie in (0,1]");
  }
  const std::size_t n = net.n;
  const double ceiling = 1.0 - opts.margin;

  std::vector<double> q(n, 0.0), target(n, 0.0);
  std::vector<double> Lp, lm;
  double residual = HUGE_VAL, previous = HUGE_VAL;
  double damping = opts.damping;
  std::size_t it = 0;
  while (it < opts.max_iters) {
    ++it;
    detail::effective_rates(net, q, Lp, lm);
    residual = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      target[i] = std::min(detail::traffic_map(net, i, q[i], Lp[i], lm[i]), ceiling);
      residual = std::max(residual, std::abs(target[i] - q[i]));
    }
    if (residual < opts.tol) break;
    if (residual > previous) damping = std::max(0.5 * damping, 1e-6);
    previous = residual;
    for (std::size_t i = 0; i < n; ++i) {
      q[i] = (1.0 - damping) * q[i] + damping * target[i];
    }
  }
  if (residual >= opts.tol) {
    throw NonConvergence("traffic equations did not converge in " + std::to_string(it) +
                             " iterations (residual " + std::to_string(residual) + ")",
                         it, residual);
  }

  std::vector<std::size_t> unstable;
  for (std::size_t i = 0; i < n; ++i) {
    if (target[i] >= ceiling) unstable.push_back(i);
  }
  if (!unstable.empty()) {
    std::string which;
    for (auto i : unstable) which += (which.empty() ? "" : ", ") + std::to_string(i);
    throw Unstable("no stable solution: utilization reaches 1 at queue(s) " + which,
                   std::move(unstable));
  }

  TrafficSolution sol;
  sol.q = target;
  detail::effective_rates(net, sol.q, sol.Lambda_plus, sol.lambda_minus);
  sol.iterations = it;
  sol.residual = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double rhs =
        detail::traffic_map(net, i, sol.q[i], sol.Lambda_plus[i], sol.lambda_minus[i]);
    sol.residual = std::max(sol.residual, std::abs(rhs - sol.q[i]));
  }
  return sol;
}

/// Product-form probability of the joint queue-length vector k.
inline double stationary_probability(const TrafficSolution& sol, std::span<const std::size_t> k) {
  if (k.size() != sol.q.size()) {
    throw InvalidArgument("state vector has " + std::to_string(k.size()) +
                          " entries, network has " + std::to_string(sol.q.size()) + " queues");
  }
  double p = 1.0;
  for (std::size_t i = 0; i < k.size(); ++i) {
    p *= (1.0 - sol.q[i]) * std::pow(sol.q[i], static_cast<double>(k[i]));
  }
  return p;
}

}  // namespace gchain
