#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "gchain/errors.hpp"

namespace gchain {

/// Every order asks for exactly `size` objects.
struct Deterministic {
  std::uint64_t size = 1;
};

/// P[R = r] = (1 - u) u^(r-1), r >= 1.
struct Geometric {
  double u = 0.5;
};

/// Finite pmf given as (r, pi_r) pairs, r >= 1, sorted by r.
struct Explicit {
  std::vector<std::pair<std::uint64_t, double>> pmf;
};

inline constexpr std::size_t kDefaultMaxSupport = 10000;

namespace detail {

// (1 - q^r) / (1 - q) for q in [0,1), r >= 1, without cancellation near q = 1.
inline double geometric_partial_sum(double q, std::uint64_t r) {
  if (r == 1 || q == 0.0) return 1.0;
  const double log_q = std::log(q);
  return -std::expm1(static_cast<double>(r) * log_q) / (1.0 - q);
}

inline void check_unit_interval(double q, const char* fn) {
  if (!(q >= 0.0 && q <= 1.0)) {
    throw DomainError(std::string(fn) + ": q must lie in [0,1], got " + std::to_string(q));
  }
}

inline void check_half_open(double q, const char* fn) {
  if (!(q >= 0.0 && q < 1.0)) {
    throw DomainError(std::string(fn) + ": q must lie in [0,1), got " + std::to_string(q));
  }
}

}  // namespace detail

/**
 * Law of the number of objects requested by one order (one signal).
 *
 * Immutable once constructed; the named constructors validate their input.
 */
class BatchDistribution {
 public:
  using Kind = std::variant<Deterministic, Geometric, Explicit>;

  BatchDistribution() : kind_(Deterministic{1}) {}

  static BatchDistribution deterministic(std::uint64_t size) {
    if (size < 1) throw InvalidArgument("deterministic batch size must be >= 1");
    return BatchDistribution(Deterministic{size});
  }

  static BatchDistribution geometric(double u) {
    if (!(u > 0.0 && u < 1.0)) {
      throw InvalidArgument("geometric batch parameter u must lie in (0,1), got " +
                            std::to_string(u));
    }
    return BatchDistribution(Geometric{u});
  }

  static BatchDistribution explicit_pmf(std::vector<std::pair<std::uint64_t, double>> pmf,
                                        std::size_t max_support = kDefaultMaxSupport) {
    if (pmf.empty()) throw InvalidArgument("explicit pmf must have at least one entry");
    if (pmf.size() > max_support) {
      throw InvalidArgument("explicit pmf has " + std::to_string(pmf.size()) +
                            " entries, above the support cap of " + std::to_string(max_support));
    }
    std::sort(pmf.begin(), pmf.end());
    double total = 0.0;
    for (std::size_t k = 0; k < pmf.size(); ++k) {
      const auto& [r, p] = pmf[k];
      if (r < 1) throw InvalidArgument("explicit pmf batch sizes must be >= 1");
      if (k > 0 && pmf[k - 1].first == r) {
        throw InvalidArgument("explicit pmf repeats batch size " + std::to_string(r));
      }
      if (!(p > 0.0) || !std::isfinite(p)) {
        throw InvalidArgument("explicit pmf probabilities must be positive and finite");
      }
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-12) {
      throw InvalidArgument("explicit pmf must sum to 1 (within 1e-12), sums to " +
                            std::to_string(total));
    }
    return BatchDistribution(Explicit{std::move(pmf)});
  }

  const Kind& kind() const noexcept { return kind_; }

  bool is_geometric() const noexcept { return std::holds_alternative<Geometric>(kind_); }

  /// Geometric parameter; throws if the law is not geometric.
  double geometric_u() const {
    if (const auto* g = std::get_if<Geometric>(&kind_)) return g->u;
    throw InvalidArgument("batch distribution is not geometric");
  }

  /// E[R].
  double mean() const {
    return std::visit(
        [](const auto& k) -> double {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, Deterministic>) {
            return static_cast<double>(k.size);
          } else if constexpr (std::is_same_v<T, Geometric>) {
            return 1.0 / (1.0 - k.u);
          } else {
            double m = 0.0;
            for (const auto& [r, p] : k.pmf) m += static_cast<double>(r) * p;
            return m;
          }
        },
        kind_);
  }

  /// P[R = r].
  double pmf(std::uint64_t r) const {
    if (r < 1) return 0.0;
    return std::visit(
        [r](const auto& k) -> double {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, Deterministic>) {
            return r == k.size ? 1.0 : 0.0;
          } else if constexpr (std::is_same_v<T, Geometric>) {
            return (1.0 - k.u) * std::pow(k.u, static_cast<double>(r - 1));
          } else {
            auto it = std::lower_bound(k.pmf.begin(), k.pmf.end(), r,
                                       [](const auto& e, std::uint64_t v) { return e.first < v; });
            return (it != k.pmf.end() && it->first == r) ? it->second : 0.0;
          }
        },
        kind_);
  }

 private:
  explicit BatchDistribution(Kind k) : kind_(std::move(k)) {}

  Kind kind_;
};

/// F(q) = sum_r pi(r) q^r on [0,1].
inline double generating_function(const BatchDistribution& batch, double q) {
  detail::check_unit_interval(q, "generating_function");
  return std::visit(
      [q](const auto& k) -> double {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, Deterministic>) {
          return std::pow(q, static_cast<double>(k.size));
        } else if constexpr (std::is_same_v<T, Geometric>) {
          return q * (1.0 - k.u) / (1.0 - q * k.u);
        } else {
          double f = 0.0;
          for (const auto& [r, p] : k.pmf) f += p * std::pow(q, static_cast<double>(r));
          return f;
        }
      },
      batch.kind());
}

/**
 * (1 - F(q)) / (1 - q) on [0,1): the mean number of customers a signal would
 * remove, weighted by how full the queue is. Equals 1 for unit batches and
 * grows to E[R] as q -> 1.
 */
inline double removal_factor(const BatchDistribution& batch, double q) {
  detail::check_half_open(q, "removal_factor");
  return std::visit(
      [q](const auto& k) -> double {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, Deterministic>) {
          return detail::geometric_partial_sum(q, k.size);
        } else if constexpr (std::is_same_v<T, Geometric>) {
          return 1.0 / (1.0 - q * k.u);
        } else {
          double s = 0.0;
          for (const auto& [r, p] : k.pmf) s += p * detail::geometric_partial_sum(q, r);
          return s;
        }
      },
      batch.kind());
}

}  // namespace gchain
