#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <variant>
#include <vector>

#include "gchain/batch.hpp"
#include "gchain/errors.hpp"
#include "gchain/parallel.hpp"
#include "gchain/rng.hpp"
#include "gchain/supply_model.hpp"

namespace gchain {

struct SimConfig {
  SupplyChainInstance instance;
  Allocation allocation;
  double horizon = 1e5;
  double warmup = 1e4;
  std::size_t replications = 10;
  std::uint64_t seed = 1;

  void validate() const {
    instance.validate();
    allocation.validate(instance.n);
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw InvalidArgument("horizon must be > 0");
    if (!(warmup >= 0.0) || !(warmup < horizon)) {
      throw InvalidArgument("warmup must satisfy 0 <= warmup < horizon");
    }
    if (replications < 1) throw InvalidArgument("replications must be >= 1");
  }
};

/// Mean over replications and its standard error.
struct Estimate {
  double mean = 0.0;
  double se = 0.0;
};

/// Exact event counts of one warehouse over one whole run (warmup included).
struct RunCounts {
  std::uint64_t arrived = 0;
  std::uint64_t perished = 0;
  std::uint64_t sold = 0;
  std::uint64_t remaining = 0;
  /// Orders arriving after warmup.
  std::uint64_t orders = 0;
};

struct SimEstimates {
  std::vector<Estimate> q_hat;
  std::vector<Estimate> sale_hat;
  std::vector<Estimate> purchase_rate_hat;
  /// Time-weighted queue-length distribution per warehouse, averaged over replications.
  std::vector<std::vector<double>> marginal_hist;
  /// counts[w][r] for warehouse w, replication r.
  std::vector<std::vector<RunCounts>> counts;
  std::string rng = Xoshiro256ss::kName;
};

namespace detail {

class BatchSampler {
 public:
  explicit BatchSampler(const BatchDistribution& b) {
    std::visit(
        [this](const auto& k) {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, Deterministic>) {
            fixed_ = k.size;
          } else if constexpr (std::is_same_v<T, Geometric>) {
            log_u_ = std::log(k.u);
          } else {
            double acc = 0.0;
            for (const auto& [r, p] : k.pmf) {
              acc += p;
              sizes_.push_back(r);
              cdf_.push_back(acc);
            }
            cdf_.back() = 1.0;
          }
        },
        b.kind());
  }

  std::uint64_t operator()(Xoshiro256ss& rng) const {
    if (fixed_) return fixed_;
    if (!cdf_.empty()) {
      const double x = rng.uniform();
      const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), x);
      return sizes_[static_cast<std::size_t>(std::min<std::ptrdiff_t>(
          it - cdf_.begin(), static_cast<std::ptrdiff_t>(cdf_.size()) - 1))];
    }
    // P[R > k] = u^k  <=>  R = 1 + floor(log U / log u), U in (0,1].
    const double draw = std::floor(std::log(rng.uniform_pos()) / log_u_);
    if (draw >= 1e18) return std::numeric_limits<std::uint64_t>::max();
    return 1 + static_cast<std::uint64_t>(draw);
  }

 private:
  std::uint64_t fixed_ = 0;
  double log_u_ = 0.0;
  std::vector<std::uint64_t> sizes_;
  std::vector<double> cdf_;
};

struct RunStats {
  double busy_time = 0.0;
  std::uint64_t sold_measured = 0;
  std::vector<double> hist;  // time spent at each queue length, measured window
  RunCounts counts;
};

/**
 * One warehouse over [0, horizon]. The state is a CTMC, so the three
 * exponential streams (arrivals, perishing while stocked, orders) are merged:
 * draw the time to the next event at the total rate, then pick its type with
 * probability proportional to its rate. Ties cannot occur.
 */
inline RunStats run_warehouse(double lambda, double mu, double order_rate,
                              const BatchSampler& sample_batch, double horizon, double warmup,
                              std::uint64_t seed) {
  Xoshiro256ss rng(seed);
  RunStats s;
  s.hist.reserve(64);
  std::uint64_t k = 0;
  double t = 0.0;
  const double idle_rate = lambda + order_rate;
  const double busy_rate = idle_rate + mu;

  auto accumulate = [&](double from, double to) {
    from = std::max(from, warmup);
    if (to <= from) return;
    const double dt = to - from;
    if (k > 0) s.busy_time += dt;
    if (k >= s.hist.size()) s.hist.resize(k + 1, 0.0);
    s.hist[k] += dt;
  };

  while (true) {
    const double rate = k > 0 ? busy_rate : idle_rate;
    const double next = rate > 0.0 ? t + rng.exponential(rate) : horizon;
    if (next >= horizon) {
      accumulate(t, horizon);
      break;
    }
    accumulate(t, next);
    t = next;
    const double pick = rng.uniform() * rate;
    if (pick < lambda) {
      ++k;
      ++s.counts.arrived;
    } else if (pick < idle_rate) {
      const std::uint64_t taken = std::min(sample_batch(rng), k);
      k -= taken;
      s.counts.sold += taken;
      if (t >= warmup) {
        ++s.counts.orders;
        s.sold_measured += taken;
      }
    } else {
      --k;
      ++s.counts.perished;
    }
  }
  s.counts.remaining = k;
  return s;
}

inline Estimate summarize(const std::vector<double>& xs) {
  Estimate e;
  const double n = static_cast<double>(xs.size());
  for (double x : xs) e.mean += x;
  e.mean /= n;
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - e.mean) * (x - e.mean);
    e.se = std::sqrt(ss / (n - 1.0) / n);
  }
  return e;
}

}  // namespace detail

/**
 * Discrete-event simulation of the warehouses at a fixed allocation.
 *
 * Warehouses do not interact, so each (replication, warehouse) pair is an
 * independent run with its own stream seeded by
 * stream_seed(replication_seed(seed, r), w). Runs execute in parallel and are
 * reduced in index order, so equal configs give bit-identical estimates.
 * Statistics are time averages over [warmup, horizon].
 */
inline SimEstimates simulate(const SimConfig& config) {
  config.validate();
  const auto& inst = config.instance;
  const std::size_t n = inst.n, reps = config.replications;
  const detail::BatchSampler sampler(inst.batch);
  const double window = config.horizon - config.warmup;

  std::vector<detail::RunStats> runs(n * reps);
  parallel_for(n * reps, [&](std::size_t job) {
    const std::size_t r = job / n, w = job % n;
    runs[job] = detail::run_warehouse(inst.lambda[w], inst.mu[w],
                                      inst.gamma * config.allocation.P[w], sampler,
                                      config.horizon, config.warmup,
                                      stream_seed(replication_seed(config.seed, r), w));
  });

  SimEstimates est;
  est.q_hat.resize(n);
  est.sale_hat.resize(n);
  est.purchase_rate_hat.resize(n);
  est.marginal_hist.resize(n);
  est.counts.resize(n);
  for (std::size_t w = 0; w < n; ++w) {
    std::vector<double> q(reps), sale(reps), rate(reps);
    auto& hist = est.marginal_hist[w];
    for (std::size_t r = 0; r < reps; ++r) {
      const auto& run = runs[r * n + w];
      q[r] = run.busy_time / window;
      sale[r] = run.counts.orders > 0
                    ? static_cast<double>(run.sold_measured) / static_cast<double>(run.counts.orders)
                    : 0.0;
      rate[r] = static_cast<double>(run.sold_measured) / window;
      if (run.hist.size() > hist.size()) hist.resize(run.hist.size(), 0.0);
      for (std::size_t k = 0; k < run.hist.size(); ++k) hist[k] += run.hist[k] / window;
      est.counts[w].push_back(run.counts);
    }
    for (auto& h : hist) h /= static_cast<double>(reps);
    est.q_hat[w] = detail::summarize(q);
    est.sale_hat[w] = detail::summarize(sale);
    est.purchase_rate_hat[w] = detail::summarize(rate);
  }
  return est;
}

struct MetricCheck {
  std::string metric;
  std::size_t warehouse = 0;
  double estimate = 0.0;
  double se = 0.0;
  double analytic = 0.0;
  /// z-score for moment metrics, TV distance for "marginal_tv".
  double statistic = 0.0;
  bool pass = false;
};

struct ComparisonReport {
  std::vector<MetricCheck> checks;
  bool all_pass = true;
};

struct ComparisonThresholds {
  double max_abs_z = 3.0;
  double max_tv = 0.01;
};

/// 0.5 * sum_k |hist_k - (1-q) q^k| over the histogram's support.
inline double geometric_tv_distance(const std::vector<double>& hist, double q) {
  double tv = 0.0, pk = 1.0 - q;
  for (double h : hist) {
    tv += std::abs(h - pk);
    pk *= q;
  }
  return 0.5 * tv;
}

/**
 * Scores simulation estimates against the product-form predictions at the
 * same allocation: z-scores for utilization, sale size and purchase rate, and
 * the total-variation distance of each queue-length histogram from the
 * geometric marginal.
 */
inline ComparisonReport compare_to_analytic(const SimEstimates& est, const SupplyChainInstance& inst,
                                            const Allocation& alloc,
                                            const ComparisonThresholds& th = {}) {
  const std::size_t n = inst.n;
  if (est.q_hat.size() != n || est.sale_hat.size() != n || est.purchase_rate_hat.size() != n ||
      est.marginal_hist.size() != n) {
    throw InvalidArgument("estimates cover " + std::to_string(est.q_hat.size()) +
                          " warehouses, instance has " + std::to_string(n));
  }
  const auto ss = unit_cost(inst, alloc);
  ComparisonReport report;
  auto add_z = [&](const char* name, std::size_t w, const Estimate& e, double analytic) {
    MetricCheck c{name, w, e.mean, e.se, analytic, 0.0, false};
    const double diff = e.mean - analytic;
    if (e.se > 0.0) {
      c.statistic = diff / e.se;
    } else {
      c.statistic = std::abs(diff) <= 1e-12 ? 0.0 : std::copysign(HUGE_VAL, diff);
    }
    c.pass = std::abs(c.statistic) < th.max_abs_z;
    report.all_pass = report.all_pass && c.pass;
    report.checks.push_back(c);
  };
  for (std::size_t w = 0; w < n; ++w) {
    add_z("q", w, est.q_hat[w], ss.q[w]);
    add_z("expected_sale", w, est.sale_hat[w], ss.expected_sale[w]);
    add_z("purchase_rate", w, est.purchase_rate_hat[w], ss.purchase_rate[w]);
    MetricCheck tv{"marginal_tv", w, 0.0, 0.0, 0.0, 0.0, false};
    tv.statistic = geometric_tv_distance(est.marginal_hist[w], ss.q[w]);
    tv.pass = tv.statistic < th.max_tv;
    report.all_pass = report.all_pass && tv.pass;
    report.checks.push_back(tv);
  }
  return report;
}

}  // namespace gchain
