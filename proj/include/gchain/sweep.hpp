#pragma once

#include <charconv>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gchain/allocator.hpp"
#include "gchain/errors.hpp"
#include "gchain/parallel.hpp"
#include "gchain/report.hpp"
#include "gchain/supply_model.hpp"

namespace gchain {

/// Evenly spaced values from..to inclusive.
struct SweepRange {
  double from = 0.0;
  double to = 1.0;
  std::size_t steps = 0;

  /// steps == 0 gives no points; from == to or steps == 1 gives just `from`.
  std::vector<double> points() const {
    if (steps == 0) return {};
    if (from == to || steps == 1) return {from};
    std::vector<double> v(steps);
    for (std::size_t k = 0; k < steps; ++k) {
      v[k] = from + (to - from) * static_cast<double>(k) / static_cast<double>(steps - 1);
    }
    return v;
  }
};

/// Parses "from:to:steps".
inline SweepRange parse_range(std::string_view text) {
  const auto c1 = text.find(':');
  const auto c2 = c1 == std::string_view::npos ? c1 : text.find(':', c1 + 1);
  if (c2 == std::string_view::npos || text.find(':', c2 + 1) != std::string_view::npos) {
    throw InvalidArgument("range must look like from:to:steps, got '" + std::string(text) + "'");
  }
  auto num = [&](std::string_view s, double& out) {
    const auto r = std::from_chars(s.data(), s.data() + s.size(), out);
    if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) {
      throw InvalidArgument("bad number '" + std::string(s) + "' in range");
    }
  };
  SweepRange r;
  num(text.substr(0, c1), r.from);
  num(text.substr(c1 + 1, c2 - c1 - 1), r.to);
  const auto s = text.substr(c2 + 1);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), r.steps);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw InvalidArgument("bad step count '" + std::string(s) + "' in range");
  }
  return r;
}

namespace detail {

inline std::vector<std::string> indexed(const char* stem, std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(std::string(stem) + "_" + std::to_string(i + 1));
  return out;
}

// Cells P..., q..., ES..., C, status for one allocation.
inline std::vector<std::string> state_row(const SupplyChainInstance& inst,
                                          const std::vector<double>& P,
                                          const SolverOptions& opts) {
  std::vector<std::string> row;
  for (double p : P) row.push_back(format_double(p));
  try {
    const auto s = steady_state(inst, P, opts);
    for (double q : s.q) row.push_back(format_double(q));
    for (double e : s.expected_sale) row.push_back(format_double(e));
    row.push_back(format_double(s.unit_cost));
    row.push_back("ok");
  } catch (const Unstable&) {
    row.insert(row.end(), 2 * inst.n + 1, "");
    row.push_back("infeasible");
  } catch (const NonConvergence&) {
    row.insert(row.end(), 2 * inst.n + 1, "");
    row.push_back("infeasible");
  }
  return row;
}

inline std::vector<std::string> state_header(std::size_t n) {
  std::vector<std::string> h;
  for (const char* stem : {"P", "q", "ES"}) {
    auto cols = indexed(stem, n);
    h.insert(h.end(), cols.begin(), cols.end());
  }
  h.push_back("C");
  h.push_back("status");
  return h;
}

}  // namespace detail

/**
 * Unit-cost surface over (P_1, P_2) with P_3 = 1 - P_1 - P_2 (n = 3 only).
 * Both axes use `range`; points outside the simplex are skipped, unstable
 * ones are kept with status "infeasible".
 * Columns: P_1,P_2,P_3,q_1,q_2,q_3,ES_1,ES_2,ES_3,C,status.
 */
inline CsvTable plane_sweep(const SupplyChainInstance& inst, const SweepRange& range,
                            const SolverOptions& opts = {}) {
  inst.validate();
  if (inst.n != 3) throw InvalidArgument("plane sweep needs exactly 3 warehouses");
  CsvTable table{detail::state_header(3), {}};
  const auto xs = range.points();
  std::vector<std::vector<std::vector<std::string>>> blocks(xs.size());
  parallel_for(xs.size(), [&](std::size_t a) {
    for (double p2 : xs) {
      const double p1 = xs[a];
      double p3 = 1.0 - p1 - p2;
      if (p1 < 0.0 || p2 < 0.0 || p3 < -1e-12) continue;
      p3 = std::max(p3, 0.0);
      blocks[a].push_back(detail::state_row(inst, {p1, p2, p3}, opts));
    }
  });
  for (auto& b : blocks) {
    for (auto& r : b) table.rows.push_back(std::move(r));
  }
  return table;
}

/**
 * Moves P_index over `range` starting from `base`; the other shares keep
 * their proportions and absorb the difference. Columns as plane_sweep for n
 * warehouses.
 */
inline CsvTable allocation_sweep(const SupplyChainInstance& inst, const Allocation& base,
                                 std::size_t index, const SweepRange& range,
                                 const SolverOptions& opts = {}) {
  inst.validate();
  base.validate(inst.n);
  if (index >= inst.n) throw InvalidArgument("sweep index out of range");
  CsvTable table{detail::state_header(inst.n), {}};
  const auto xs = range.points();
  for (double v : xs) {
    if (v < 0.0 || v > 1.0) throw InvalidArgument("allocation sweep values must lie in [0,1]");
  }
  const double rest = 1.0 - base.P[index];
  table.rows.resize(xs.size());
  parallel_for(xs.size(), [&](std::size_t k) {
    std::vector<double> P(inst.n);
    for (std::size_t i = 0; i < inst.n; ++i) {
      if (i == index) {
        P[i] = xs[k];
      } else if (rest > 0.0) {
        P[i] = base.P[i] / rest * (1.0 - xs[k]);
      } else {
        P[i] = (1.0 - xs[k]) / static_cast<double>(inst.n - 1);
      }
    }
    table.rows[k] = detail::state_row(inst, P, opts);
  });
  return table;
}

/**
 * Closed-form optimum as lambda_index or mu_index varies.
 * Columns: value,P_1..P_n,C,status where status is "ok" or "interior_violation".
 */
inline CsvTable parameter_sweep(const SupplyChainInstance& inst, SweepTarget target,
                                std::size_t index, const SweepRange& range) {
  CsvTable table;
  table.header.push_back("value");
  auto cols = detail::indexed("P", inst.n);
  table.header.insert(table.header.end(), cols.begin(), cols.end());
  table.header.push_back("C");
  table.header.push_back("status");
  for (const auto& row : sensitivity_sweep(inst, target, index, range.from, range.to, range.steps)) {
    std::vector<std::string> cells{format_double(row.value)};
    if (row.result) {
      for (double p : row.result->P_star.P) cells.push_back(format_double(p));
      cells.push_back(format_double(row.result->cost_at_optimum));
      cells.push_back("ok");
    } else {
      cells.insert(cells.end(), inst.n + 1, "");
      cells.push_back("interior_violation");
    }
    table.rows.push_back(std::move(cells));
  }
  return table;
}

}  // namespace gchain
