#pragma once

#include <charconv>
#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "gchain/allocator.hpp"
#include "gchain/simulator.hpp"
#include "gchain/supply_model.hpp"

namespace gchain {

inline constexpr const char* kToolName = "gchain";
inline constexpr const char* kToolVersion = "1.0.0";

/// Shortest round-trip decimal form, '.' separator regardless of locale.
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

/// Comma-separated table with a fixed header.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string str() const {
    std::string out;
    auto line = [&out](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out += ',';
        out += cells[i];
      }
      out += '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
    return out;
  }
};

inline nlohmann::json to_json(const SolverOptions& o) {
  return {{"tol", o.tol}, {"max_iters", o.max_iters}, {"damping", o.damping}, {"margin", o.margin}};
}

inline nlohmann::json to_json(const SteadyState& s) {
  return {{"q", s.q},
          {"expected_sale", s.expected_sale},
          {"purchase_rate", s.purchase_rate},
          {"unit_cost", s.unit_cost}};
}

inline nlohmann::json to_json(const AllocationResult& r) {
  nlohmann::json j = {{"method", to_string(r.method)},
                      {"P_star", r.P_star.P},
                      {"cost_at_optimum", r.cost_at_optimum},
                      {"kkt_multiplier", r.kkt_multiplier},
                      {"kkt_residual", r.kkt_residual},
                      {"hessian_min", r.hessian_min},
                      {"second_order_certificate", r.hessian_min > 0.0},
                      {"iterations", r.iterations}};
  j["B_constant"] = r.B_constant ? nlohmann::json(*r.B_constant) : nlohmann::json(nullptr);
  return j;
}

inline nlohmann::json to_json(const Estimate& e) { return {{"mean", e.mean}, {"se", e.se}}; }

inline nlohmann::json to_json(const SimEstimates& est) {
  nlohmann::json w = nlohmann::json::array();
  for (std::size_t i = 0; i < est.q_hat.size(); ++i) {
    nlohmann::json counts = nlohmann::json::array();
    for (const auto& c : est.counts[i]) {
      counts.push_back({{"arrived", c.arrived},
                        {"perished", c.perished},
                        {"sold", c.sold},
                        {"remaining", c.remaining},
                        {"orders", c.orders}});
    }
    w.push_back({{"warehouse", i + 1},
                 {"q_hat", to_json(est.q_hat[i])},
                 {"sale_hat", to_json(est.sale_hat[i])},
                 {"purchase_rate_hat", to_json(est.purchase_rate_hat[i])},
                 {"replication_counts", counts}});
  }
  return {{"rng", est.rng}, {"warehouses", w}};
}

inline nlohmann::json to_json(const ComparisonReport& rep) {
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : rep.checks) {
    nlohmann::json j = {{"metric", c.metric},
                        {"warehouse", c.warehouse + 1},
                        {"statistic", c.statistic},
                        {"result", c.pass ? "PASS" : "FAIL"}};
    if (c.metric != "marginal_tv") {
      j["estimate"] = c.estimate;
      j["se"] = c.se;
      j["analytic"] = c.analytic;
    }
    checks.push_back(std::move(j));
  }
  return {{"all_pass", rep.all_pass}, {"checks", checks}};
}

/// Columns: warehouse, k, time_fraction (warehouse is 1-based).
inline CsvTable histogram_csv(const SimEstimates& est) {
  CsvTable t{{"warehouse", "k", "time_fraction"}, {}};
  for (std::size_t w = 0; w < est.marginal_hist.size(); ++w) {
    for (std::size_t k = 0; k < est.marginal_hist[w].size(); ++k) {
      t.rows.push_back({std::to_string(w + 1), std::to_string(k),
                        format_double(est.marginal_hist[w][k])});
    }
  }
  return t;
}

}  // namespace gchain
