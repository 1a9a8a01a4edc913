#pragma once

#include <charconv>
#include <fstream>
#include <iostream>
#include <optional>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gchain/allocator.hpp"
#include "gchain/model_file.hpp"
#include "gchain/report.hpp"
#include "gchain/simulator.hpp"
#include "gchain/supply_model.hpp"
#include "gchain/sweep.hpp"

namespace gchain::cli {

enum ExitCode : int {
  kOk = 0,
  kInputError = 1,
  kUnstable = 2,
  kInteriorViolation = 3,
  kSimulationMismatch = 4,
};

namespace detail {

struct Common {
  std::string config;
  std::string output;
  std::string format;  // empty: json, or csv for sweep
  std::string allocation;
};

struct Loaded {
  ModelFile model;
  std::string hash;
};

inline Loaded load(const Common& c) {
  const auto text = read_file(c.config);
  return {parse_model_text(text), fnv1a64_hex(text)};
}

inline std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    double v = 0.0;
    const auto* b = item.data();
    const auto r = std::from_chars(b, b + item.size(), v);
    if (r.ec != std::errc{} || r.ptr != b + item.size()) {
      throw ModelError("--allocation", "bad number '" + item + "'");
    }
    out.push_back(v);
  }
  return out;
}

inline std::optional<Allocation> allocation_for(const Common& c, const ModelFile& m) {
  if (!c.allocation.empty()) {
    Allocation a{parse_list(c.allocation)};
    try {
      a.validate(m.instance.n);
    } catch (const InvalidArgument& e) {
      throw ModelError("--allocation", e.what());
    }
    return a;
  }
  return m.allocation;
}

inline nlohmann::json metadata(const char* command, const Common& c, const Loaded& l) {
  return {{"tool", kToolName},
          {"version", kToolVersion},
          {"command", command},
          {"model_file", c.config},
          {"model_fnv1a64", l.hash},
          {"solver", to_json(l.model.solver)}};
}

inline std::string csv_with_metadata(const nlohmann::json& meta, const CsvTable& t) {
  std::string out;
  for (const auto& [k, v] : meta.items()) out += "# " + k + "=" + v.dump() + "\n";
  return out + t.str();
}

inline void emit(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ModelError(path, "cannot open output file");
  f << text;
}

inline void check_format(const Common& c) {
  if (c.format != "json" && c.format != "csv") {
    throw ModelError("--format", "must be json or csv");
  }
}

inline int cmd_solve(const Common& c, std::ostream& out) {
  check_format(c);
  const auto l = load(c);
  const auto alloc = allocation_for(c, l.model);
  if (!alloc) throw ModelError("allocation", "section is missing (or pass --allocation)");
  const auto s = unit_cost(l.model.instance, *alloc, l.model.solver);
  const auto meta = metadata("solve", c, l);
  if (c.format == "csv") {
    CsvTable t{{"warehouse", "P", "q", "expected_sale", "purchase_rate", "unit_cost"}, {}};
    for (std::size_t i = 0; i < s.q.size(); ++i) {
      t.rows.push_back({std::to_string(i + 1), format_double(alloc->P[i]), format_double(s.q[i]),
                        format_double(s.expected_sale[i]), format_double(s.purchase_rate[i]),
                        format_double(s.unit_cost)});
    }
    emit(csv_with_metadata(meta, t), c.output, out);
  } else {
    nlohmann::json j = {{"metadata", meta}, {"allocation", alloc->P}, {"steady_state", to_json(s)}};
    emit(j.dump(2) + "\n", c.output, out);
  }
  return kOk;
}

inline int cmd_optimize(const Common& c, const std::string& method, std::size_t resolution,
                        std::ostream& out) {
  check_format(c);
  const auto l = load(c);
  const auto& inst = l.model.instance;
  NumericalOptions opts;
  opts.solver = l.model.solver;
  AllocationResult r;
  if (method == "closed") {
    if (!inst.batch.is_geometric()) {
      throw ModelError("model.batch",
                       "--method closed requires a geometric batch law; use --method numerical");
    }
    r = closed_form_allocation(inst, opts);
  } else if (method == "numerical") {
    r = numerical_allocation(inst, opts);
  } else if (method == "oracle") {
    r = grid_oracle(inst, resolution, opts);
  } else {
    throw ModelError("--method", "must be closed, numerical or oracle");
  }
  auto meta = metadata("optimize", c, l);
  meta["method"] = method;
  if (method == "oracle") meta["resolution"] = resolution;
  if (c.format == "csv") {
    CsvTable t{{"warehouse", "P_star"}, {}};
    for (std::size_t i = 0; i < inst.n; ++i) {
      t.rows.push_back({std::to_string(i + 1), format_double(r.P_star.P[i])});
    }
    emit(csv_with_metadata(meta, t), c.output, out);
  } else {
    nlohmann::json j = {{"metadata", meta}, {"result", to_json(r)}};
    emit(j.dump(2) + "\n", c.output, out);
  }
  return kOk;
}

inline int cmd_simulate(const Common& c, std::optional<std::uint64_t> seed, const std::string& hist,
                        std::ostream& out) {
  check_format(c);
  const auto l = load(c);
  auto model = l.model;
  model.allocation = allocation_for(c, l.model);
  auto cfg = model.sim_config();
  if (seed) cfg.seed = *seed;
  // Fails fast (exit 2) before simulating an allocation with no steady state.
  unit_cost(cfg.instance, cfg.allocation, model.solver);

  const auto est = simulate(cfg);
  const auto rep = compare_to_analytic(est, cfg.instance, cfg.allocation);

  auto meta = metadata("simulate", c, l);
  meta["seed"] = cfg.seed;
  meta["rng"] = est.rng;
  meta["horizon"] = cfg.horizon;
  meta["warmup"] = cfg.warmup;
  meta["replications"] = cfg.replications;
  const auto hist_text = csv_with_metadata(meta, histogram_csv(est));
  if (c.format == "csv") {
    emit(hist_text, c.output, out);
  } else {
    nlohmann::json j = {{"metadata", meta},
                        {"allocation", cfg.allocation.P},
                        {"estimates", to_json(est)},
                        {"comparison", to_json(rep)}};
    emit(j.dump(2) + "\n", c.output, out);
  }
  std::string hist_path = hist;
  if (hist_path.empty() && !c.output.empty() && c.format == "json") {
    const auto dot = c.output.rfind('.');
    const auto slash = c.output.find_last_of('/');
    const bool has_ext = dot != std::string::npos && (slash == std::string::npos || dot > slash);
    hist_path = (has_ext ? c.output.substr(0, dot) : c.output) + ".hist.csv";
  }
  if (!hist_path.empty()) emit(hist_text, hist_path, out);
  return rep.all_pass ? kOk : kSimulationMismatch;
}

inline int cmd_sweep(const Common& c, const std::string& plane, const std::string& param,
                     const std::string& range_text, std::ostream& out) {
  const auto l = load(c);
  const auto& inst = l.model.instance;
  if (plane.empty() == param.empty()) {
    throw ModelError("sweep", "give exactly one of --plane or --param");
  }
  SweepRange range;
  try {
    range = parse_range(range_text);
  } catch (const InvalidArgument& e) {
    throw ModelError("--range", e.what());
  }
  auto meta = metadata("sweep", c, l);
  meta["range"] = range_text;
  CsvTable table;
  if (!plane.empty()) {
    if (plane != "P1,P2") throw ModelError("--plane", "only P1,P2 is supported");
    if (inst.n != 3) throw ModelError("--plane", "needs a model with exactly 3 warehouses");
    meta["plane"] = plane;
    table = plane_sweep(inst, range, l.model.solver);
  } else {
    static const std::regex pattern(R"((lambda|mu|P)_([0-9]+))");
    std::smatch m;
    if (!std::regex_match(param, m, pattern)) {
      throw ModelError("--param", "must be lambda_i, mu_i or P_i");
    }
    const std::size_t idx = std::stoul(m[2].str());
    if (idx < 1 || idx > inst.n) throw ModelError("--param", "warehouse index out of range");
    meta["param"] = param;
    if (m[1] == "P") {
      Allocation base;
      if (l.model.allocation) {
        base = *l.model.allocation;
      } else {
        NumericalOptions opts;
        opts.solver = l.model.solver;
        try {
          base = inst.batch.is_geometric() ? closed_form_allocation(inst, opts).P_star
                                           : numerical_allocation(inst, opts).P_star;
        } catch (const InteriorViolation&) {
          base = numerical_allocation(inst, opts).P_star;
        }
      }
      meta["base_allocation"] = base.P;
      for (double v : range.points()) {
        if (v < 0.0 || v > 1.0) throw ModelError("--range", "P values must lie in [0,1]");
      }
      table = allocation_sweep(inst, base, idx - 1, range, l.model.solver);
    } else {
      if (!inst.batch.is_geometric()) {
        throw ModelError("--param", "lambda/mu sweeps use the closed form and need a geometric batch");
      }
      table = parameter_sweep(inst, m[1] == "lambda" ? SweepTarget::Lambda : SweepTarget::Mu,
                              idx - 1, range);
    }
  }
  emit(csv_with_metadata(meta, table), c.output, out);
  return kOk;
}

}  // namespace detail

inline constexpr const char* kSweepColumns =
    "CSV columns (fixed order; lines starting with '#' carry metadata):\n"
    "  --plane P1,P2       P_1,P_2,P_3,q_1,q_2,q_3,ES_1,ES_2,ES_3,C,status\n"
    "  --param P_i         P_1..P_n,q_1..q_n,ES_1..ES_n,C,status\n"
    "  --param lambda_i    value,P_1..P_n,C,status   (closed-form optimum)\n"
    "  --param mu_i        value,P_1..P_n,C,status   (closed-form optimum)\n"
    "status is ok, infeasible or interior_violation.";

/**
 * Runs the command line and returns the process exit code:
 * 0 success, 1 input error, 2 instability, 3 closed-form optimum not
 * interior, 4 simulation disagrees with the analytic model.
 */
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Perishable-goods supply chains as G-networks with batch removal", "gchain"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  detail::Common c;
  auto add_common = [&c](CLI::App* sub) {
    sub->add_option("--config", c.config, "Model file (JSON)")->required();
    sub->add_option("--output", c.output, "Write the result here instead of stdout");
    sub->add_option("--format", c.format, "json or csv (sweep: csv only)");
  };

  auto* solve = app.add_subcommand("solve", "Steady state and unit cost at an allocation");
  add_common(solve);
  solve->add_option("--allocation", c.allocation, "Override allocation, e.g. 0.3,0.3,0.4");

  std::string method = "closed";
  std::size_t resolution = 1000;
  auto* optimize = app.add_subcommand("optimize", "Cost-minimizing order allocation");
  add_common(optimize);
  optimize->add_option("--method", method, "closed, numerical or oracle")->default_val("closed");
  optimize->add_option("--resolution", resolution, "Lattice resolution for --method oracle")
      ->default_val(1000);

  std::optional<std::uint64_t> seed;
  std::string hist;
  auto* sim = app.add_subcommand("simulate", "Discrete-event simulation vs analytic model");
  add_common(sim);
  sim->add_option("--allocation", c.allocation, "Override allocation");
  sim->add_option("--seed", seed, "Override sim.seed");
  sim->add_option("--hist", hist, "Histogram CSV path (default: <output>.hist.csv)");

  std::string plane, param, range;
  auto* sweep = app.add_subcommand("sweep", "CSV tables of cost, utilization and optimum");
  sweep->footer(kSweepColumns);
  add_common(sweep);
  sweep->add_option("--plane", plane, "P1,P2: cost surface with P_3 = 1 - P_1 - P_2");
  sweep->add_option("--param", param, "lambda_i, mu_i or P_i");
  sweep->add_option("--range", range, "from:to:steps")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kInputError;
  }

  if (c.format.empty()) c.format = sweep->parsed() ? "csv" : "json";

  try {
    if (solve->parsed()) return detail::cmd_solve(c, out);
    if (optimize->parsed()) return detail::cmd_optimize(c, method, resolution, out);
    if (sim->parsed()) return detail::cmd_simulate(c, seed, hist, out);
    if (sweep->parsed()) {
      if (c.format != "csv") throw ModelError("--format", "sweep writes CSV only");
      return detail::cmd_sweep(c, plane, param, range, out);
    }
  } catch (const ModelError& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const Unstable& e) {
    err << "unstable: " << e.what() << "\n";
    return kUnstable;
  } catch (const Infeasible& e) {
    err << "unstable: " << e.what() << "\n";
    return kUnstable;
  } catch (const InteriorViolation& e) {
    err << "interior violation: " << e.what()
        << "\nthe closed form assumes an interior optimum; try --method numerical\n";
    return kInteriorViolation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }
  return kInputError;
}

}  // namespace gchain::cli
