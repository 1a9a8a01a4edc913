#pragma once

#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "gchain/batch.hpp"
#include "gchain/gnetwork.hpp"
#include "gchain/simulator.hpp"
#include "gchain/supply_model.hpp"

namespace gchain {

/// Model-file problem, reported with the JSON path of the offending field.
class ModelError : public std::runtime_error {
 public:
  ModelError(const std::string& path, const std::string& reason)
      : std::runtime_error(path + ": " + reason), path_(path) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

struct SimSection {
  double horizon = 1e5;
  std::optional<double> warmup;
  std::size_t replications = 10;
  std::uint64_t seed = 1;
};

/**
 * Parsed model file:
 *
 *   {
 *     "model": {
 *       "n": 3, "lambda": [..], "mu": [..], "gamma": 300,
 *       "batch": {"type": "geometric", "u": 0.3}
 *              | {"type": "deterministic", "size": 1}
 *              | {"type": "pmf", "probs": [pi(1), pi(2), ...]},
 *       "cost": {"c0": 3, "a": -0.01}
 *     },
 *     "allocation": {"P": [..]},                                     optional
 *     "solver": {"tol": .., "max_iters": .., "damping": ..},         optional
 *     "sim": {"horizon": .., "warmup": .., "replications": .., "seed": ..}  optional
 *   }
 *
 * Unknown keys anywhere are rejected. Zero entries of "probs" are dropped.
 */
struct ModelFile {
  SupplyChainInstance instance;
  std::optional<Allocation> allocation;
  SolverOptions solver;
  std::optional<SimSection> sim;

  SimConfig sim_config() const {
    if (!sim) throw ModelError("sim", "section is missing");
    if (!allocation) throw ModelError("allocation", "section is missing");
    SimConfig c;
    c.instance = instance;
    c.allocation = *allocation;
    c.horizon = sim->horizon;
    c.warmup = sim->warmup.value_or(0.1 * sim->horizon);
    c.replications = sim->replications;
    c.seed = sim->seed;
    return c;
  }
};

namespace detail {

using nlohmann::json;

inline void only_keys(const json& obj, const std::string& path,
                      std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ModelError(path, "expected an object");
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ModelError(path + "." + key, "unknown key");
  }
}

inline const json& required(const json& obj, const std::string& path, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw ModelError(path + "." + key, "required field is missing");
  return *it;
}

inline double number(const json& v, const std::string& path) {
  if (!v.is_number()) throw ModelError(path, "expected a number");
  return v.get<double>();
}

inline std::uint64_t unsigned_int(const json& v, const std::string& path) {
  if (!v.is_number_unsigned()) throw ModelError(path, "expected a nonnegative integer");
  return v.get<std::uint64_t>();
}

inline std::vector<double> numbers(const json& v, const std::string& path) {
  if (!v.is_array()) throw ModelError(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.push_back(number(v[i], path + "[" + std::to_string(i) + "]"));
  }
  return out;
}

inline BatchDistribution parse_batch(const json& b, const std::string& path) {
  if (!b.is_object()) throw ModelError(path, "expected an object");
  const auto& type = required(b, path, "type");
  if (!type.is_string()) throw ModelError(path + ".type", "expected a string");
  const auto t = type.get<std::string>();
  try {
    if (t == "geometric") {
      only_keys(b, path, {"type", "u"});
      return BatchDistribution::geometric(number(required(b, path, "u"), path + ".u"));
    }
    if (t == "deterministic") {
      only_keys(b, path, {"type", "size"});
      return BatchDistribution::deterministic(
          unsigned_int(required(b, path, "size"), path + ".size"));
    }
    if (t == "pmf") {
      only_keys(b, path, {"type", "probs"});
      const auto probs = numbers(required(b, path, "probs"), path + ".probs");
      std::vector<std::pair<std::uint64_t, double>> pmf;
      for (std::size_t k = 0; k < probs.size(); ++k) {
        if (probs[k] < 0.0) {
          throw ModelError(path + ".probs[" + std::to_string(k) + "]", "must be >= 0");
        }
        if (probs[k] > 0.0) pmf.emplace_back(k + 1, probs[k]);
      }
      return BatchDistribution::explicit_pmf(std::move(pmf));
    }
  } catch (const InvalidArgument& e) {
    throw ModelError(path, e.what());
  }
  throw ModelError(path + ".type", "must be \"geometric\", \"deterministic\" or \"pmf\"");
}

}  // namespace detail

inline ModelFile parse_model(const nlohmann::json& doc) {
  using detail::number;
  using detail::numbers;
  using detail::required;
  detail::only_keys(doc, "$", {"model", "allocation", "solver", "sim"});
  ModelFile mf;

  const auto& m = required(doc, "$", "model");
  detail::only_keys(m, "model", {"n", "lambda", "mu", "gamma", "batch", "cost"});
  auto& inst = mf.instance;
  inst.n = detail::unsigned_int(required(m, "model", "n"), "model.n");
  inst.lambda = numbers(required(m, "model", "lambda"), "model.lambda");
  inst.mu = numbers(required(m, "model", "mu"), "model.mu");
  inst.gamma = number(required(m, "model", "gamma"), "model.gamma");
  inst.batch = detail::parse_batch(required(m, "model", "batch"), "model.batch");
  const auto& cost = required(m, "model", "cost");
  detail::only_keys(cost, "model.cost", {"c0", "a"});
  inst.c0 = number(required(cost, "model.cost", "c0"), "model.cost.c0");
  inst.a = number(required(cost, "model.cost", "a"), "model.cost.a");
  try {
    inst.validate();
  } catch (const InvalidArgument& e) {
    throw ModelError("model", e.what());
  }

  if (const auto it = doc.find("allocation"); it != doc.end()) {
    detail::only_keys(*it, "allocation", {"P"});
    Allocation a{numbers(required(*it, "allocation", "P"), "allocation.P")};
    try {
      a.validate(inst.n);
    } catch (const InvalidArgument& e) {
      throw ModelError("allocation.P", e.what());
    }
    mf.allocation = std::move(a);
  }

  if (const auto it = doc.find("solver"); it != doc.end()) {
    detail::only_keys(*it, "solver", {"tol", "max_iters", "damping"});
    if (it->contains("tol")) mf.solver.tol = number((*it)["tol"], "solver.tol");
    if (it->contains("max_iters")) {
      mf.solver.max_iters = detail::unsigned_int((*it)["max_iters"], "solver.max_iters");
    }
    if (it->contains("damping")) mf.solver.damping = number((*it)["damping"], "solver.damping");
    if (!(mf.solver.tol > 0.0)) throw ModelError("solver.tol", "must be > 0");
    if (!(mf.solver.damping > 0.0 && mf.solver.damping <= 1.0)) {
      throw ModelError("solver.damping", "must lie in (0,1]");
    }
  }

  if (const auto it = doc.find("sim"); it != doc.end()) {
    detail::only_keys(*it, "sim", {"horizon", "warmup", "replications", "seed"});
    SimSection s;
    if (it->contains("horizon")) s.horizon = number((*it)["horizon"], "sim.horizon");
    if (it->contains("warmup")) s.warmup = number((*it)["warmup"], "sim.warmup");
    if (it->contains("replications")) {
      s.replications = detail::unsigned_int((*it)["replications"], "sim.replications");
    }
    if (it->contains("seed")) s.seed = detail::unsigned_int((*it)["seed"], "sim.seed");
    if (!(s.horizon > 0.0)) throw ModelError("sim.horizon", "must be > 0");
    const double warm = s.warmup.value_or(0.1 * s.horizon);
    if (!(warm >= 0.0 && warm < s.horizon)) {
      throw ModelError("sim.warmup", "must satisfy 0 <= warmup < horizon");
    }
    if (s.replications < 1) throw ModelError("sim.replications", "must be >= 1");
    mf.sim = s;
  }
  return mf;
}

inline ModelFile parse_model_text(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ModelError("$", std::string("not valid JSON: ") + e.what());
  }
  return parse_model(doc);
}

/// Whole file contents; throws ModelError when unreadable.
inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelError(path, "cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

/// 64-bit FNV-1a, hex encoded. Identifies the exact model-file bytes.
inline std::string fnv1a64_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = digits[h & 0xf];
  return out;
}

}  // namespace gchain
