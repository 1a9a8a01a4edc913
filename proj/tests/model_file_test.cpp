#include <string>

#include <gtest/gtest.h>

#include "gchain/model_file.hpp"

namespace gchain {
namespace {

const std::string kModel = R"({
  "model": {"n": 2, "lambda": [3, 4], "mu": [1, 2], "gamma": 20,
            "batch": {"type": "geometric", "u": 0.5}, "cost": {"c0": 3, "a": -0.01}}
})";

// Returns the ModelError path for `text`, or "" when it parses.
std::string error_path(const std::string& text) {
  try {
    parse_model_text(text);
  } catch (const ModelError& e) {
    return e.path();
  }
  return "";
}

std::string with_model(const std::string& model_body, const std::string& extra = "") {
  return R"({"model": )" + model_body + extra + "}";
}

TEST(ParseModel, MinimalFile) {
  const auto m = parse_model_text(kModel);
  EXPECT_EQ(m.instance.n, 2u);
  EXPECT_EQ(m.instance.lambda, (std::vector<double>{3, 4}));
  EXPECT_EQ(m.instance.gamma, 20.0);
  EXPECT_TRUE(m.instance.batch.is_geometric());
  EXPECT_EQ(m.instance.batch.geometric_u(), 0.5);
  EXPECT_EQ(m.instance.a, -0.01);
  EXPECT_FALSE(m.allocation.has_value());
  EXPECT_FALSE(m.sim.has_value());
  EXPECT_EQ(m.solver.tol, SolverOptions{}.tol);
}

TEST(ParseModel, BundledReferenceModel) {
  const auto m = parse_model_text(read_file(GCHAIN_MODEL_DIR "/three_warehouse/model.json"));
  EXPECT_EQ(m.instance.n, 3u);
  ASSERT_TRUE(m.allocation.has_value());
  const auto cfg = m.sim_config();
  EXPECT_EQ(cfg.horizon, 1e5);
  EXPECT_EQ(cfg.warmup, 1e4);
  EXPECT_EQ(cfg.replications, 10u);
}

TEST(ParseModel, BatchKinds) {
  const auto det = parse_model_text(with_model(
      R"({"n": 1, "lambda": [1], "mu": [1], "gamma": 1, "batch": {"type": "deterministic", "size": 3}, "cost": {"c0": 1, "a": 0}})"));
  EXPECT_EQ(det.instance.batch.mean(), 3.0);
  const auto pmf = parse_model_text(with_model(
      R"({"n": 1, "lambda": [1], "mu": [1], "gamma": 1, "batch": {"type": "pmf", "probs": [0.5, 0, 0.5]}, "cost": {"c0": 1, "a": 0}})"));
  EXPECT_EQ(pmf.instance.batch.mean(), 2.0);
  EXPECT_EQ(pmf.instance.batch.pmf(2), 0.0);
}

TEST(ParseModel, ErrorsNameTheField) {
  EXPECT_EQ(error_path("{"), "$");
  EXPECT_EQ(error_path("{}"), "$.model");
  EXPECT_EQ(error_path(R"({"model": {}, "extra": 1})"), "$.extra");
  EXPECT_EQ(error_path(with_model(
                R"({"n": 1, "lamda": [1], "mu": [1], "gamma": 1, "batch": {"type": "geometric", "u": 0.5}, "cost": {"c0": 1, "a": 0}})")),
            "model.lamda");
  EXPECT_EQ(error_path(with_model(
                R"({"n": 1, "lambda": ["x"], "mu": [1], "gamma": 1, "batch": {"type": "geometric", "u": 0.5}, "cost": {"c0": 1, "a": 0}})")),
            "model.lambda[0]");
  EXPECT_EQ(error_path(with_model(
                R"({"n": 1, "lambda": [1], "mu": [1], "gamma": 1, "batch": {"type": "poisson"}, "cost": {"c0": 1, "a": 0}})")),
            "model.batch.type");
  EXPECT_EQ(error_path(with_model(
                R"({"n": 1, "lambda": [1], "mu": [1], "gamma": 1, "batch": {"type": "geometric", "u": 1.5}, "cost": {"c0": 1, "a": 0}})")),
            "model.batch");
  EXPECT_EQ(error_path(with_model(
                R"({"n": 1, "lambda": [1], "mu": [1], "gamma": 1, "batch": {"type": "geometric", "u": 0.5}, "cost": {"c0": 1, "a": 0.1}})")),
            "model");
  EXPECT_EQ(error_path(with_model(
                R"({"n": 2, "lambda": [1], "mu": [1, 1], "gamma": 1, "batch": {"type": "geometric", "u": 0.5}, "cost": {"c0": 1, "a": 0}})")),
            "model");
  EXPECT_EQ(error_path(with_model(
                R"({"n": 1, "lambda": [1], "mu": [1], "gamma": 1, "batch": {"type": "pmf", "probs": [0.5, -0.5, 1]}, "cost": {"c0": 1, "a": 0}})")),
            "model.batch.probs[1]");
}

TEST(ParseModel, OptionalSections) {
  const std::string body =
      R"({"n": 2, "lambda": [3, 4], "mu": [1, 2], "gamma": 20, "batch": {"type": "geometric", "u": 0.5}, "cost": {"c0": 3, "a": -0.01}})";
  EXPECT_EQ(error_path(with_model(body, R"(, "allocation": {"P": [0.5, 0.6]})")), "allocation.P");
  EXPECT_EQ(error_path(with_model(body, R"(, "allocation": {"Q": [0.5, 0.5]})")), "allocation.Q");
  EXPECT_EQ(error_path(with_model(body, R"(, "solver": {"damping": 0})")), "solver.damping");
  EXPECT_EQ(error_path(with_model(body, R"(, "solver": {"max_iters": -3})")), "solver.max_iters");
  EXPECT_EQ(error_path(with_model(body, R"(, "sim": {"horizon": 10, "warmup": 10})")), "sim.warmup");
  EXPECT_EQ(error_path(with_model(body, R"(, "sim": {"replications": 0})")), "sim.replications");

  const auto m = parse_model_text(
      with_model(body, R"(, "allocation": {"P": [0.25, 0.75]}, "sim": {"horizon": 500, "seed": 7})"));
  const auto cfg = m.sim_config();
  EXPECT_EQ(cfg.warmup, 50.0);
  EXPECT_EQ(cfg.seed, 7u);
  EXPECT_EQ(cfg.allocation.P, (std::vector<double>{0.25, 0.75}));
}

TEST(ParseModel, SimConfigNeedsSections) {
  try {
    parse_model_text(kModel).sim_config();
    FAIL() << "expected ModelError";
  } catch (const ModelError& e) {
    EXPECT_EQ(e.path(), "sim");
  }
}

TEST(ReadFile, MissingFile) {
  EXPECT_THROW(read_file("/nonexistent/model.json"), ModelError);
}

TEST(Fnv1a, KnownVectors) {
  EXPECT_EQ(fnv1a64_hex(""), "cbf29ce484222325");
  EXPECT_EQ(fnv1a64_hex("a"), "af63dc4c8601ec8c");
}

}  // namespace
}  // namespace gchain
