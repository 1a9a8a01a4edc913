#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "gchain/allocator.hpp"
#include "test_support.hpp"

namespace gchain {
namespace {

using testing::kReferenceOptimum;
using testing::reference_instance;

SupplyChainInstance identical(std::size_t n) {
  return {n, std::vector<double>(n, 10.0), std::vector<double>(n, 2.0), 100.0,
          BatchDistribution::geometric(0.4), 3.0, -0.02};
}

TEST(ClosedForm, ReferenceOptimum) {
  const auto r = closed_form_allocation(reference_instance());
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(r.P_star.P[i], kReferenceOptimum[i], 1e-3);
  EXPECT_NEAR(r.cost_at_optimum, 2.4100, 5e-4);
  EXPECT_NEAR(std::accumulate(r.P_star.P.begin(), r.P_star.P.end(), 0.0), 1.0, 1e-12);
  EXPECT_LT(r.kkt_residual, 1e-6);
  EXPECT_GT(r.hessian_min, 0.0);
  EXPECT_EQ(r.method, AllocationMethod::ClosedForm);
}

TEST(ClosedForm, SingleWarehouseTakesEverything) {
  const auto r = closed_form_allocation(identical(1));
  ASSERT_EQ(r.P_star.P.size(), 1u);
  EXPECT_NEAR(r.P_star.P[0], 1.0, 1e-12);
}

TEST(ClosedForm, IdenticalWarehousesSplitEvenly) {
  for (std::size_t n = 2; n <= 6; ++n) {
    const auto r = closed_form_allocation(identical(n));
    for (double p : r.P_star.P) EXPECT_NEAR(p, 1.0 / static_cast<double>(n), 1e-12);
  }
}

TEST(ClosedForm, SkewedInstanceIsNotInterior) {
  auto skew = reference_instance();
  skew.mu[2] = 0.001;  // warehouse 3 barely perishes
  try {
    closed_form_allocation(skew);
    FAIL() << "expected InteriorViolation";
  } catch (const InteriorViolation& e) {
    EXPECT_FALSE(e.coordinates().empty());
  }
}

TEST(ClosedForm, RequiresGeometricBatch) {
  auto inst = reference_instance();
  inst.batch = BatchDistribution::deterministic(1);
  EXPECT_THROW(closed_form_allocation(inst), InvalidArgument);
}

TEST(ClosedForm, MultiplierIdentity) {
  std::mt19937_64 rng(31);
  int checked = 0;
  for (int t = 0; t < 200; ++t) {
    const auto inst = testing::random_geometric_instance(rng, 2 + t % 5);
    AllocationResult r;
    try {
      r = closed_form_allocation(inst);
    } catch (const InteriorViolation&) {
      continue;
    }
    ASSERT_TRUE(r.B_constant.has_value());
    const double u = inst.batch.geometric_u();
    const double B = *r.B_constant;
    EXPECT_NEAR(B, 1.0 - 2.0 * u * r.kkt_multiplier / (inst.a * inst.gamma), 1e-12 * std::abs(B));
    double num = inst.gamma, den = 0.0;
    for (std::size_t i = 0; i < inst.n; ++i) {
      num += inst.mu[i] + inst.lambda[i] * u;
      den += 2.0 * std::sqrt(inst.lambda[i] * inst.mu[i] * u);
    }
    const double lhs = std::sqrt(1.0 + 1.0 / (B * B - 1.0));
    EXPECT_NEAR(lhs, num / den, 1e-9 * std::max(1.0, num / den));
    ++checked;
  }
  EXPECT_GT(checked, 50);
}

TEST(ClosedForm, GradientsAreEqualAtOptimum) {
  const auto inst = reference_instance();
  const auto r = closed_form_allocation(inst);
  const auto g = cost_gradient(inst, r.P_star);
  for (double gi : g) EXPECT_NEAR(gi, g[0], 1e-6);
  EXPECT_NEAR(r.kkt_multiplier, -g[0], 1e-6);
}

TEST(ClosedForm, LocalMinimumAlongRandomDirections) {
  const auto inst = reference_instance();
  const auto r = closed_form_allocation(inst);
  std::mt19937_64 rng(37);
  std::normal_distribution<double> normal;
  for (int t = 0; t < 100; ++t) {
    std::vector<double> d(3);
    for (auto& x : d) x = normal(rng);
    const double mean = (d[0] + d[1] + d[2]) / 3.0;
    double norm = 0.0;
    for (auto& x : d) {
      x -= mean;
      norm += x * x;
    }
    norm = std::sqrt(norm);
    for (double sign : {1.0, -1.0}) {
      std::vector<double> P(3);
      for (std::size_t i = 0; i < 3; ++i) P[i] = r.P_star.P[i] + sign * 1e-3 * d[i] / norm;
      P = project_to_simplex(P);
      EXPECT_GE(steady_state(inst, P).unit_cost, r.cost_at_optimum);
    }
  }
}

TEST(NumericalAllocation, MatchesClosedForm) {
  std::mt19937_64 rng(41);
  int checked = 0;
  for (int t = 0; t < 300 && checked < 200; ++t) {
    const auto inst = testing::random_geometric_instance(rng, 1 + t % 6);
    AllocationResult closed;
    try {
      closed = closed_form_allocation(inst);
    } catch (const InteriorViolation&) {
      continue;
    }
    const auto num = numerical_allocation(inst);
    for (std::size_t i = 0; i < inst.n; ++i) ASSERT_NEAR(num.P_star.P[i], closed.P_star.P[i], 1e-6);
    EXPECT_EQ(num.method, AllocationMethod::ProjectedGradient);
    ++checked;
  }
  EXPECT_EQ(checked, 200);
}

TEST(NumericalAllocation, SymmetricUnitBatches) {
  SupplyChainInstance inst{2, {5.0, 5.0}, {1.0, 1.0}, 20.0, BatchDistribution::deterministic(1),
                           3.0, -0.01};
  const auto r = numerical_allocation(inst);
  EXPECT_NEAR(r.P_star.P[0], 0.5, 1e-9);
  EXPECT_NEAR(r.P_star.P[1], 0.5, 1e-9);
  EXPECT_FALSE(r.B_constant.has_value());
}

TEST(NumericalAllocation, HandlesBoundaryOptimum) {
  auto skew = reference_instance();
  skew.mu[2] = 0.001;  // warehouse 3 barely perishes
  const auto r = numerical_allocation(skew);
  EXPECT_NEAR(r.P_star.P[0] + r.P_star.P[1] + r.P_star.P[2], 1.0, 1e-12);
  EXPECT_GE(*std::min_element(r.P_star.P.begin(), r.P_star.P.end()), 0.0);
  // No lattice point does meaningfully better.
  EXPECT_LE(r.cost_at_optimum, grid_oracle(skew, 1000).cost_at_optimum + 1e-9);
}

TEST(NumericalAllocation, InfeasibleInstance) {
  SupplyChainInstance inst{2, {100.0, 100.0}, {1.0, 1.0}, 10.0,
                           BatchDistribution::geometric(0.3), 3.0, -0.01};
  EXPECT_THROW(numerical_allocation(inst), Infeasible);
}

TEST(GridOracle, SymmetricCoarseGrid) {
  const auto r = grid_oracle(identical(2), 2);
  EXPECT_EQ(r.P_star.P, (std::vector<double>{0.5, 0.5}));
}

TEST(GridOracle, NeverBeatsClosedForm) {
  const auto inst = reference_instance();
  const auto closed = closed_form_allocation(inst);
  const auto grid = grid_oracle(inst, 200);
  EXPECT_GE(grid.cost_at_optimum, closed.cost_at_optimum - 1e-6);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(grid.P_star.P[i], closed.P_star.P[i], 1.0 / 200);
}

TEST(GridOracle, AgreesWithClosedFormOnRandomInstances) {
  std::mt19937_64 rng(43);
  int checked = 0;
  for (int t = 0; t < 60 && checked < 20; ++t) {
    const auto inst = testing::random_geometric_instance(rng, 2 + t % 2);
    AllocationResult closed;
    try {
      closed = closed_form_allocation(inst);
    } catch (const InteriorViolation&) {
      continue;
    }
    const auto grid = grid_oracle(inst, 400);
    for (std::size_t i = 0; i < inst.n; ++i) EXPECT_NEAR(grid.P_star.P[i], closed.P_star.P[i], 1.0 / 400);
    EXPECT_GE(grid.cost_at_optimum, closed.cost_at_optimum - 1e-6);
    ++checked;
  }
  EXPECT_EQ(checked, 20);
}

TEST(GridOracle, Guards) {
  EXPECT_THROW(grid_oracle(identical(5), 10), InvalidArgument);
  EXPECT_THROW(grid_oracle(identical(2), 0), InvalidArgument);
}

TEST(ProjectToSimplex, Examples) {
  EXPECT_EQ(project_to_simplex(std::vector<double>{0.2, 0.8}), (std::vector<double>{0.2, 0.8}));
  EXPECT_EQ(project_to_simplex(std::vector<double>{2.0, 0.0}), (std::vector<double>{1.0, 0.0}));
  const auto p = project_to_simplex(std::vector<double>{1.0, 1.0, 1.0});
  for (double x : p) EXPECT_NEAR(x, 1.0 / 3.0, 1e-15);
  const auto q = project_to_simplex(std::vector<double>{-5.0, 0.5, 0.7});
  EXPECT_EQ(q[0], 0.0);
  EXPECT_NEAR(q[1], 0.4, 1e-15);
  EXPECT_NEAR(q[2], 0.6, 1e-15);
}

TEST(ProjectToSimplex, IsClosestSimplexPoint) {
  std::mt19937_64 rng(47);
  std::normal_distribution<double> normal;
  std::exponential_distribution<double> expo;
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 1 + t % 6;
    std::vector<double> v(n);
    for (auto& x : v) x = normal(rng);
    const auto p = project_to_simplex(v);
    double sum = 0.0, best = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      ASSERT_GE(p[i], 0.0);
      sum += p[i];
      best += (p[i] - v[i]) * (p[i] - v[i]);
    }
    ASSERT_NEAR(sum, 1.0, 1e-12);
    for (int s = 0; s < 50; ++s) {
      std::vector<double> w(n);
      double total = 0.0;
      for (auto& x : w) total += (x = expo(rng));
      double d = 0.0;
      for (std::size_t i = 0; i < n; ++i) d += (w[i] / total - v[i]) * (w[i] / total - v[i]);
      ASSERT_GE(d, best - 1e-12);
    }
  }
}

TEST(SensitivitySweep, ShareGrowsWithDemandAndPerishing) {
  const auto inst = reference_instance();
  for (std::size_t i = 0; i < 3; ++i) {
    for (auto target : {SweepTarget::Lambda, SweepTarget::Mu}) {
      const double base = target == SweepTarget::Lambda ? inst.lambda[i] : inst.mu[i];
      const auto rows = sensitivity_sweep(inst, target, i, 0.8 * base, 1.2 * base, 50);
      ASSERT_EQ(rows.size(), 50u);
      for (std::size_t k = 0; k < rows.size(); ++k) {
        ASSERT_TRUE(rows[k].result.has_value()) << rows[k].error;
        if (k > 0) {
          EXPECT_GT(rows[k].result->P_star.P[i], rows[k - 1].result->P_star.P[i]);
        }
      }
    }
  }
}

TEST(SensitivitySweep, DegenerateRanges) {
  const auto inst = reference_instance();
  EXPECT_TRUE(sensitivity_sweep(inst, SweepTarget::Lambda, 0, 20.0, 30.0, 0).empty());
  const auto one = sensitivity_sweep(inst, SweepTarget::Lambda, 0, 25.0, 25.0, 10);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].result->P_star.P, closed_form_allocation(inst).P_star.P);
  EXPECT_THROW(sensitivity_sweep(inst, SweepTarget::Mu, 3, 1.0, 2.0, 5), InvalidArgument);
}

TEST(SensitivitySweep, FlagsNonInteriorRows) {
  const auto inst = reference_instance();
  const auto rows = sensitivity_sweep(inst, SweepTarget::Mu, 2, 3.0, 0.001, 5);
  EXPECT_TRUE(rows.front().result.has_value());
  EXPECT_FALSE(rows.back().result.has_value());
  EXPECT_NE(rows.back().error.find("not interior"), std::string::npos);
}

}  // namespace
}  // namespace gchain
