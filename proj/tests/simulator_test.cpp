#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "gchain/simulator.hpp"
#include "test_support.hpp"

namespace gchain {
namespace {

// Warehouse 1 is the one under test; warehouse 2 is a cheap companion.
SimConfig two_warehouse_config(double lambda, double mu, double gamma, double P,
                               BatchDistribution b = BatchDistribution::geometric(0.3)) {
  SimConfig c;
  c.instance = {2, {lambda, 1.0}, {mu, 2.0}, gamma, std::move(b), 3.0, -0.01};
  c.allocation = Allocation{{P, 1.0 - P}};
  return c;
}

SimConfig reference_config() {
  SimConfig c;
  c.instance = testing::reference_instance();
  c.allocation = Allocation{{0.2711216689, 0.3521172814, 0.3767610497}};
  c.horizon = 1e4;
  c.warmup = 1e3;
  c.replications = 5;
  c.seed = 99;
  return c;
}

TEST(Simulate, MM1Occupancy) {
  auto c = two_warehouse_config(0.5, 1.0, 1.0, 0.0);
  c.horizon = 1e6;
  c.warmup = 1e5;
  c.replications = 4;
  const auto est = simulate(c);
  EXPECT_LT(std::abs(est.q_hat[0].mean - 0.5), 3.0 * est.q_hat[0].se);
  EXPECT_EQ(est.purchase_rate_hat[0].mean, 0.0);
}

TEST(Simulate, ReferenceWarehouseInIsolation) {
  auto c = two_warehouse_config(25.0, 1.0, 300.0, 81.335 / 300.0);
  c.horizon = 1e5;
  c.replications = 10;
  const auto est = simulate(c);
  EXPECT_LT(std::abs(est.q_hat[0].mean - 0.2785), 3.0 * est.q_hat[0].se);
  EXPECT_LT(std::abs(est.purchase_rate_hat[0].mean - 24.7215), 3.0 * est.purchase_rate_hat[0].se);
}

TEST(Simulate, NoArrivalsNoStock) {
  const auto est = simulate(two_warehouse_config(0.0, 1.0, 10.0, 0.5));
  EXPECT_EQ(est.q_hat[0].mean, 0.0);
  EXPECT_EQ(est.sale_hat[0].mean, 0.0);
  ASSERT_EQ(est.marginal_hist[0].size(), 1u);
  EXPECT_EQ(est.marginal_hist[0][0], 1.0);
}

TEST(Simulate, BitIdenticalForEqualConfigs) {
  const auto a = simulate(reference_config());
  const auto b = simulate(reference_config());
  for (std::size_t w = 0; w < 3; ++w) {
    EXPECT_EQ(a.q_hat[w].mean, b.q_hat[w].mean);
    EXPECT_EQ(a.q_hat[w].se, b.q_hat[w].se);
    EXPECT_EQ(a.sale_hat[w].mean, b.sale_hat[w].mean);
    EXPECT_EQ(a.purchase_rate_hat[w].mean, b.purchase_rate_hat[w].mean);
    EXPECT_EQ(a.marginal_hist[w], b.marginal_hist[w]);
  }
  auto other = reference_config();
  other.seed = 100;
  EXPECT_NE(simulate(other).q_hat[0].mean, a.q_hat[0].mean);
}

TEST(Simulate, ObjectsAreConserved) {
  const auto est = simulate(reference_config());
  for (const auto& per_rep : est.counts) {
    ASSERT_EQ(per_rep.size(), 5u);
    for (const auto& c : per_rep) {
      EXPECT_EQ(c.arrived, c.perished + c.sold + c.remaining);
      EXPECT_GT(c.sold, 0u);
    }
  }
}

TEST(Simulate, OrderCountMatchesPoissonRate) {
  const auto c = reference_config();
  const auto est = simulate(c);
  for (std::size_t w = 0; w < 3; ++w) {
    const double mean = c.instance.gamma * c.allocation.P[w] * (c.horizon - c.warmup);
    for (const auto& rc : est.counts[w]) {
      EXPECT_LT(std::abs(static_cast<double>(rc.orders) - mean), 3.0 * std::sqrt(mean));
    }
  }
}

TEST(Simulate, StandardErrorShrinksWithReplications) {
  auto c = two_warehouse_config(5.0, 1.0, 20.0, 0.5);
  c.horizon = 500.0;
  c.warmup = 50.0;
  c.replications = 200;
  const double se1 = simulate(c).q_hat[0].se;
  c.replications = 400;
  const double se2 = simulate(c).q_hat[0].se;
  const double ratio = se1 / se2;
  EXPECT_GT(ratio, 1.2);
  EXPECT_LT(ratio, 1.8);
}

TEST(Simulate, HistogramsAreDistributions) {
  const auto est = simulate(reference_config());
  for (const auto& h : est.marginal_hist) {
    EXPECT_NEAR(std::accumulate(h.begin(), h.end(), 0.0), 1.0, 1e-12);
    for (double x : h) EXPECT_GE(x, 0.0);
  }
  for (const auto& q : est.q_hat) {
    EXPECT_GE(q.mean, 0.0);
    EXPECT_LE(q.mean, 1.0);
  }
}

TEST(Simulate, NonGeometricBatchAgreesWithAnalytic) {
  auto c = reference_config();
  c.instance.batch = BatchDistribution::explicit_pmf({{1, 0.5}, {2, 0.3}, {5, 0.2}});
  c.horizon = 5e4;
  c.warmup = 5e3;
  c.replications = 8;
  const auto rep = compare_to_analytic(simulate(c), c.instance, c.allocation);
  for (const auto& m : rep.checks) EXPECT_TRUE(m.pass) << m.metric << " warehouse " << m.warehouse;
}

TEST(Simulate, InvalidConfig) {
  auto c = reference_config();
  c.warmup = c.horizon;
  EXPECT_THROW(simulate(c), InvalidArgument);
  c = reference_config();
  c.replications = 0;
  EXPECT_THROW(simulate(c), InvalidArgument);
  c = reference_config();
  c.allocation.P = {0.5, 0.5};
  EXPECT_THROW(simulate(c), InvalidArgument);
}

TEST(GeometricTv, ExactHistogramHasZeroDistance) {
  std::vector<double> hist;
  double pk = 1.0 - 0.3;
  for (int k = 0; k < 50; ++k, pk *= 0.3) hist.push_back(pk);
  EXPECT_EQ(geometric_tv_distance(hist, 0.3), 0.0);
  EXPECT_NEAR(geometric_tv_distance({1.0}, 0.5), 0.25, 1e-15);
}

TEST(CompareToAnalytic, WrongPerishingRateFails) {
  const auto c = reference_config();
  const auto est = simulate(c);
  EXPECT_TRUE(compare_to_analytic(est, c.instance, c.allocation).all_pass);
  auto wrong = c.instance;
  for (auto& m : wrong.mu) m *= 2.0;
  const auto rep = compare_to_analytic(est, wrong, c.allocation);
  EXPECT_FALSE(rep.all_pass);
  for (const auto& m : rep.checks) {
    if (m.metric == "q") {
      EXPECT_FALSE(m.pass) << "warehouse " << m.warehouse;
    }
  }
}

TEST(CompareToAnalytic, DimensionMismatch) {
  const auto c = reference_config();
  const auto est = simulate(c);
  std::mt19937_64 rng(1);
  const auto two = testing::random_geometric_instance(rng, 2);
  EXPECT_THROW(compare_to_analytic(est, two, Allocation{{0.5, 0.5}}), InvalidArgument);
}

}  // namespace
}  // namespace gchain
