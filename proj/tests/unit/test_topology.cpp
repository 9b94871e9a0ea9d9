#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "ownet/topology.hpp"

using namespace ownet;

namespace {

/// Members per component, components ordered by smallest member.
std::vector<std::vector<NodeId>> grouped(const ComponentIndex& idx) { return idx.members(); }

FirmGraph reversed(const oracle::RawGraph& raw) {
  auto copy = raw;
  for (auto& e : copy.edges) std::swap(e.source, e.target);
  return oracle::build(copy);
}

}  // namespace

TEST(Components, DisjointChains) {
  auto g = FirmGraph::from_edges(5, {{0, 1}, {1, 2}, {3, 4}});
  auto c = weak_components(g);
  EXPECT_EQ(c.count(), 2u);
  EXPECT_EQ(c.ranked_sizes(), (std::vector<std::size_t>{3, 2}));
  EXPECT_EQ(c.assignment, (std::vector<std::uint32_t>{0, 0, 0, 1, 1}));
}

TEST(Components, TriangleAndChainScc) {
  auto tri = FirmGraph::from_edges(3, {{0, 1}, {1, 2}, {2, 0}});
  EXPECT_EQ(strong_components(tri).count(), 1u);
  auto chain = FirmGraph::from_edges(3, {{0, 1}, {1, 2}});
  EXPECT_EQ(strong_components(chain).count(), 3u);
  EXPECT_EQ(weak_components(chain).count(), 1u);
}

TEST(Components, MatchClosureOracle) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 60; ++trial) {
    const auto raw = oracle::random_graph(rng, 120);
    const auto g = oracle::build(raw);
    EXPECT_EQ(grouped(weak_components(g)), oracle::classes(oracle::closure(raw, true)));
    EXPECT_EQ(grouped(strong_components(g)), oracle::classes(oracle::closure(raw, false)));
  }
}

TEST(Components, InvariantUnderReversalAndSccNesting) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 40; ++trial) {
    const auto raw = oracle::random_graph(rng, 150);
    const auto g = oracle::build(raw);
    const auto weak = weak_components(g);
    EXPECT_EQ(weak.assignment, weak_components(reversed(raw)).assignment);
    const auto strong = strong_components(g);
    for (const auto& scc : strong.members()) {
      for (auto v : scc) EXPECT_EQ(weak.assignment[v], weak.assignment[scc.front()]);
    }
    const auto cyc = on_directed_cycle(g);
    for (NodeId v = 0; v < raw.n; ++v) {
      EXPECT_EQ(cyc[v] != 0, strong.sizes[strong.assignment[v]] >= 2);
    }
  }
}

TEST(Components, RankOrderTiesBySmallestMember) {
  auto g = FirmGraph::from_edges(7, {{5, 6}, {0, 1}, {3, 2}});
  auto c = weak_components(g);
  EXPECT_EQ(c.rank_order, (std::vector<std::uint32_t>{0, 1, 3, 2}));
  EXPECT_EQ(c.largest(), 0u);
}

TEST(CycleEffect, AllOnOneCycleGivesZero) {
  auto g = FirmGraph::from_edges(4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}}, {1, 0, 0, 0});
  auto e = cycle_effect(g);
  ASSERT_TRUE(e.increment_rate);
  EXPECT_DOUBLE_EQ(*e.increment_rate, 0.0);
  auto dag = FirmGraph::from_edges(3, {{0, 1}, {1, 2}}, {1, 0, 0});
  EXPECT_FALSE(cycle_effect(dag).p_on_cycle);
}

TEST(CycleEffect, MatchesReachabilityEnumeration) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    auto raw = oracle::random_graph(rng, 50);
    const auto g = oracle::build(raw);
    const auto reach = oracle::closure(raw, false);
    const auto adj = oracle::adjacency(raw);
    std::size_t on = 0, on_bad = 0, bad = 0;
    for (std::size_t i = 0; i < raw.n; ++i) {
      bad += raw.labels[i];
      bool cyc = false;
      for (std::size_t j = 0; j < raw.n; ++j) cyc |= adj[i][j] && reach[j][i];
      if (cyc) {
        ++on;
        on_bad += raw.labels[i];
      }
    }
    const auto e = cycle_effect(g);
    EXPECT_DOUBLE_EQ(e.p_overall, static_cast<double>(bad) / static_cast<double>(raw.n));
    EXPECT_EQ(e.nodes_on_cycles, on);
    if (on == 0) {
      EXPECT_FALSE(e.p_on_cycle);
    } else {
      ASSERT_TRUE(e.p_on_cycle);
      EXPECT_DOUBLE_EQ(*e.p_on_cycle, static_cast<double>(on_bad) / static_cast<double>(on));
    }
  }
}

TEST(GraphStats, TriangleAndStar) {
  auto tri = graph_stats(FirmGraph::from_edges(3, {{0, 1}, {1, 2}, {2, 0}}));
  EXPECT_DOUBLE_EQ(tri.clustering_coefficient, 1.0);
  EXPECT_FALSE(tri.assortativity);
  auto star = graph_stats(FirmGraph::from_edges(5, {{0, 1}, {0, 2}, {0, 3}, {0, 4}}));
  EXPECT_DOUBLE_EQ(star.clustering_coefficient, 0.0);
  EXPECT_DOUBLE_EQ(star.avg_degree, 0.8);
  EXPECT_FALSE(graph_stats(FirmGraph::from_edges(2, {{0, 1}})).assortativity);
}

TEST(GraphStats, MatchNaiveOracle) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 30; ++trial) {
    auto raw = oracle::random_graph(rng, 100);
    const auto g = oracle::build(raw);
    const auto a = oracle::adjacency(raw);
    const std::size_t n = raw.n;
    std::vector<std::vector<int>> u(n, std::vector<int>(n, 0));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) u[i][j] = a[i][j] || a[j][i];
    std::vector<double> deg(n, 0);
    for (std::size_t i = 0; i < n; ++i) deg[i] = std::accumulate(u[i].begin(), u[i].end(), 0.0);
    double clustering = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (deg[i] < 2) continue;
      double t = 0;
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = j + 1; k < n; ++k) t += u[i][j] && u[i][k] && u[j][k];
      clustering += t / (deg[i] * (deg[i] - 1) / 2);
    }
    clustering /= static_cast<double>(n);
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (u[i][j]) {
          xs.push_back(deg[i]);
          ys.push_back(deg[j]);
        }
    const auto s = graph_stats(g);
    EXPECT_NEAR(s.clustering_coefficient, clustering, 1e-12);
    if (xs.size() >= 4) {
      const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
      double sxy = 0, sxx = 0;
      for (std::size_t k = 0; k < xs.size(); ++k) {
        sxy += (xs[k] - mx) * (ys[k] - mx);
        sxx += (xs[k] - mx) * (xs[k] - mx);
      }
      if (sxx > 1e-9) {
        ASSERT_TRUE(s.assortativity);
        EXPECT_NEAR(*s.assortativity, sxy / sxx, 1e-12);
      }
    }
  }
}

TEST(Degrees, ChainAndStar) {
  auto chain = FirmGraph::from_edges(3, {{0, 1}, {1, 2}});
  EXPECT_EQ(degree_distribution(chain, Direction::in), (std::map<std::size_t, std::size_t>{{0, 1}, {1, 2}}));
  auto star = FirmGraph::from_edges(5, {{0, 1}, {0, 2}, {0, 3}, {0, 4}});
  EXPECT_EQ(degree_distribution(star, Direction::out), (std::map<std::size_t, std::size_t>{{0, 4}, {4, 1}}));
}

TEST(PowerLaw, LikelihoodUsesHurwitzNormalisation) {
  const std::vector<std::uint64_t> tail{2, 3, 2, 7, 19, 2, 4};
  for (double alpha : {1.7, 2.5, 3.2}) {
    long double expect = 0;
    for (auto x : tail) expect -= alpha * std::log(static_cast<long double>(x));
    expect -= tail.size() * std::log(oracle::hurwitz_zeta(alpha, 2));
    EXPECT_NEAR(power_law_log_likelihood(tail, alpha, 2), static_cast<double>(expect), 1e-9);
    EXPECT_NEAR(power_law_survival(alpha, 2, 5),
                static_cast<double>(oracle::hurwitz_zeta(alpha, 5) / oracle::hurwitz_zeta(alpha, 2)), 1e-12);
  }
}

TEST(PowerLaw, DegenerateSamplesAreRejected) {
  std::vector<std::uint64_t> same(100, 3);
  EXPECT_THROW(fit_power_law_mle(same, XminPolicy::fixed(3)), std::invalid_argument);
  std::vector<std::uint64_t> few{1, 2, 3};
  EXPECT_THROW(fit_power_law_mle(few, XminPolicy::fixed(1)), std::invalid_argument);
}

class PowerLawRecovery : public ::testing::TestWithParam<double> {};

TEST_P(PowerLawRecovery, FixedXminOne) {
  const double alpha = GetParam();
  std::mt19937_64 rng(static_cast<std::uint64_t>(alpha * 1000));
  std::vector<std::uint64_t> xs(100'000);
  for (auto& x : xs) x = oracle::zipf_rejection(rng, alpha);
  const auto fit = fit_power_law_mle(xs, XminPolicy::fixed(1));
  EXPECT_NEAR(fit.alpha, alpha, 0.05);
  EXPECT_EQ(fit.n_tail, xs.size());
  std::shuffle(xs.begin(), xs.end(), rng);
  EXPECT_DOUBLE_EQ(fit_power_law_mle(xs, XminPolicy::fixed(1)).alpha, fit.alpha);
  const auto scanned = fit_power_law_mle(xs, XminPolicy::scanning());
  EXPECT_NEAR(scanned.alpha, alpha, 0.15);
}

INSTANTIATE_TEST_SUITE_P(Alphas, PowerLawRecovery, ::testing::Values(2.5, 3.2));

TEST(PowerLaw, ApproximateEstimatorIsBiasedAtXminOne) {
  std::mt19937_64 rng(99);
  std::vector<std::uint64_t> xs(100'000);
  for (auto& x : xs) x = oracle::zipf_rejection(rng, 3.2);
  const auto approx = fit_power_law_mle(xs, XminPolicy::fixed(1), PowerLawEstimator::approximate);
  EXPECT_GT(std::abs(approx.alpha - 3.2), 0.05);
}

TEST(Zipf, Sequences) {
  std::vector<std::size_t> sizes;
  for (int r = 1; r <= 1000; ++r) sizes.push_back(static_cast<std::size_t>(std::llround(1e6 * std::pow(r, -0.51))));
  auto fit = fit_zipf(sizes, 0);
  EXPECT_NEAR(fit.zipf_exponent, 0.51, 0.01);
  EXPECT_GT(fit.r_squared, 0.999);

  std::vector<std::size_t> exact;
  for (int r = 1; r <= 100; ++r) exact.push_back(2520 * 1000 / r);
  EXPECT_NEAR(fit_zipf(exact, 0).zipf_exponent, 1.0, 1e-3);

  std::vector<std::size_t> flat(50, 7);
  fit = fit_zipf(flat, 0);
  EXPECT_NEAR(fit.zipf_exponent, 0.0, 1e-12);
  EXPECT_NEAR(fit.r_squared, 0.0, 1e-12);

  std::vector<std::size_t> two{5, 4, 3, 2};
  EXPECT_THROW(fit_zipf(two, 2), std::invalid_argument);
}

TEST(Zipf, ExponentConversion) {
  EXPECT_NEAR(zipf_to_powerlaw_exponent(0.51), 2.9608, 1e-4);
  EXPECT_DOUBLE_EQ(zipf_to_powerlaw_exponent(1.0), 2.0);
  EXPECT_DOUBLE_EQ(zipf_to_powerlaw_exponent(0.25), 5.0);
  EXPECT_THROW(zipf_to_powerlaw_exponent(0.0), std::invalid_argument);
  EXPECT_THROW(zipf_to_powerlaw_exponent(-1.0), std::invalid_argument);
  for (double z : {0.1, 0.51, 0.9, 2.0, 7.5}) {
    EXPECT_NEAR(powerlaw_to_zipf_exponent(zipf_to_powerlaw_exponent(z)), z, 1e-12);
  }
}
