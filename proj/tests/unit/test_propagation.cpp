#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "oracles.hpp"
#include "ownet/propagation.hpp"

using namespace ownet;

namespace {

std::vector<NodeId> row_of(const oracle::BitMatrix& m, std::size_t i, std::size_t n) {
  std::vector<NodeId> out;
  for (std::size_t j = 0; j < n; ++j)
    if (m[i].test(j)) out.push_back(static_cast<NodeId>(j));
  return out;
}

std::vector<NodeId> as_vec(const std::set<NodeId>& s) { return {s.begin(), s.end()}; }

}  // namespace

TEST(LmCurve, PaperBaseRate) {
  const std::size_t n = 2'097'683;
  std::vector<std::uint8_t> labels(n, 0);
  std::fill(labels.begin(), labels.begin() + 208'107, 1);
  const auto g = FirmGraph::from_edges(n, {}, labels);
  const auto curve = lm_curve(g, Direction::undirected);
  ASSERT_EQ(curve.points.size(), 1u);
  EXPECT_NEAR(curve.points[0].L, 0.09921, 1e-5);
  EXPECT_EQ(curve.points[0].denominator, n);
}

TEST(LmCurve, NoDiscreditableEndsAtZero) {
  auto g = FirmGraph::from_edges(4, {{0, 1}, {1, 2}, {2, 3}});
  const auto curve = lm_curve(g, Direction::out, std::nullopt, 1);
  ASSERT_EQ(curve.points.size(), 1u);
  EXPECT_EQ(curve.points[0].L, 0.0);
}

TEST(LmCurve, MatchesNestedLoopCounts) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    auto raw = oracle::random_graph(rng, 500, 0.3);
    const auto g = oracle::build(raw);
    for (auto d : {Direction::out, Direction::in, Direction::undirected}) {
      std::vector<std::size_t> count(raw.n, 0);
      for (NodeId i = 0; i < raw.n; ++i)
        for (auto j : oracle::neighbor_set(raw, i, d)) count[i] += raw.labels[j];
      const auto curve = lm_curve(g, d, 6, 1);
      std::size_t prev = raw.n;
      for (const auto& p : curve.points) {
        std::size_t den = 0, num = 0;
        for (NodeId i = 0; i < raw.n; ++i) {
          if (count[i] >= p.m) {
            ++den;
            num += raw.labels[i];
          }
        }
        EXPECT_EQ(p.denominator, den);
        EXPECT_EQ(p.numerator, num);
        EXPECT_GT(p.denominator, 0u);
        EXPECT_EQ(p.L, static_cast<double>(num) / static_cast<double>(den));
        EXPECT_LE(p.denominator, prev);
        prev = p.denominator;
      }
      EXPECT_EQ(curve.points.front().m, 0u);
      EXPECT_EQ(curve.points.front().denominator, raw.n);
    }
  }
}

TEST(LmCurve, DefaultMaxUsesDenominatorFloor) {
  std::mt19937_64 rng(32);
  auto raw = oracle::random_graph(rng, 500, 0.4);
  raw.n = 500;
  raw.labels.resize(500, 1);
  const auto g = oracle::build(raw);
  const auto full = lm_curve(g, Direction::undirected, 50, 1);
  const auto cut = lm_curve(g, Direction::undirected, std::nullopt, 20);
  ASSERT_FALSE(cut.points.empty());
  EXPECT_GE(cut.points.back().denominator, 20u);
  for (const auto& p : full.points) {
    if (p.m == cut.points.back().m + 1) {
      EXPECT_LT(p.denominator, 20u);
    }
  }
}

TEST(Patterns, NamesAndOrder) {
  const auto ps = directed_patterns(3);
  ASSERT_EQ(ps.size(), 14u);
  std::vector<std::string> names;
  for (const auto& p : ps) names.push_back(p.name());
  EXPECT_EQ(names, oracle::all_step_strings(3));
  EXPECT_EQ(DistancePattern::parse("FFB").reversed().name(), "FBB");
  EXPECT_EQ(DistancePattern::parse("U2").length(), 2u);
  EXPECT_TRUE(DistancePattern::parse("U2").is_undirected());
  EXPECT_EQ(undirected_patterns(3).size(), 3u);
  EXPECT_THROW(DistancePattern::parse("FX"), std::exception);
  EXPECT_THROW(DistancePattern::parse(""), std::exception);
}

TEST(Patterns, ChainAndTriangle) {
  auto chain = FirmGraph::from_edges(3, {{0, 1}, {1, 2}});
  EXPECT_EQ(pattern_neighbors(chain, 0, DistancePattern::parse("FF")), (std::vector<NodeId>{2}));
  auto tri = FirmGraph::from_edges(3, {{0, 1}, {1, 2}, {2, 0}});
  // 2 is also an investor of 0 (pattern B), but FF has no shorter subsequence reaching it
  EXPECT_EQ(pattern_neighbors(tri, 0, DistancePattern::parse("FF")), (std::vector<NodeId>{2}));
  EXPECT_TRUE(pattern_neighbors(tri, 0, DistancePattern::parse("FFF")).empty());
  EXPECT_EQ(pattern_neighbors(tri, 0, DistancePattern::parse("FFF"), PatternSemantics::walk).size(), 0u);
}

TEST(Patterns, ShorterSubsequenceExcluded) {
  // 0 -> 1 -> 2 and 0 -> 2: 2 is a direct investee, so not an FF neighbor
  auto g = FirmGraph::from_edges(3, {{0, 1}, {1, 2}, {0, 2}});
  EXPECT_TRUE(pattern_neighbors(g, 0, DistancePattern::parse("FF")).empty());
  EXPECT_EQ(pattern_neighbors(g, 0, DistancePattern::parse("FF"), PatternSemantics::walk), (std::vector<NodeId>{2}));
}

TEST(Patterns, MatchPathWalkOracleSmall) {
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 15; ++trial) {
    const auto raw = oracle::random_graph(rng, 25);
    const auto g = oracle::build(raw);
    for (const auto& steps : oracle::all_step_strings(3)) {
      const auto p = DistancePattern::parse(steps);
      for (NodeId v = 0; v < raw.n; ++v) {
        ASSERT_EQ(pattern_neighbors(g, v, p), as_vec(oracle::exact_pattern_set(raw, v, steps))) << steps;
        auto walk = oracle::walk_set(raw, v, steps);
        walk.erase(v);
        ASSERT_EQ(pattern_neighbors(g, v, p, PatternSemantics::walk), as_vec(walk)) << steps;
      }
    }
  }
}

TEST(Patterns, MatchMatrixOracle) {
  std::mt19937_64 rng(34);
  for (int trial = 0; trial < 20; ++trial) {
    const auto raw = oracle::random_graph(rng, 200);
    const auto g = oracle::build(raw);
    for (const auto& steps : oracle::all_step_strings(3)) {
      const auto m = oracle::exact_pattern_matrix(raw, steps);
      const auto p = DistancePattern::parse(steps);
      for (NodeId v = 0; v < raw.n; ++v) ASSERT_EQ(pattern_neighbors(g, v, p), row_of(m, v, raw.n)) << steps;
    }
    const auto dist = oracle::distances(raw, true);
    for (int d = 1; d <= 3; ++d) {
      const auto p = DistancePattern::undirected(d);
      for (NodeId v = 0; v < raw.n; ++v) {
        std::vector<NodeId> expect;
        for (NodeId w = 0; w < raw.n; ++w)
          if (dist[v][w] == d) expect.push_back(w);
        ASSERT_EQ(pattern_neighbors(g, v, p), expect);
      }
    }
  }
}

TEST(Patterns, UndirectedOneIsNeighborSet) {
  std::mt19937_64 rng(35);
  const auto raw = oracle::random_graph(rng, 150);
  const auto g = oracle::build(raw);
  for (NodeId v = 0; v < raw.n; ++v) {
    EXPECT_EQ(pattern_neighbors(g, v, DistancePattern::undirected(1)), neighbors(g, v, Direction::undirected));
  }
}

TEST(Patterns, ReversalSymmetry) {
  std::mt19937_64 rng(36);
  for (int trial = 0; trial < 5; ++trial) {
    const auto raw = oracle::random_graph(rng, 200);
    const auto g = oracle::build(raw);
    for (auto sem : {PatternSemantics::exact_distance, PatternSemantics::walk}) {
      for (const auto& p : directed_patterns(3)) {
        std::vector<std::vector<NodeId>> fwd(raw.n), rev(raw.n);
        for (NodeId v = 0; v < raw.n; ++v) {
          fwd[v] = pattern_neighbors(g, v, p, sem);
          rev[v] = pattern_neighbors(g, v, p.reversed(), sem);
        }
        for (NodeId i = 0; i < raw.n; ++i) {
          for (NodeId j : fwd[i]) ASSERT_TRUE(std::binary_search(rev[j].begin(), rev[j].end(), i)) << p.name();
          for (NodeId j : rev[i]) ASSERT_TRUE(std::binary_search(fwd[j].begin(), fwd[j].end(), i)) << p.name();
        }
      }
    }
  }
}

TEST(Influence, MatchesBruteForce) {
  std::mt19937_64 rng(37);
  for (int trial = 0; trial < 10; ++trial) {
    const auto raw = oracle::random_graph(rng, 200, 0.2);
    const auto g = oracle::build(raw);
    auto patterns = directed_patterns(3);
    for (unsigned d = 1; d <= 3; ++d) patterns.push_back(DistancePattern::undirected(d));
    const auto got = influence_by_distance(g, patterns);
    ASSERT_EQ(got.size(), patterns.size());
    std::size_t bad = 0;
    for (auto l : raw.labels) bad += l;
    const double base = static_cast<double>(bad) / static_cast<double>(raw.n);
    const auto dist = oracle::distances(raw, true);
    for (std::size_t k = 0; k < patterns.size(); ++k) {
      std::size_t den = 0, num = 0;
      oracle::BitMatrix m;
      if (!patterns[k].is_undirected()) m = oracle::exact_pattern_matrix(raw, patterns[k].name());
      for (NodeId v = 0; v < raw.n; ++v) {
        std::vector<NodeId> set;
        if (patterns[k].is_undirected()) {
          for (NodeId w = 0; w < raw.n; ++w)
            if (dist[v][w] == static_cast<int>(patterns[k].length())) set.push_back(w);
        } else {
          set = row_of(m, v, raw.n);
        }
        if (std::any_of(set.begin(), set.end(), [&](NodeId w) { return raw.labels[w] != 0; })) {
          ++den;
          num += raw.labels[v];
        }
      }
      EXPECT_EQ(got[k].pattern, patterns[k]);
      EXPECT_EQ(got[k].baseline, base);
      EXPECT_EQ(got[k].denominator, den);
      EXPECT_EQ(got[k].numerator, num);
      if (den > 0) {
        ASSERT_TRUE(got[k].conditional);
        EXPECT_EQ(*got[k].conditional, static_cast<double>(num) / static_cast<double>(den));
        if (base > 0) {
          ASSERT_TRUE(got[k].increment_rate);
          EXPECT_NEAR(*got[k].increment_rate, (*got[k].conditional - base) / base, 1e-15);
          EXPECT_GT(*got[k].increment_rate, -1.0 - 1e-15);
        }
      } else {
        EXPECT_FALSE(got[k].conditional);
      }
    }
  }
}
