#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "ownet/graph_store.hpp"
#include "ownet/topology.hpp"

using namespace ownet;

namespace {

LoadedNetwork load(const std::string& edges, const std::string& labels = "", const std::string& attrs = "") {
  std::istringstream e(edges), l(labels), a(attrs);
  return load_graph(e, labels.empty() ? nullptr : &l, attrs.empty() ? nullptr : &a);
}

std::vector<NodeId> vec(std::span<const NodeId> s) { return {s.begin(), s.end()}; }

}  // namespace

TEST(Load, MinimalChain) {
  auto net = load("investor_id,investee_id\nA,B\nB,C\n", "firm_id\nB\n");
  EXPECT_EQ(net.graph.node_count(), 3u);
  EXPECT_EQ(net.graph.edge_count(), 2u);
  EXPECT_EQ(net.graph.discreditable_count(), 1u);
  EXPECT_TRUE(net.graph.is_discreditable(*net.graph.find("B")));
}

TEST(Load, SelfLoopAndDuplicateAreDroppedWithWarnings) {
  auto net = load("investor_id,investee_id\nA,A\nA,B\nA,B\n");
  EXPECT_EQ(net.graph.node_count(), 2u);
  EXPECT_EQ(net.graph.edge_count(), 1u);
  EXPECT_EQ(net.report.warnings.size(), 2u);
  EXPECT_EQ(net.report.self_loops_dropped, 1u);
  EXPECT_EQ(net.report.duplicate_edges_dropped, 1u);
}

TEST(Load, NaturalPersonInvestorsAreNotNodes) {
  auto net = load("investor_id,investee_id,share,investor_type\nP1,A,0.5,person\nA,B,1,firm\n");
  EXPECT_EQ(net.graph.node_count(), 2u);
  EXPECT_EQ(net.report.natural_person_rows_dropped, 1u);
  EXPECT_FALSE(net.graph.find("P1"));
}

TEST(Load, MalformedRowReportsLine) {
  try {
    load("investor_id,investee_id,share\nA,B,1\nB,C,abc\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_EQ(e.source(), "edges");
  }
}

TEST(Load, MissingColumnIsAnError) {
  EXPECT_THROW(load("investor,investee_id\nA,B\n"), ParseError);
}

TEST(Load, ConflictingLabelsAreAnError) {
  EXPECT_THROW(load("investor_id,investee_id\nA,B\n", "firm_id,discreditable\nA,1\nA,0\n"), ParseError);
}

TEST(Load, ConflictingAttributeRowsAreAnError) {
  const std::string header = "firm_id,registered_capital,firm_type,size_class,region,industry\n";
  EXPECT_NO_THROW(load("investor_id,investee_id\nA,B\n", "",
                       header + "A,10,type_001,small,Beijing,C\nA,10,type_001,small,Beijing,C\n"));
  EXPECT_THROW(load("investor_id,investee_id\nA,B\n", "",
                    header + "A,10,type_001,small,Beijing,C\nA,10,type_001,small,Tianjin,C\n"),
               ParseError);
}

TEST(Load, AttributesWithMissingCells) {
  auto net = load("investor_id,investee_id\nA,B\n", "",
                  "firm_id,registered_capital,firm_type,size_class,region,industry\n"
                  "A,1500.5,type_002,large,Beijing,K\nB,,type_001,,Shanghai,C\nZ,1,type_001,small,Beijing,C\n");
  ASSERT_TRUE(net.attributes);
  const auto a = net.attributes->get(*net.graph.find("A"));
  EXPECT_DOUBLE_EQ(*a.registered_capital, 1500.5);
  EXPECT_EQ(*a.categorical[2], "Beijing");
  const auto b = net.attributes->get(*net.graph.find("B"));
  EXPECT_FALSE(b.registered_capital);
  EXPECT_FALSE(b.categorical[1]);
  EXPECT_EQ(net.report.unknown_attribute_rows_ignored, 1u);
}

TEST(Load, QuotedFieldsAndCrlf) {
  auto net = load("\xEF\xBB\xBFinvestor_id,investee_id\r\n\"A,1\",B\r\n\r\nB,\"C\"\r\n");
  EXPECT_EQ(net.graph.node_count(), 3u);
  EXPECT_TRUE(net.graph.find("A,1"));
}

TEST(Neighbors, Chain) {
  auto g = FirmGraph::from_edges(3, {{0, 1}, {1, 2}});
  EXPECT_EQ(neighbors(g, 1, Direction::out), (std::vector<NodeId>{2}));
  EXPECT_EQ(neighbors(g, 1, Direction::in), (std::vector<NodeId>{0}));
  EXPECT_EQ(neighbors(g, 1, Direction::undirected), (std::vector<NodeId>{0, 2}));
  EXPECT_THROW(neighbors(g, 3, Direction::out), std::out_of_range);
}

TEST(Neighbors, MutualPairIsDeduplicated) {
  auto g = FirmGraph::from_edges(2, {{0, 1}, {1, 0}});
  EXPECT_EQ(neighbors(g, 0, Direction::undirected), (std::vector<NodeId>{1}));
  EXPECT_EQ(g.edge_count(), 2u);
}

TEST(Neighbors, MatchEdgeListOnRandomGraphs) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    const auto raw = oracle::random_graph(rng, 80);
    const auto g = oracle::build(raw);
    for (NodeId v = 0; v < raw.n; ++v) {
      for (auto d : {Direction::out, Direction::in, Direction::undirected}) {
        const auto expect = oracle::neighbor_set(raw, v, d);
        ASSERT_EQ(vec(g.neighbors(v, d)), std::vector<NodeId>(expect.begin(), expect.end()));
      }
      // j in out(i) iff i in in(j)
      for (NodeId w : g.out(v)) {
        const auto in = g.in(w);
        ASSERT_TRUE(std::binary_search(in.begin(), in.end(), v));
      }
    }
  }
}

TEST(Induced, IdentityAndEmpty) {
  auto g = FirmGraph::from_edges(4, {{0, 1}, {1, 2}, {3, 2}}, {1, 0, 1, 0});
  auto all = induced_subgraph_if(g, [](NodeId) { return true; });
  EXPECT_EQ(all.graph.node_count(), 4u);
  EXPECT_EQ(vec(all.graph.out_targets()), vec(g.out_targets()));
  EXPECT_EQ(all.graph.discreditable_count(), 2u);
  auto none = induced_subgraph_if(g, [](NodeId) { return false; });
  EXPECT_EQ(none.graph.node_count(), 0u);
  EXPECT_EQ(none.graph.edge_count(), 0u);
}

TEST(Induced, LabeledNodesMatchEdgeFilter) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    auto raw = oracle::random_graph(rng, 100);
    raw.n = 100;
    raw.labels.resize(100, 0);
    const auto g = oracle::build(raw);
    const auto sub = induced_subgraph_if(g, [&](NodeId v) { return g.is_discreditable(v); });
    std::set<std::pair<NodeId, NodeId>> expect, got;
    for (const auto& e : raw.edges) {
      if (e.source != e.target && raw.labels[e.source] && raw.labels[e.target]) expect.insert({e.source, e.target});
    }
    for (NodeId v = 0; v < sub.graph.node_count(); ++v) {
      for (NodeId w : sub.graph.out(v)) got.insert({sub.parent_index[v], sub.parent_index[w]});
    }
    EXPECT_EQ(got, expect);
    EXPECT_TRUE(std::is_sorted(sub.parent_index.begin(), sub.parent_index.end()));
  }
}

TEST(Labels, WithLabelsSharesTopology) {
  auto g = FirmGraph::from_edges(3, {{0, 1}, {1, 2}}, {0, 0, 0});
  auto h = g.with_labels({1, 1, 0});
  EXPECT_EQ(g.discreditable_count(), 0u);
  EXPECT_EQ(h.discreditable_count(), 2u);
  EXPECT_EQ(h.out_targets().data(), g.out_targets().data());
  EXPECT_THROW(g.with_labels({1}), std::exception);
}

TEST(Cache, RoundTrip) {
  auto net = load("investor_id,investee_id\nA,B\nB,C\nC,A\nD,A\n", "firm_id\nC\nD\n");
  std::stringstream buf;
  save_graph_cache(net.graph, buf);
  const auto back = load_graph_cache(buf);
  EXPECT_EQ(back.node_count(), 4u);
  EXPECT_EQ(vec(back.out_targets()), vec(net.graph.out_targets()));
  EXPECT_EQ(std::vector<std::uint8_t>(back.labels().begin(), back.labels().end()),
            std::vector<std::uint8_t>(net.graph.labels().begin(), net.graph.labels().end()));
  EXPECT_EQ(back.external_id(3), "D");
  EXPECT_EQ(*back.find("C"), 2u);
}

TEST(Cache, CorruptionIsDetected) {
  auto g = FirmGraph::from_edges(3, {{0, 1}, {1, 2}}, {0, 1, 0});
  std::stringstream buf;
  save_graph_cache(g, buf);
  std::string bytes = buf.str();
  bytes[bytes.size() / 2] ^= 0x5a;
  std::stringstream bad(bytes);
  EXPECT_THROW(load_graph_cache(bad), Error);
  std::stringstream truncated(buf.str().substr(0, 20));
  EXPECT_THROW(load_graph_cache(truncated), Error);
  std::stringstream wrong("not a cache at all");
  EXPECT_THROW(load_graph_cache(wrong), Error);
}
