#include "ownet/graph_store.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <fstream>
#include <numeric>

#include "ownet/csv.hpp"

namespace ownet {

namespace {

void add_warning(LoadReport& report, std::string text) {
  if (report.warnings.size() < LoadReport::kMaxWarnings) report.warnings.push_back(std::move(text));
}

bool is_natural_person(std::string_view kind) {
  kind = trim(kind);
  return kind == "person" || kind == "natural_person" || kind == "natural" || kind == "P";
}

}  // namespace

FirmGraph::FirmGraph() : topo_(std::make_shared<Topology>()) {}

FirmGraph FirmGraph::from_edges(std::size_t node_count, std::vector<Edge> edges,
                                std::vector<std::uint8_t> labels, std::vector<std::string> ids,
                                BuildStats* stats) {
  if (node_count >= std::numeric_limits<NodeId>::max()) {
    throw std::invalid_argument("node count exceeds the 32-bit index space");
  }
  if (!ids.empty() && ids.size() != node_count) {
    throw std::invalid_argument("id table size does not match node count");
  }
  if (!labels.empty() && labels.size() != node_count) {
    throw std::invalid_argument("label vector size does not match node count");
  }
  BuildStats local;
  const auto before = edges.size();
  std::erase_if(edges, [&](const Edge& e) {
    if (e.source >= node_count || e.target >= node_count) {
      throw std::out_of_range("edge endpoint out of range");
    }
    return e.source == e.target;
  });
  local.self_loops = before - edges.size();
  std::sort(edges.begin(), edges.end());
  const auto unique_end = std::unique(edges.begin(), edges.end());
  local.duplicate_edges = static_cast<std::size_t>(edges.end() - unique_end);
  edges.erase(unique_end, edges.end());
  if (stats) *stats = local;

  auto topo = std::make_shared<Topology>();
  topo->node_count = node_count;
  const std::size_t m = edges.size();

  topo->out_offsets.assign(node_count + 1, 0);
  topo->in_offsets.assign(node_count + 1, 0);
  for (const auto& e : edges) {
    ++topo->out_offsets[e.source + 1];
    ++topo->in_offsets[e.target + 1];
  }
  std::partial_sum(topo->out_offsets.begin(), topo->out_offsets.end(), topo->out_offsets.begin());
  std::partial_sum(topo->in_offsets.begin(), topo->in_offsets.end(), topo->in_offsets.begin());

  topo->out_targets.resize(m);
  topo->in_sources.resize(m);
  {
    std::vector<std::uint64_t> in_cursor(topo->in_offsets.begin(), topo->in_offsets.end() - 1);
    // Edges are sorted by (source, target): out lists come out sorted, and
    // filling in lists in source order keeps those sorted too.
    for (std::size_t k = 0; k < m; ++k) {
      topo->out_targets[k] = edges[k].target;
      topo->in_sources[in_cursor[edges[k].target]++] = edges[k].source;
    }
  }
  edges.clear();
  edges.shrink_to_fit();

  topo->und_offsets.assign(node_count + 1, 0);
  topo->und_targets.reserve(2 * m);
  for (std::size_t v = 0; v < node_count; ++v) {
    const auto o = slice(topo->out_offsets, topo->out_targets, static_cast<NodeId>(v));
    const auto i = slice(topo->in_offsets, topo->in_sources, static_cast<NodeId>(v));
    std::set_union(o.begin(), o.end(), i.begin(), i.end(), std::back_inserter(topo->und_targets));
    topo->und_offsets[v + 1] = topo->und_targets.size();
  }
  topo->und_targets.shrink_to_fit();

  if (!ids.empty()) {
    topo->index.reserve(ids.size());
    for (std::size_t v = 0; v < ids.size(); ++v) {
      if (!topo->index.emplace(ids[v], static_cast<NodeId>(v)).second) {
        throw std::invalid_argument("duplicate external id '" + ids[v] + "'");
      }
    }
    topo->ids = std::move(ids);
  }

  FirmGraph g;
  g.topo_ = std::move(topo);
  if (labels.empty()) labels.assign(node_count, 0);
  g.labels_ = std::move(labels);
  for (auto& l : g.labels_) l = l ? 1 : 0;
  g.discreditable_ = static_cast<std::size_t>(std::count(g.labels_.begin(), g.labels_.end(), 1));
  return g;
}

std::span<const NodeId> FirmGraph::neighbors(NodeId node, Direction direction) const {
  if (node >= node_count()) {
    throw std::out_of_range("node index " + std::to_string(node) + " out of range (" +
                            std::to_string(node_count()) + " nodes)");
  }
  return adjacent(node, direction);
}

FirmGraph FirmGraph::with_labels(std::vector<std::uint8_t> labels) const {
  if (labels.size() != node_count()) {
    throw std::invalid_argument("label vector size does not match node count");
  }
  FirmGraph g;
  g.topo_ = topo_;
  g.labels_ = std::move(labels);
  for (auto& l : g.labels_) l = l ? 1 : 0;
  g.discreditable_ = static_cast<std::size_t>(std::count(g.labels_.begin(), g.labels_.end(), 1));
  return g;
}

std::string FirmGraph::external_id(NodeId node) const {
  if (node >= node_count()) throw std::out_of_range("node index out of range");
  return has_ids() ? topo_->ids[node] : std::to_string(node);
}

std::optional<NodeId> FirmGraph::find(std::string_view external_id) const {
  if (has_ids()) {
    auto it = topo_->index.find(std::string(external_id));
    if (it == topo_->index.end()) return std::nullopt;
    return it->second;
  }
  auto v = parse_integer(external_id);
  if (!v || *v < 0 || static_cast<std::size_t>(*v) >= node_count()) return std::nullopt;
  return static_cast<NodeId>(*v);
}

std::vector<NodeId> neighbors(const FirmGraph& graph, NodeId node, Direction direction) {
  auto s = graph.neighbors(node, direction);
  return {s.begin(), s.end()};
}

InducedSubgraph induced_subgraph(const FirmGraph& graph, std::span<const std::uint8_t> keep) {
  const std::size_t n = graph.node_count();
  if (keep.size() != n) throw std::invalid_argument("keep mask size does not match node count");
  constexpr NodeId kDropped = std::numeric_limits<NodeId>::max();
  std::vector<NodeId> remap(n, kDropped);
  InducedSubgraph result;
  for (std::size_t v = 0; v < n; ++v) {
    if (keep[v]) {
      remap[v] = static_cast<NodeId>(result.parent_index.size());
      result.parent_index.push_back(static_cast<NodeId>(v));
    }
  }
  std::vector<Edge> edges;
  std::vector<std::uint8_t> labels;
  std::vector<std::string> ids;
  labels.reserve(result.parent_index.size());
  if (graph.has_ids()) ids.reserve(result.parent_index.size());
  for (NodeId v : result.parent_index) {
    labels.push_back(graph.labels()[v]);
    if (graph.has_ids()) ids.push_back(graph.external_id(v));
    for (NodeId w : graph.out(v)) {
      if (remap[w] != kDropped) edges.push_back({remap[v], remap[w]});
    }
  }
  result.graph = FirmGraph::from_edges(result.parent_index.size(), std::move(edges),
                                       std::move(labels), std::move(ids));
  return result;
}

// ---------------------------------------------------------------------------

AttributeTable::AttributeTable(std::size_t node_count)
    : present_(node_count, 0), capital_(node_count, std::numeric_limits<double>::quiet_NaN()) {
  for (auto& c : codes_) c.assign(node_count, -1);
}

std::int32_t AttributeTable::intern(std::size_t attribute, const std::string& value) {
  auto [it, inserted] = lookup_[attribute].emplace(
      value, static_cast<std::int32_t>(dictionaries_[attribute].size()));
  if (inserted) dictionaries_[attribute].push_back(value);
  return it->second;
}

void AttributeTable::set(NodeId node, const FirmAttributes& attributes) {
  if (node >= node_count()) throw std::out_of_range("attribute row for unknown node");
  if (!present_[node]) ++rows_;
  present_[node] = 1;
  capital_[node] = attributes.registered_capital.value_or(std::numeric_limits<double>::quiet_NaN());
  for (std::size_t a = 0; a < kCategoricalAttributeCount; ++a) {
    const auto& v = attributes.categorical[a];
    codes_[a][node] = v ? intern(a, *v) : -1;
  }
}

std::optional<double> AttributeTable::capital(NodeId node) const {
  const double c = capital_[node];
  if (std::isnan(c)) return std::nullopt;
  return c;
}

FirmAttributes AttributeTable::get(NodeId node) const {
  FirmAttributes out;
  if (node >= node_count() || !present_[node]) return out;
  out.registered_capital = capital(node);
  for (std::size_t a = 0; a < kCategoricalAttributeCount; ++a) {
    const auto c = codes_[a][node];
    if (c >= 0) out.categorical[a] = dictionaries_[a][static_cast<std::size_t>(c)];
  }
  return out;
}

// ---------------------------------------------------------------------------

LoadedNetwork load_graph(std::istream& edges_in, std::istream* labels_in,
                         std::istream* attributes_in) {
  LoadedNetwork result;
  LoadReport& report = result.report;

  std::vector<std::string> ids;
  std::unordered_map<std::string, NodeId> index;
  auto intern = [&](const std::string& id) {
    auto [it, inserted] = index.emplace(id, static_cast<NodeId>(ids.size()));
    if (inserted) ids.push_back(id);
    return it->second;
  };

  std::vector<Edge> edges;
  {
    CsvReader csv(edges_in, "edges");
    const auto c_investor = csv.require_column("investor_id");
    const auto c_investee = csv.require_column("investee_id");
    const auto c_share = csv.column("share");
    const auto c_type = csv.column("investor_type");
    const std::size_t width = csv.header().size();
    std::vector<std::string> f;
    while (csv.next(f)) {
      if (f.size() != width) {
        csv.fail("expected " + std::to_string(width) + " fields, got " + std::to_string(f.size()));
      }
      ++report.edge_rows;
      const std::string investor(trim(f[c_investor]));
      const std::string investee(trim(f[c_investee]));
      if (investor.empty() || investee.empty()) csv.fail("empty firm id");
      if (c_share && !trim(f[*c_share]).empty()) {
        auto share = parse_double(f[*c_share]);
        if (!share || *share < 0) csv.fail("share must be a nonnegative number");
      }
      if (c_type && is_natural_person(f[*c_type])) {
        ++report.natural_person_rows_dropped;
        continue;
      }
      if (investor == investee) {
        ++report.self_loops_dropped;
        add_warning(report, "edges:" + std::to_string(csv.line()) + ": self-loop on '" +
                                investor + "' dropped");
        continue;
      }
      const NodeId s = intern(investor);
      const NodeId t = intern(investee);
      edges.push_back({s, t});
    }
  }

  const std::size_t n = ids.size();
  std::vector<std::uint8_t> labels(n, 0);
  if (labels_in) {
    CsvReader csv(*labels_in, "labels");
    const auto c_id = csv.require_column("firm_id");
    const auto c_flag = csv.column("discreditable");
    std::vector<std::int8_t> seen(n, -1);
    std::vector<std::string> f;
    while (csv.next(f)) {
      if (f.size() != csv.header().size()) csv.fail("field count does not match header");
      ++report.label_rows;
      const std::string id(trim(f[c_id]));
      if (id.empty()) csv.fail("empty firm id");
      std::int8_t flag = 1;
      if (c_flag) {
        const auto t = trim(f[*c_flag]);
        if (t == "1") flag = 1;
        else if (t == "0") flag = 0;
        else csv.fail("discreditable must be 0 or 1");
      }
      auto it = index.find(id);
      if (it == index.end()) {
        ++report.unknown_labels_ignored;
        add_warning(report, "labels:" + std::to_string(csv.line()) + ": firm '" + id +
                                "' has no ownership edge; ignored");
        continue;
      }
      auto& s = seen[it->second];
      if (s >= 0 && s != flag) csv.fail("conflicting labels for firm '" + id + "'");
      s = flag;
      labels[it->second] = static_cast<std::uint8_t>(flag);
    }
  }

  if (attributes_in) {
    AttributeTable table(n);
    CsvReader csv(*attributes_in, "attributes");
    const auto c_id = csv.require_column("firm_id");
    const auto c_cap = csv.require_column("registered_capital");
    std::array<std::size_t, kCategoricalAttributeCount> c_cat{};
    for (std::size_t a = 0; a < kCategoricalAttributeCount; ++a) {
      c_cat[a] = csv.require_column(kCategoricalAttributes[a]);
    }
    std::vector<std::string> f;
    while (csv.next(f)) {
      if (f.size() != csv.header().size()) csv.fail("field count does not match header");
      ++report.attribute_rows;
      const std::string id(trim(f[c_id]));
      if (id.empty()) csv.fail("empty firm id");
      FirmAttributes row;
      if (!trim(f[c_cap]).empty()) {
        auto cap = parse_double(f[c_cap]);
        if (!cap || *cap < 0) csv.fail("registered_capital must be a nonnegative number");
        row.registered_capital = *cap;
      }
      for (std::size_t a = 0; a < kCategoricalAttributeCount; ++a) {
        const auto v = trim(f[c_cat[a]]);
        if (!v.empty()) row.categorical[a] = std::string(v);
      }
      auto it = index.find(id);
      if (it == index.end()) {
        ++report.unknown_attribute_rows_ignored;
        continue;
      }
      if (table.has_row(it->second)) {
        if (!(table.get(it->second) == row)) {
          csv.fail("conflicting attribute rows for firm '" + id + "'");
        }
        continue;
      }
      table.set(it->second, row);
    }
    result.attributes = std::move(table);
  }

  BuildStats stats;
  result.graph = FirmGraph::from_edges(n, std::move(edges), std::move(labels), std::move(ids), &stats);
  report.duplicate_edges_dropped = stats.duplicate_edges;
  if (stats.duplicate_edges > 0) {
    add_warning(report, std::to_string(stats.duplicate_edges) + " duplicate edge(s) collapsed");
  }
  return result;
}

LoadedNetwork load_graph_files(const std::filesystem::path& edges,
                               const std::optional<std::filesystem::path>& labels,
                               const std::optional<std::filesystem::path>& attributes) {
  auto open = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error("cannot open " + p.string());
    return in;
  };
  auto edges_in = open(edges);
  std::optional<std::ifstream> labels_in, attrs_in;
  if (labels) labels_in = open(*labels);
  if (attributes) attrs_in = open(*attributes);
  return load_graph(edges_in, labels_in ? &*labels_in : nullptr, attrs_in ? &*attrs_in : nullptr);
}

}  // namespace ownet
