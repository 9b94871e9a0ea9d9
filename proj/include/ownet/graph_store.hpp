#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ownet/common.hpp"

namespace ownet {

/// Directed edge "source invests in target".
struct Edge {
  NodeId source;
  NodeId target;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Counters for what graph construction dropped.
struct BuildStats {
  std::size_t self_loops = 0;
  std::size_t duplicate_edges = 0;
};

/// Immutable directed ownership graph in CSR form, with reverse and undirected
/// adjacency precomputed. Copies share topology; labels are per copy.
///
/// Adjacency lists are sorted ascending, free of self-loops and duplicates,
/// and mutually consistent: j in out(i) iff i in in(j).
class FirmGraph {
 public:
  FirmGraph();

  /// Builds a graph over nodes 0..node_count-1. Self-loops and duplicate
  /// edges are dropped (and counted in `stats` when given). `labels` may be
  /// empty (all clean); `ids` may be empty for anonymous graphs.
  static FirmGraph from_edges(std::size_t node_count, std::vector<Edge> edges,
                              std::vector<std::uint8_t> labels = {},
                              std::vector<std::string> ids = {},
                              BuildStats* stats = nullptr);

  std::size_t node_count() const noexcept { return topo_->node_count; }
  std::size_t edge_count() const noexcept { return topo_->out_targets.size(); }

  /// Investees, investors, or the deduplicated union of both. Throws
  /// std::out_of_range for a bad index.
  std::span<const NodeId> neighbors(NodeId node, Direction direction) const;

  // Unchecked accessors for hot loops.
  std::span<const NodeId> out(NodeId node) const noexcept {
    return slice(topo_->out_offsets, topo_->out_targets, node);
  }
  std::span<const NodeId> in(NodeId node) const noexcept {
    return slice(topo_->in_offsets, topo_->in_sources, node);
  }
  std::span<const NodeId> undirected(NodeId node) const noexcept {
    return slice(topo_->und_offsets, topo_->und_targets, node);
  }
  std::span<const NodeId> adjacent(NodeId node, Direction direction) const noexcept {
    switch (direction) {
      case Direction::out: return out(node);
      case Direction::in: return in(node);
      default: return undirected(node);
    }
  }

  std::span<const std::uint8_t> labels() const noexcept { return labels_; }
  bool is_discreditable(NodeId node) const noexcept { return labels_[node] != 0; }
  std::size_t discreditable_count() const noexcept { return discreditable_; }

  /// Same topology, different labels (size must equal node_count).
  FirmGraph with_labels(std::vector<std::uint8_t> labels) const;

  bool has_ids() const noexcept { return !topo_->ids.empty(); }
  /// External firm ID; anonymous graphs report the decimal index.
  std::string external_id(NodeId node) const;
  std::optional<NodeId> find(std::string_view external_id) const;

  std::span<const std::uint64_t> out_offsets() const noexcept { return topo_->out_offsets; }
  std::span<const NodeId> out_targets() const noexcept { return topo_->out_targets; }

 private:
  struct Topology {
    std::size_t node_count = 0;
    std::vector<std::uint64_t> out_offsets{0};
    std::vector<NodeId> out_targets;
    std::vector<std::uint64_t> in_offsets{0};
    std::vector<NodeId> in_sources;
    std::vector<std::uint64_t> und_offsets{0};
    std::vector<NodeId> und_targets;
    std::vector<std::string> ids;
    std::unordered_map<std::string, NodeId> index;
  };

  static std::span<const NodeId> slice(const std::vector<std::uint64_t>& offsets,
                                       const std::vector<NodeId>& values, NodeId node) noexcept {
    return {values.data() + offsets[node], values.data() + offsets[node + 1]};
  }

  std::shared_ptr<const Topology> topo_;
  std::vector<std::uint8_t> labels_;
  std::size_t discreditable_ = 0;
};

/// Sorted copy of a node's neighbor set (checked).
std::vector<NodeId> neighbors(const FirmGraph& graph, NodeId node, Direction direction);

struct InducedSubgraph {
  FirmGraph graph;
  /// New dense index -> index in the parent graph.
  std::vector<NodeId> parent_index;
};

/// Subgraph on nodes with keep[i] != 0, keeping every edge whose endpoints
/// both survive. Relative node order and labels are preserved.
InducedSubgraph induced_subgraph(const FirmGraph& graph, std::span<const std::uint8_t> keep);

template <class Predicate>
InducedSubgraph induced_subgraph_if(const FirmGraph& graph, Predicate&& keep) {
  std::vector<std::uint8_t> mask(graph.node_count());
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = keep(static_cast<NodeId>(i)) ? 1 : 0;
  return induced_subgraph(graph, mask);
}

// ---------------------------------------------------------------------------
// Firm attributes

inline constexpr std::size_t kCategoricalAttributeCount = 4;
inline constexpr std::array<std::string_view, kCategoricalAttributeCount> kCategoricalAttributes{
    "firm_type", "size_class", "region", "industry"};

/// One firm's attribute record; unset optionals are missing cells.
struct FirmAttributes {
  std::optional<double> registered_capital;
  std::array<std::optional<std::string>, kCategoricalAttributeCount> categorical;

  friend bool operator==(const FirmAttributes&, const FirmAttributes&) = default;
};

/// Column store of attributes keyed by dense node index. Categorical values
/// are interned per attribute; code -1 marks a missing cell.
class AttributeTable {
 public:
  AttributeTable() = default;
  explicit AttributeTable(std::size_t node_count);

  std::size_t node_count() const noexcept { return present_.size(); }
  std::size_t row_count() const noexcept { return rows_; }
  bool has_row(NodeId node) const noexcept { return present_[node] != 0; }

  void set(NodeId node, const FirmAttributes& attributes);
  FirmAttributes get(NodeId node) const;

  std::optional<double> capital(NodeId node) const;
  std::int32_t code(NodeId node, std::size_t attribute) const noexcept {
    return codes_[attribute][node];
  }
  const std::vector<std::string>& dictionary(std::size_t attribute) const noexcept {
    return dictionaries_[attribute];
  }

 private:
  std::int32_t intern(std::size_t attribute, const std::string& value);

  std::size_t rows_ = 0;
  std::vector<std::uint8_t> present_;
  std::vector<double> capital_;
  std::array<std::vector<std::int32_t>, kCategoricalAttributeCount> codes_;
  std::array<std::vector<std::string>, kCategoricalAttributeCount> dictionaries_;
  std::array<std::unordered_map<std::string, std::int32_t>, kCategoricalAttributeCount> lookup_;
};

// ---------------------------------------------------------------------------
// Loading

struct LoadReport {
  std::size_t edge_rows = 0;
  std::size_t self_loops_dropped = 0;
  std::size_t duplicate_edges_dropped = 0;
  std::size_t natural_person_rows_dropped = 0;
  std::size_t label_rows = 0;
  std::size_t unknown_labels_ignored = 0;
  std::size_t attribute_rows = 0;
  std::size_t unknown_attribute_rows_ignored = 0;
  /// Human-readable warnings, capped at kMaxWarnings entries.
  std::vector<std::string> warnings;
  static constexpr std::size_t kMaxWarnings = 50;
};

struct LoadedNetwork {
  FirmGraph graph;
  std::optional<AttributeTable> attributes;
  LoadReport report;
};

/// Reads the edges CSV (`investor_id,investee_id[,share][,investor_type]`),
/// labels CSV (`firm_id` or `firm_id,discreditable`), and optional
/// attributes CSV. Nodes are interned in first-appearance order over the
/// edge file. Throws ParseError on malformed rows and on duplicate firm rows
/// that disagree.
LoadedNetwork load_graph(std::istream& edges, std::istream* labels, std::istream* attributes);

LoadedNetwork load_graph_files(const std::filesystem::path& edges,
                               const std::optional<std::filesystem::path>& labels,
                               const std::optional<std::filesystem::path>& attributes);

// ---------------------------------------------------------------------------
// Binary cache: "OWNETGR\0", u32 version, payload, SHA-256 of payload.

inline constexpr std::uint32_t kGraphCacheVersion = 1;

void save_graph_cache(const FirmGraph& graph, std::ostream& out);
FirmGraph load_graph_cache(std::istream& in);
void save_graph_cache(const FirmGraph& graph, const std::filesystem::path& path);
FirmGraph load_graph_cache(const std::filesystem::path& path);

}  // namespace ownet
