#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ownet/graph_store.hpp"

namespace ownet {

// ---------------------------------------------------------------------------
// L(m): P(discreditable | at least m discreditable neighbors)

struct CurvePoint {
  std::uint32_t m = 0;
  std::size_t denominator = 0;
  std::size_t numerator = 0;
  double L = 0;
};

struct NeighborEffectCurve {
  Direction direction = Direction::undirected;
  std::vector<CurvePoint> points;
};

/// Cumulative conditioning on D(i) >= m for m = 0..m_max, where D(i) counts
/// distinct discreditable nodes in neighbors(i, direction). Points with a
/// zero denominator are omitted. Without `m_max`, the curve runs to the
/// largest m whose denominator is still >= `min_denominator` (at least m = 0).
NeighborEffectCurve lm_curve(const FirmGraph& graph, Direction direction,
                             std::optional<std::uint32_t> m_max = std::nullopt,
                             std::size_t min_denominator = 100);

// ---------------------------------------------------------------------------
// d-order neighborhoods

enum class Step : std::uint8_t { forward, backward };

/// A walk shape: a sequence of forward (investor -> investee) and backward
/// steps, or "undirected(d)". Serialised as e.g. "FFB" or "U2".
class DistancePattern {
 public:
  static DistancePattern directed(std::vector<Step> steps);
  static DistancePattern undirected(unsigned length);
  static DistancePattern parse(std::string_view text);

  bool is_undirected() const noexcept { return undirected_; }
  unsigned length() const noexcept { return undirected_ ? length_ : static_cast<unsigned>(steps_.size()); }
  std::span<const Step> steps() const noexcept { return steps_; }
  std::string name() const;

  /// Reversed order with each step flipped; the relation j in N(i, p) iff
  /// i in N(j, p.reversed()) holds under both semantics.
  DistancePattern reversed() const;

  friend bool operator==(const DistancePattern&, const DistancePattern&) = default;

 private:
  DistancePattern() = default;
  bool undirected_ = false;
  unsigned length_ = 0;
  std::vector<Step> steps_;
};

/// All 2 + 4 + ... + 2^d directed patterns up to `max_length`, by length then
/// lexicographically with F before B.
std::vector<DistancePattern> directed_patterns(unsigned max_length);
std::vector<DistancePattern> undirected_patterns(unsigned max_length);

/// exact_distance: a node reached by the walk is dropped when it is the start
/// node or is reachable by any strictly shorter step subsequence of the
/// pattern (for undirected(d): nodes at shortest distance exactly d).
/// walk: every node reachable by a walk of exactly that shape, minus the
/// start node.
enum class PatternSemantics { exact_distance, walk };

std::string_view to_string(PatternSemantics semantics);
PatternSemantics parse_pattern_semantics(std::string_view text);

inline constexpr unsigned kMaxPatternLength = 5;

/// Sorted node set for one start node.
std::vector<NodeId> pattern_neighbors(const FirmGraph& graph, NodeId node, const DistancePattern& pattern,
                                      PatternSemantics semantics = PatternSemantics::exact_distance);

struct InfluenceByDistance {
  DistancePattern pattern = DistancePattern::undirected(1);
  /// L(0) over the whole graph.
  double baseline = 0;
  /// Nodes with >= 1 discreditable pattern-neighbor, and how many of those
  /// are discreditable themselves.
  std::size_t denominator = 0;
  std::size_t numerator = 0;
  std::optional<double> conditional;
  std::optional<double> increment_rate;
};

std::vector<InfluenceByDistance> influence_by_distance(
    const FirmGraph& graph, std::span<const DistancePattern> patterns,
    PatternSemantics semantics = PatternSemantics::exact_distance);

}  // namespace ownet
