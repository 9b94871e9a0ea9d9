#include "ownet/propagation.hpp"

#include <omp.h>

#include <algorithm>
#include <bit>
#include <limits>
#include <map>
#include <set>

namespace ownet {

NeighborEffectCurve lm_curve(const FirmGraph& graph, Direction direction,
                             std::optional<std::uint32_t> m_max, std::size_t min_denominator) {
  const std::size_t n = graph.node_count();
  const auto labels = graph.labels();
  std::vector<std::size_t> all, bad;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t d = 0;
    for (NodeId w : graph.adjacent(static_cast<NodeId>(i), direction)) d += labels[w];
    if (d >= all.size()) {
      all.resize(d + 1, 0);
      bad.resize(d + 1, 0);
    }
    ++all[d];
    bad[d] += labels[i];
  }
  // Suffix sums: counts with D >= m.
  for (std::size_t m = all.size(); m-- > 1;) {
    all[m - 1] += all[m];
    bad[m - 1] += bad[m];
  }

  std::uint32_t last = 0;
  if (m_max) {
    last = *m_max;
  } else {
    for (std::size_t m = 0; m < all.size(); ++m) {
      if (all[m] >= min_denominator) last = static_cast<std::uint32_t>(m);
    }
  }

  NeighborEffectCurve curve;
  curve.direction = direction;
  for (std::size_t m = 0; m <= last && m < all.size(); ++m) {
    if (all[m] == 0) continue;
    curve.points.push_back({static_cast<std::uint32_t>(m), all[m], bad[m],
                            static_cast<double>(bad[m]) / static_cast<double>(all[m])});
  }
  return curve;
}

// ---------------------------------------------------------------------------

DistancePattern DistancePattern::directed(std::vector<Step> steps) {
  if (steps.empty() || steps.size() > kMaxPatternLength) {
    throw std::invalid_argument("directed pattern length must be in [1, " +
                                std::to_string(kMaxPatternLength) + "]");
  }
  DistancePattern p;
  p.steps_ = std::move(steps);
  return p;
}

DistancePattern DistancePattern::undirected(unsigned length) {
  if (length == 0 || length > kMaxPatternLength) {
    throw std::invalid_argument("undirected pattern length must be in [1, " +
                                std::to_string(kMaxPatternLength) + "]");
  }
  DistancePattern p;
  p.undirected_ = true;
  p.length_ = length;
  return p;
}

DistancePattern DistancePattern::parse(std::string_view text) {
  if (text.size() >= 2 && text[0] == 'U') {
    unsigned d = 0;
    for (char c : text.substr(1)) {
      if (c < '0' || c > '9') throw std::invalid_argument("bad pattern '" + std::string(text) + "'");
      d = d * 10 + static_cast<unsigned>(c - '0');
    }
    return undirected(d);
  }
  std::vector<Step> steps;
  for (char c : text) {
    if (c == 'F') steps.push_back(Step::forward);
    else if (c == 'B') steps.push_back(Step::backward);
    else throw std::invalid_argument("bad pattern '" + std::string(text) + "'");
  }
  return directed(std::move(steps));
}

std::string DistancePattern::name() const {
  if (undirected_) return "U" + std::to_string(length_);
  std::string s;
  for (auto st : steps_) s.push_back(st == Step::forward ? 'F' : 'B');
  return s;
}

DistancePattern DistancePattern::reversed() const {
  if (undirected_) return *this;
  std::vector<Step> r(steps_.rbegin(), steps_.rend());
  for (auto& s : r) s = s == Step::forward ? Step::backward : Step::forward;
  return directed(std::move(r));
}

std::vector<DistancePattern> directed_patterns(unsigned max_length) {
  std::vector<DistancePattern> out;
  for (unsigned len = 1; len <= max_length; ++len) {
    for (unsigned bits = 0; bits < (1u << len); ++bits) {
      std::vector<Step> steps(len);
      // Most significant bit is the first step so F-first order is lexicographic.
      for (unsigned k = 0; k < len; ++k) {
        steps[k] = ((bits >> (len - 1 - k)) & 1u) ? Step::backward : Step::forward;
      }
      out.push_back(DistancePattern::directed(std::move(steps)));
    }
  }
  return out;
}

std::vector<DistancePattern> undirected_patterns(unsigned max_length) {
  std::vector<DistancePattern> out;
  for (unsigned d = 1; d <= max_length; ++d) out.push_back(DistancePattern::undirected(d));
  return out;
}

std::string_view to_string(PatternSemantics semantics) {
  return semantics == PatternSemantics::exact_distance ? "exact_distance" : "walk";
}

PatternSemantics parse_pattern_semantics(std::string_view text) {
  if (text == "exact_distance" || text == "exact") return PatternSemantics::exact_distance;
  if (text == "walk") return PatternSemantics::walk;
  throw std::invalid_argument("unknown pattern semantics '" + std::string(text) + "'");
}

namespace {

// Directed patterns are keyed as (1 << len) | bits with bit k = step k
// (1 = backward); key 1 is the empty pattern.
using Key = std::uint32_t;

Key key_of(std::span<const Step> steps) {
  Key bits = 0;
  for (std::size_t k = 0; k < steps.size(); ++k) {
    if (steps[k] == Step::backward) bits |= Key{1} << k;
  }
  return (Key{1} << steps.size()) | bits;
}

unsigned key_length(Key key) { return static_cast<unsigned>(std::bit_width(key) - 1); }
Key key_prefix(Key key) {
  const unsigned len = key_length(key);
  return (Key{1} << (len - 1)) | (key & ((Key{1} << (len - 1)) - 1));
}
Step key_last(Key key) {
  return ((key >> (key_length(key) - 1)) & 1u) ? Step::backward : Step::forward;
}

/// Distinct nonempty proper subsequences of a pattern.
std::vector<Key> proper_subsequences(Key key) {
  const unsigned len = key_length(key);
  std::set<Key> out;
  for (Key mask = 1; mask + 1 < (Key{1} << len); ++mask) {
    Key bits = 0;
    unsigned k = 0;
    for (unsigned pos = 0; pos < len; ++pos) {
      if ((mask >> pos) & 1u) {
        bits |= ((key >> pos) & 1u) << k;
        ++k;
      }
    }
    out.insert((Key{1} << k) | bits);
  }
  return {out.begin(), out.end()};
}

std::span<const NodeId> step_neighbors(const FirmGraph& g, NodeId v, Step s) {
  return s == Step::forward ? g.out(v) : g.in(v);
}

/// Per-thread scratch for d-order sets of one start node at a time.
class PatternEngine {
 public:
  PatternEngine(const FirmGraph& graph, std::span<const DistancePattern> patterns,
                PatternSemantics semantics)
      : graph_(graph), semantics_(semantics) {
    std::set<Key> needed;
    for (const auto& p : patterns) {
      if (p.is_undirected()) {
        max_undirected_ = std::max(max_undirected_, p.length());
        continue;
      }
      const Key k = key_of(p.steps());
      requested_.push_back(k);
      for (Key q : proper_subsequences(k)) needed.insert(q);
    }
    needed_.assign(needed.begin(), needed.end());
    std::stable_sort(needed_.begin(), needed_.end(),
                     [](Key a, Key b) { return key_length(a) < key_length(b); });
    const std::size_t n = graph.node_count();
    for (Key k : needed_) {
      slot_[k] = sets_.size();
      sets_.emplace_back();
      stamps_.emplace_back(n, 0);
    }
    for (Key k : requested_) {
      auto subs = proper_subsequences(k);
      std::vector<std::size_t> slots;
      for (Key q : subs) slots.push_back(slot_.at(q));
      exclusions_[k] = std::move(slots);
    }
    if (max_undirected_ > 0) {
      layer_stamp_.assign(n, 0);
      if (semantics_ == PatternSemantics::walk) walk_stamps_.assign(max_undirected_, std::vector<std::uint32_t>(n, 0));
    }
  }

  /// Recomputes all shorter-pattern sets for a new start node.
  void start(NodeId node) {
    node_ = node;
    if (++tick_ == 0) {
      for (auto& s : stamps_) std::fill(s.begin(), s.end(), 0);
      std::fill(layer_stamp_.begin(), layer_stamp_.end(), 0);
      for (auto& s : walk_stamps_) std::fill(s.begin(), s.end(), 0);
      tick_ = 1;
    }
    for (std::size_t i = 0; i < needed_.size(); ++i) {
      const Key k = needed_[i];
      auto& out = sets_[i];
      auto& stamp = stamps_[i];
      out.clear();
      const Step last = key_last(k);
      auto expand = [&](NodeId v) {
        for (NodeId w : step_neighbors(graph_, v, last)) {
          if (stamp[w] != tick_) {
            stamp[w] = tick_;
            out.push_back(w);
          }
        }
      };
      if (key_length(k) == 1) {
        expand(node);
      } else {
        for (NodeId v : sets_[slot_.at(key_prefix(k))]) expand(v);
      }
    }
  }

  bool valid(Key k, NodeId w) const {
    if (w == node_) return false;
    if (semantics_ == PatternSemantics::walk) return true;
    for (auto s : exclusions_.at(k)) {
      if (stamps_[s][w] == tick_) return false;
    }
    return true;
  }

  /// Visits pattern members (with possible repeats) until `visit` returns true.
  template <class Visit>
  bool scan_directed(Key k, Visit&& visit) const {
    if (auto it = slot_.find(k); it != slot_.end()) {
      for (NodeId w : sets_[it->second]) {
        if (valid(k, w) && visit(w)) return true;
      }
      return false;
    }
    const Step last = key_last(k);
    auto scan_from = [&](NodeId v) {
      for (NodeId w : step_neighbors(graph_, v, last)) {
        if (valid(k, w) && visit(w)) return true;
      }
      return false;
    };
    if (key_length(k) == 1) return scan_from(node_);
    for (NodeId v : sets_[slot_.at(key_prefix(k))]) {
      if (scan_from(v)) return true;
    }
    return false;
  }

  /// Layered undirected expansion up to max_undirected_; `visit(d, w)` is
  /// called for each member of the d-th set. The final layer stops as soon
  /// as `visit` returns true.
  template <class Visit>
  void scan_undirected(Visit&& visit) {
    layers_.assign(1, std::vector<NodeId>{node_});
    if (semantics_ == PatternSemantics::exact_distance) layer_stamp_[node_] = tick_;
    for (unsigned d = 1; d <= max_undirected_; ++d) {
      std::vector<NodeId> next;
      bool stop = false;
      auto& stamp = semantics_ == PatternSemantics::walk ? walk_stamps_[d - 1] : layer_stamp_;
      for (NodeId v : layers_.back()) {
        for (NodeId w : graph_.undirected(v)) {
          if (stamp[w] == tick_) continue;
          stamp[w] = tick_;
          next.push_back(w);
          if (w != node_ && visit(d, w) && d == max_undirected_) {
            stop = true;
            break;
          }
        }
        if (stop) break;
      }
      layers_.push_back(std::move(next));
    }
  }

  std::span<const Key> requested() const { return requested_; }
  unsigned max_undirected() const { return max_undirected_; }

 private:
  const FirmGraph& graph_;
  PatternSemantics semantics_;
  std::vector<Key> requested_;
  std::vector<Key> needed_;
  std::map<Key, std::size_t> slot_;
  std::map<Key, std::vector<std::size_t>> exclusions_;
  std::vector<std::vector<NodeId>> sets_;
  std::vector<std::vector<std::uint32_t>> stamps_;
  unsigned max_undirected_ = 0;
  std::vector<std::uint32_t> layer_stamp_;
  std::vector<std::vector<std::uint32_t>> walk_stamps_;
  std::vector<std::vector<NodeId>> layers_;
  NodeId node_ = 0;
  std::uint32_t tick_ = 0;
};

}  // namespace

std::vector<NodeId> pattern_neighbors(const FirmGraph& graph, NodeId node, const DistancePattern& pattern,
                                      PatternSemantics semantics) {
  if (node >= graph.node_count()) throw std::out_of_range("node index out of range");
  std::vector<DistancePattern> one{pattern};
  PatternEngine engine(graph, one, semantics);
  engine.start(node);
  std::vector<NodeId> out;
  if (pattern.is_undirected()) {
    // Collect every member of the last layer; never stop early.
    engine.scan_undirected([&](unsigned d, NodeId w) {
      if (d == pattern.length()) out.push_back(w);
      return false;
    });
  } else {
    engine.scan_directed(key_of(pattern.steps()), [&](NodeId w) {
      out.push_back(w);
      return false;
    });
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<InfluenceByDistance> influence_by_distance(const FirmGraph& graph,
                                                       std::span<const DistancePattern> patterns,
                                                       PatternSemantics semantics) {
  const std::size_t n = graph.node_count();
  const std::size_t np = patterns.size();
  const auto labels = graph.labels();
  const double baseline = n ? static_cast<double>(graph.discreditable_count()) / static_cast<double>(n) : 0.0;

  std::vector<std::size_t> denominators(np, 0), numerators(np, 0);
  std::vector<Key> keys(np, 0);
  std::vector<std::size_t> undirected_slot(kMaxPatternLength + 1, np);
  for (std::size_t p = 0; p < np; ++p) {
    if (patterns[p].is_undirected()) undirected_slot[patterns[p].length()] = p;
    else keys[p] = key_of(patterns[p].steps());
  }

#pragma omp parallel
  {
    PatternEngine engine(graph, patterns, semantics);
    std::vector<std::size_t> den(np, 0), num(np, 0);
    std::vector<std::uint8_t> hit(kMaxPatternLength + 1, 0);
#pragma omp for schedule(dynamic, 1024)
    for (std::size_t i = 0; i < n; ++i) {
      const auto v = static_cast<NodeId>(i);
      engine.start(v);
      for (std::size_t p = 0; p < np; ++p) {
        if (patterns[p].is_undirected()) continue;
        if (engine.scan_directed(keys[p], [&](NodeId w) { return labels[w] != 0; })) {
          ++den[p];
          num[p] += labels[v];
        }
      }
      if (engine.max_undirected() > 0) {
        std::fill(hit.begin(), hit.end(), 0);
        engine.scan_undirected([&](unsigned d, NodeId w) {
          if (labels[w]) hit[d] = 1;
          return labels[w] != 0;
        });
        for (unsigned d = 1; d <= engine.max_undirected(); ++d) {
          const auto p = undirected_slot[d];
          if (p < np && hit[d]) {
            ++den[p];
            num[p] += labels[v];
          }
        }
      }
    }
#pragma omp critical
    for (std::size_t p = 0; p < np; ++p) {
      denominators[p] += den[p];
      numerators[p] += num[p];
    }
  }

  std::vector<InfluenceByDistance> out;
  out.reserve(np);
  for (std::size_t p = 0; p < np; ++p) {
    InfluenceByDistance e;
    e.pattern = patterns[p];
    e.baseline = baseline;
    e.denominator = denominators[p];
    e.numerator = numerators[p];
    if (e.denominator > 0) {
      e.conditional = static_cast<double>(e.numerator) / static_cast<double>(e.denominator);
      if (baseline > 0) e.increment_rate = (*e.conditional - baseline) / baseline;
    }
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace ownet
