#include "ownet/topology.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace ownet {

namespace {

constexpr std::uint32_t kUnassigned = std::numeric_limits<std::uint32_t>::max();

void finish_index(ComponentIndex& index) {
  index.rank_order.resize(index.sizes.size());
  std::iota(index.rank_order.begin(), index.rank_order.end(), 0u);
  std::stable_sort(index.rank_order.begin(), index.rank_order.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return index.sizes[a] > index.sizes[b]; });
}

}  // namespace

std::vector<std::size_t> ComponentIndex::ranked_sizes() const {
  std::vector<std::size_t> out;
  out.reserve(rank_order.size());
  for (auto c : rank_order) out.push_back(sizes[c]);
  return out;
}

std::vector<std::vector<NodeId>> ComponentIndex::members() const {
  std::vector<std::vector<NodeId>> out(sizes.size());
  for (std::size_t c = 0; c < sizes.size(); ++c) out[c].reserve(sizes[c]);
  for (std::size_t v = 0; v < assignment.size(); ++v) out[assignment[v]].push_back(static_cast<NodeId>(v));
  return out;
}

ComponentIndex weak_components(const FirmGraph& graph) {
  const std::size_t n = graph.node_count();
  ComponentIndex index;
  index.assignment.assign(n, kUnassigned);
  std::vector<NodeId> queue;
  queue.reserve(n);
  for (std::size_t start = 0; start < n; ++start) {
    if (index.assignment[start] != kUnassigned) continue;
    const auto id = static_cast<std::uint32_t>(index.sizes.size());
    queue.clear();
    queue.push_back(static_cast<NodeId>(start));
    index.assignment[start] = id;
    for (std::size_t head = 0; head < queue.size(); ++head) {
      for (NodeId w : graph.undirected(queue[head])) {
        if (index.assignment[w] == kUnassigned) {
          index.assignment[w] = id;
          queue.push_back(w);
        }
      }
    }
    index.sizes.push_back(queue.size());
  }
  finish_index(index);
  return index;
}

ComponentIndex strong_components(const FirmGraph& graph) {
  const std::size_t n = graph.node_count();
  std::vector<std::uint32_t> order(n, kUnassigned), low(n, 0), raw(n, kUnassigned);
  std::vector<std::uint8_t> on_stack(n, 0);
  std::vector<NodeId> stack;
  struct Frame {
    NodeId node;
    std::size_t edge;
  };
  std::vector<Frame> call;
  std::uint32_t counter = 0;
  std::uint32_t raw_count = 0;

  for (std::size_t root = 0; root < n; ++root) {
    if (order[root] != kUnassigned) continue;
    call.push_back({static_cast<NodeId>(root), 0});
    order[root] = low[root] = counter++;
    stack.push_back(static_cast<NodeId>(root));
    on_stack[root] = 1;
    while (!call.empty()) {
      auto& frame = call.back();
      const auto succ = graph.out(frame.node);
      if (frame.edge < succ.size()) {
        const NodeId w = succ[frame.edge++];
        if (order[w] == kUnassigned) {
          order[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = 1;
          call.push_back({w, 0});
        } else if (on_stack[w]) {
          low[frame.node] = std::min(low[frame.node], order[w]);
        }
        continue;
      }
      const NodeId v = frame.node;
      call.pop_back();
      if (!call.empty()) low[call.back().node] = std::min(low[call.back().node], low[v]);
      if (low[v] == order[v]) {
        NodeId w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = 0;
          raw[w] = raw_count;
        } while (w != v);
        ++raw_count;
      }
    }
  }

  // Renumber canonically by smallest member.
  ComponentIndex index;
  index.assignment.assign(n, 0);
  std::vector<std::uint32_t> canonical(raw_count, kUnassigned);
  for (std::size_t v = 0; v < n; ++v) {
    auto& c = canonical[raw[v]];
    if (c == kUnassigned) {
      c = static_cast<std::uint32_t>(index.sizes.size());
      index.sizes.push_back(0);
    }
    index.assignment[v] = c;
    ++index.sizes[c];
  }
  finish_index(index);
  return index;
}

std::vector<std::uint8_t> on_directed_cycle(const FirmGraph& graph) {
  const auto scc = strong_components(graph);
  std::vector<std::uint8_t> flag(graph.node_count(), 0);
  for (std::size_t v = 0; v < flag.size(); ++v) flag[v] = scc.sizes[scc.assignment[v]] >= 2 ? 1 : 0;
  return flag;
}

CycleEffect cycle_effect(const FirmGraph& graph) {
  CycleEffect effect;
  const std::size_t n = graph.node_count();
  if (n == 0) return effect;
  effect.p_overall = static_cast<double>(graph.discreditable_count()) / static_cast<double>(n);
  const auto flag = on_directed_cycle(graph);
  std::size_t on = 0, bad = 0;
  for (std::size_t v = 0; v < n; ++v) {
    if (!flag[v]) continue;
    ++on;
    bad += graph.labels()[v];
  }
  effect.nodes_on_cycles = on;
  if (on > 0) {
    effect.p_on_cycle = static_cast<double>(bad) / static_cast<double>(on);
    if (effect.p_overall > 0) {
      effect.increment_rate = (*effect.p_on_cycle - effect.p_overall) / effect.p_overall;
    }
  }
  return effect;
}

GraphStats graph_stats(const FirmGraph& graph) {
  GraphStats stats;
  const std::size_t n = graph.node_count();
  if (n == 0) return stats;
  stats.avg_degree = static_cast<double>(graph.edge_count()) / static_cast<double>(n);

  std::vector<NodeId> mark(n, std::numeric_limits<NodeId>::max());
  double clustering_sum = 0;
  std::size_t degree_sum = 0;
  for (std::size_t u = 0; u < n; ++u) {
    const auto nbrs = graph.undirected(static_cast<NodeId>(u));
    const std::size_t k = nbrs.size();
    degree_sum += k;
    if (k < 2) continue;
    for (NodeId v : nbrs) mark[v] = static_cast<NodeId>(u);
    std::size_t links = 0;
    for (NodeId v : nbrs) {
      for (NodeId w : graph.undirected(v)) links += (mark[w] == u) ? 1 : 0;
    }
    // each neighbor-neighbor link was counted from both ends
    clustering_sum += static_cast<double>(links) / static_cast<double>(k * (k - 1));
  }
  stats.clustering_coefficient = clustering_sum / static_cast<double>(n);
  stats.avg_undirected_degree = static_cast<double>(degree_sum) / static_cast<double>(n);

  // Newman's r over each undirected edge counted once.
  const std::size_t undirected_edges = degree_sum / 2;
  if (undirected_edges >= 2) {
    long double s_prod = 0, s_sum = 0, s_sq = 0;
    for (std::size_t u = 0; u < n; ++u) {
      const auto du = static_cast<long double>(graph.undirected(static_cast<NodeId>(u)).size());
      for (NodeId v : graph.undirected(static_cast<NodeId>(u))) {
        if (v <= u) continue;
        const auto dv = static_cast<long double>(graph.undirected(v).size());
        s_prod += du * dv;
        s_sum += 0.5L * (du + dv);
        s_sq += 0.5L * (du * du + dv * dv);
      }
    }
    const long double m = static_cast<long double>(undirected_edges);
    const long double mean = s_sum / m;
    const long double num = s_prod / m - mean * mean;
    const long double den = s_sq / m - mean * mean;
    if (den > 1e-12L * std::max(1.0L, s_sq / m)) stats.assortativity = static_cast<double>(num / den);
  }
  return stats;
}

std::vector<std::uint64_t> degree_sequence(const FirmGraph& graph, Direction direction) {
  std::vector<std::uint64_t> out(graph.node_count());
  for (std::size_t v = 0; v < out.size(); ++v) {
    out[v] = graph.adjacent(static_cast<NodeId>(v), direction).size();
  }
  return out;
}

std::map<std::size_t, std::size_t> degree_distribution(const FirmGraph& graph, Direction direction) {
  std::map<std::size_t, std::size_t> hist;
  for (std::size_t v = 0; v < graph.node_count(); ++v) {
    ++hist[graph.adjacent(static_cast<NodeId>(v), direction).size()];
  }
  return hist;
}

ZipfFit fit_zipf(std::span<const std::size_t> sizes, std::size_t exclude_top) {
  std::vector<std::size_t> ranked(sizes.begin(), sizes.end());
  std::stable_sort(ranked.begin(), ranked.end(), std::greater<>());
  if (ranked.size() < exclude_top + 3) {
    throw std::invalid_argument("Zipf fit needs at least 3 sizes after exclusion");
  }
  const std::size_t m = ranked.size() - exclude_top;
  double sx = 0, sy = 0;
  std::vector<double> xs(m), ys(m);
  for (std::size_t i = 0; i < m; ++i) {
    const auto size = ranked[exclude_top + i];
    if (size == 0) throw std::invalid_argument("Zipf fit requires positive sizes");
    xs[i] = std::log(static_cast<double>(i + 1));
    ys[i] = std::log(static_cast<double>(size));
    sx += xs[i];
    sy += ys[i];
  }
  const double mx = sx / static_cast<double>(m), my = sy / static_cast<double>(m);
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < m; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  ZipfFit fit;
  fit.excluded_top = exclude_top;
  fit.points = m;
  const double slope = sxy / sxx;
  fit.zipf_exponent = -slope;
  if (fit.zipf_exponent == 0.0) fit.zipf_exponent = 0.0;  // no negative zero
  fit.r_squared = syy > 0 ? (sxy * sxy) / (sxx * syy) : 0.0;
  return fit;
}

double zipf_to_powerlaw_exponent(double zipf_exponent) {
  if (!(zipf_exponent > 0) || !std::isfinite(zipf_exponent)) {
    throw std::invalid_argument("Zipf exponent must be positive");
  }
  return 1.0 + 1.0 / zipf_exponent;
}

double powerlaw_to_zipf_exponent(double powerlaw_exponent) {
  if (!(powerlaw_exponent > 1) || !std::isfinite(powerlaw_exponent)) {
    throw std::invalid_argument("power-law exponent must exceed 1");
  }
  return 1.0 / (powerlaw_exponent - 1.0);
}

}  // namespace ownet
