#include "ownet/aggregation.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "ownet/rng.hpp"

namespace ownet {

namespace {

/// Reusable scratch for "largest connected cluster among marked nodes".
class ClusterScratch {
 public:
  explicit ClusterScratch(std::size_t n) : mark_(n, 0), seen_(n, 0) {}

  /// Largest cluster among `chosen` in the undirected view.
  std::size_t largest(const FirmGraph& graph, std::span<const NodeId> chosen) {
    if (++tick_ == 0) {
      std::fill(mark_.begin(), mark_.end(), 0);
      std::fill(seen_.begin(), seen_.end(), 0);
      tick_ = 1;
    }
    for (NodeId v : chosen) mark_[v] = tick_;
    std::size_t best = 0;
    for (NodeId start : chosen) {
      if (seen_[start] == tick_) continue;
      seen_[start] = tick_;
      queue_.clear();
      queue_.push_back(start);
      for (std::size_t head = 0; head < queue_.size(); ++head) {
        for (NodeId w : graph.undirected(queue_[head])) {
          if (mark_[w] == tick_ && seen_[w] != tick_) {
            seen_[w] = tick_;
            queue_.push_back(w);
          }
        }
      }
      best = std::max(best, queue_.size());
    }
    return best;
  }

 private:
  std::vector<std::uint32_t> mark_;
  std::vector<std::uint32_t> seen_;
  std::vector<NodeId> queue_;
  std::uint32_t tick_ = 0;
};

std::vector<NodeId> members_of(const ComponentIndex& components, std::uint32_t component_id) {
  if (component_id >= components.count()) throw std::out_of_range("component id out of range");
  std::vector<NodeId> out;
  out.reserve(components.sizes[component_id]);
  for (std::size_t v = 0; v < components.assignment.size(); ++v) {
    if (components.assignment[v] == component_id) out.push_back(static_cast<NodeId>(v));
  }
  return out;
}

NullStats run_null_trials(const FirmGraph& graph, std::uint32_t component_id,
                          std::vector<NodeId>& perm, std::size_t n_disc, std::size_t trials,
                          std::uint64_t seed, ClusterScratch& scratch) {
  const std::size_t s = perm.size();
  if (n_disc > s) throw std::invalid_argument("more discreditable labels than component members");
  if (n_disc == 0) throw std::invalid_argument("null model needs at least one discreditable label");
  if (trials == 0) throw std::invalid_argument("null model needs at least one trial");
  std::vector<std::size_t> swaps(n_disc);
  double sum = 0, sum_sq = 0;
  std::size_t ones = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    SplitMix64 rng(derive_seed(seed, component_id, t));
    for (std::size_t i = 0; i < n_disc; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(s - i));
      swaps[i] = j;
      std::swap(perm[i], perm[j]);
    }
    const std::size_t cluster = scratch.largest(graph, std::span<const NodeId>(perm.data(), n_disc));
    // Undo so each trial depends only on its own stream.
    for (std::size_t i = n_disc; i-- > 0;) std::swap(perm[i], perm[swaps[i]]);
    const double r = static_cast<double>(cluster) / static_cast<double>(n_disc);
    sum += r;
    sum_sq += r * r;
    ones += (cluster == n_disc) ? 1 : 0;
  }
  NullStats stats;
  stats.trials = trials;
  stats.mean = sum / static_cast<double>(trials);
  stats.std = std::sqrt(std::max(0.0, sum_sq / static_cast<double>(trials) - stats.mean * stats.mean));
  stats.frac_one = static_cast<double>(ones) / static_cast<double>(trials);
  return stats;
}

}  // namespace

std::vector<std::uint32_t> eligible_components(const FirmGraph& graph, const ComponentIndex& components) {
  std::vector<std::size_t> bad(components.count(), 0);
  for (std::size_t v = 0; v < graph.node_count(); ++v) bad[components.assignment[v]] += graph.labels()[v];
  std::vector<std::uint32_t> out;
  for (std::size_t c = 0; c < components.count(); ++c) {
    if (bad[c] >= 2 && bad[c] < components.sizes[c]) out.push_back(static_cast<std::uint32_t>(c));
  }
  return out;
}

AggregationRecord aggregation_degree(const FirmGraph& graph, const ComponentIndex& components,
                                     std::uint32_t component_id) {
  const auto members = members_of(components, component_id);
  std::vector<NodeId> bad;
  for (NodeId v : members) {
    if (graph.is_discreditable(v)) bad.push_back(v);
  }
  if (bad.empty()) throw std::invalid_argument("component has no discreditable firms");
  ClusterScratch scratch(graph.node_count());
  AggregationRecord rec;
  rec.component_id = component_id;
  rec.size = members.size();
  rec.n_discreditable = bad.size();
  rec.largest_cluster = scratch.largest(graph, bad);
  rec.r = static_cast<double>(rec.largest_cluster) / static_cast<double>(rec.n_discreditable);
  return rec;
}

NullStats null_model_aggregation(const FirmGraph& graph, const ComponentIndex& components,
                                 std::uint32_t component_id, std::size_t n_discreditable,
                                 std::size_t trials, std::uint64_t seed) {
  auto perm = members_of(components, component_id);
  ClusterScratch scratch(graph.node_count());
  return run_null_trials(graph, component_id, perm, n_discreditable, trials, seed, scratch);
}

NullStats null_model_exact(const FirmGraph& graph, const ComponentIndex& components,
                           std::uint32_t component_id, std::size_t n_discreditable,
                           std::size_t max_placements) {
  const auto members = members_of(components, component_id);
  const std::size_t s = members.size();
  if (n_discreditable == 0 || n_discreditable > s) {
    throw std::invalid_argument("discreditable count must be in [1, component size]");
  }
  // C(s, n) with overflow guard
  double placements = 1;
  for (std::size_t i = 0; i < n_discreditable; ++i) {
    placements = placements * static_cast<double>(s - i) / static_cast<double>(i + 1);
  }
  if (placements > static_cast<double>(max_placements)) {
    throw std::invalid_argument("too many placements for exhaustive enumeration");
  }
  std::vector<std::uint8_t> pick(s, 0);
  std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(n_discreditable), 1);
  ClusterScratch scratch(graph.node_count());
  std::vector<NodeId> chosen;
  long double sum = 0, sum_sq = 0;
  std::size_t count = 0, ones = 0;
  do {
    chosen.clear();
    for (std::size_t i = 0; i < s; ++i) {
      if (pick[i]) chosen.push_back(members[i]);
    }
    const auto cluster = scratch.largest(graph, chosen);
    const long double r = static_cast<long double>(cluster) / static_cast<long double>(n_discreditable);
    sum += r;
    sum_sq += r * r;
    ones += cluster == n_discreditable ? 1 : 0;
    ++count;
  } while (std::prev_permutation(pick.begin(), pick.end()));
  NullStats stats;
  stats.trials = count;
  const long double mean = sum / static_cast<long double>(count);
  stats.mean = static_cast<double>(mean);
  stats.std = static_cast<double>(std::sqrt(std::max(0.0L, sum_sq / static_cast<long double>(count) - mean * mean)));
  stats.frac_one = static_cast<double>(ones) / static_cast<double>(count);
  return stats;
}

AggregationReport aggregation_report(const FirmGraph& graph, const ComponentIndex& components,
                                     std::size_t trials, std::uint64_t seed) {
  const std::size_t n = graph.node_count();
  AggregationReport report;
  const auto eligible = eligible_components(graph, components);
  if (eligible.empty()) return report;

  // Members of each eligible component, grouped contiguously.
  std::vector<std::int64_t> slot(components.count(), -1);
  for (std::size_t i = 0; i < eligible.size(); ++i) slot[eligible[i]] = static_cast<std::int64_t>(i);
  std::vector<std::size_t> offsets(eligible.size() + 1, 0);
  for (std::size_t i = 0; i < eligible.size(); ++i) offsets[i + 1] = offsets[i] + components.sizes[eligible[i]];
  std::vector<NodeId> grouped(offsets.back());
  {
    std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
    for (std::size_t v = 0; v < n; ++v) {
      const auto s = slot[components.assignment[v]];
      if (s >= 0) grouped[cursor[static_cast<std::size_t>(s)]++] = static_cast<NodeId>(v);
    }
  }

  report.records.resize(eligible.size());
  std::vector<std::size_t> by_size(eligible.size());
  for (std::size_t i = 0; i < by_size.size(); ++i) by_size[i] = i;
  // Largest components first so dynamic scheduling balances well.
  std::stable_sort(by_size.begin(), by_size.end(), [&](std::size_t a, std::size_t b) {
    return offsets[a + 1] - offsets[a] > offsets[b + 1] - offsets[b];
  });

#pragma omp parallel
  {
    ClusterScratch scratch(n);
    std::vector<NodeId> bad;
    std::vector<NodeId> perm;
#pragma omp for schedule(dynamic, 1)
    for (std::size_t k = 0; k < by_size.size(); ++k) {
      const std::size_t i = by_size[k];
      const std::uint32_t c = eligible[i];
      perm.assign(grouped.begin() + static_cast<std::ptrdiff_t>(offsets[i]),
                  grouped.begin() + static_cast<std::ptrdiff_t>(offsets[i + 1]));
      bad.clear();
      for (NodeId v : perm) {
        if (graph.is_discreditable(v)) bad.push_back(v);
      }
      AggregationRecord rec;
      rec.component_id = c;
      rec.size = perm.size();
      rec.n_discreditable = bad.size();
      rec.largest_cluster = scratch.largest(graph, bad);
      rec.r = static_cast<double>(rec.largest_cluster) / static_cast<double>(rec.n_discreditable);
      const auto null = run_null_trials(graph, c, perm, rec.n_discreditable, trials, seed, scratch);
      rec.null_mean = null.mean;
      rec.null_std = null.std;
      rec.null_frac_one = null.frac_one;
      rec.trials = null.trials;
      report.records[i] = rec;
    }
  }

  AggregationSummary sum;
  sum.components = report.records.size();
  double var = 0;
  for (const auto& rec : report.records) {
    sum.mean_r += rec.r;
    sum.mean_null_r += rec.null_mean;
    sum.frac_r_equal_1 += rec.largest_cluster == rec.n_discreditable ? 1.0 : 0.0;
    sum.null_frac_r_equal_1 += rec.null_frac_one;
    var += rec.null_std * rec.null_std * (1.0 + 1.0 / static_cast<double>(rec.trials));
  }
  const double k = static_cast<double>(sum.components);
  sum.mean_r /= k;
  sum.mean_null_r /= k;
  sum.frac_r_equal_1 /= k;
  sum.null_frac_r_equal_1 /= k;
  sum.sigma_diff = std::sqrt(var) / k;
  sum.separation_sigmas = sum.sigma_diff > 0 ? (sum.mean_r - sum.mean_null_r) / sum.sigma_diff : 0.0;
  report.summary = sum;
  return report;
}

std::vector<std::size_t> discreditable_subgraph_sizes(const FirmGraph& graph,
                                                      std::span<const std::uint8_t> labels) {
  const std::size_t n = graph.node_count();
  if (labels.size() != n) throw std::invalid_argument("label vector size does not match node count");
  std::vector<std::uint8_t> seen(n, 0);
  std::vector<NodeId> queue;
  std::vector<std::size_t> sizes;
  for (std::size_t start = 0; start < n; ++start) {
    if (!labels[start] || seen[start]) continue;
    seen[start] = 1;
    queue.assign(1, static_cast<NodeId>(start));
    for (std::size_t head = 0; head < queue.size(); ++head) {
      for (NodeId w : graph.undirected(queue[head])) {
        if (labels[w] && !seen[w]) {
          seen[w] = 1;
          queue.push_back(w);
        }
      }
    }
    sizes.push_back(queue.size());
  }
  std::stable_sort(sizes.begin(), sizes.end(), std::greater<>());
  return sizes;
}

std::vector<std::size_t> discreditable_subgraph_sizes(const FirmGraph& graph) {
  return discreditable_subgraph_sizes(graph, graph.labels());
}

std::vector<std::uint8_t> null_relabeling(const FirmGraph& graph, std::uint64_t seed) {
  const std::size_t n = graph.node_count();
  const std::size_t k = graph.discreditable_count();
  std::vector<NodeId> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = static_cast<NodeId>(i);
  SplitMix64 rng(derive_seed(seed, 0x6e756c6cULL));
  std::vector<std::uint8_t> labels(n, 0);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(perm[i], perm[j]);
    labels[perm[i]] = 1;
  }
  return labels;
}

std::vector<AggregationHistogramBin> aggregation_histogram(const AggregationReport& report,
                                                           double bin_width) {
  if (!(bin_width > 0) || bin_width > 1) throw std::invalid_argument("bin width must be in (0, 1]");
  const auto bins = static_cast<std::size_t>(std::ceil(1.0 / bin_width - 1e-9));
  std::vector<AggregationHistogramBin> out(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    out[b].lo = static_cast<double>(b) * bin_width;
    out[b].hi = std::min(1.0, static_cast<double>(b + 1) * bin_width);
  }
  if (report.records.empty()) return out;
  auto bin_of = [&](double r) {
    auto b = static_cast<std::size_t>(r / bin_width + 1e-9);
    return std::min(b, bins - 1);
  };
  const double w = 1.0 / static_cast<double>(report.records.size());
  for (const auto& rec : report.records) {
    out[bin_of(rec.r)].p_real += w;
    out[bin_of(rec.null_mean)].p_null += w;
  }
  return out;
}

}  // namespace ownet
