#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ownet/graph_store.hpp"
#include "ownet/topology.hpp"

namespace ownet {

/// Clustering of discreditable firms inside one weak component.
///
/// r = S/N where N counts the discreditable members and S is the size of the
/// largest connected cluster they form (undirected view). The null fields
/// summarise the same quantity when the N labels are placed uniformly at
/// random inside the component.
struct AggregationRecord {
  std::uint32_t component_id = 0;
  std::size_t size = 0;
  std::size_t n_discreditable = 0;
  std::size_t largest_cluster = 0;
  double r = 0;
  double null_mean = 0;
  double null_std = 0;
  /// Fraction of null trials with r = 1.
  double null_frac_one = 0;
  std::size_t trials = 0;
};

struct NullStats {
  double mean = 0;
  double std = 0;  // population std over trials
  double frac_one = 0;
  std::size_t trials = 0;
};

struct AggregationSummary {
  std::size_t components = 0;
  double mean_r = 0;
  double mean_null_r = 0;
  double frac_r_equal_1 = 0;
  double null_frac_r_equal_1 = 0;
  /// Standard error of mean_r - mean_null_r under the null:
  /// sqrt(sum_c null_std_c^2 (1 + 1/trials)) / components.
  double sigma_diff = 0;
  /// (mean_r - mean_null_r) / sigma_diff; 0 when sigma_diff is 0.
  double separation_sigmas = 0;
};

struct AggregationReport {
  std::vector<AggregationRecord> records;
  std::optional<AggregationSummary> summary;
};

/// Components with >= 2 discreditable and >= 1 clean member.
std::vector<std::uint32_t> eligible_components(const FirmGraph& graph, const ComponentIndex& components);

/// Observed N, S and r of one component. Throws when N = 0.
AggregationRecord aggregation_degree(const FirmGraph& graph, const ComponentIndex& components,
                                     std::uint32_t component_id);

/// Monte Carlo null: each trial draws `n_discreditable` members uniformly
/// without replacement. Trial t uses the stream derive_seed(seed, component, t).
NullStats null_model_aggregation(const FirmGraph& graph, const ComponentIndex& components,
                                 std::uint32_t component_id, std::size_t n_discreditable,
                                 std::size_t trials, std::uint64_t seed);

/// Exhaustive null over all C(size, n) placements; throws above
/// `max_placements`.
NullStats null_model_exact(const FirmGraph& graph, const ComponentIndex& components,
                           std::uint32_t component_id, std::size_t n_discreditable,
                           std::size_t max_placements = 5'000'000);

/// One record per eligible component (ascending id) plus unweighted means.
AggregationReport aggregation_report(const FirmGraph& graph, const ComponentIndex& components,
                                     std::size_t trials, std::uint64_t seed);

/// Component sizes of the subgraph induced by discreditable nodes, descending.
std::vector<std::size_t> discreditable_subgraph_sizes(const FirmGraph& graph);
std::vector<std::size_t> discreditable_subgraph_sizes(const FirmGraph& graph,
                                                      std::span<const std::uint8_t> labels);

/// Same number of discreditable labels redistributed uniformly over all nodes.
std::vector<std::uint8_t> null_relabeling(const FirmGraph& graph, std::uint64_t seed);

struct AggregationHistogramBin {
  double lo = 0;
  double hi = 0;
  double p_real = 0;
  double p_null = 0;
};

/// Normalised histograms of r and of null_mean over the report's records.
std::vector<AggregationHistogramBin> aggregation_histogram(const AggregationReport& report,
                                                           double bin_width = 0.05);

}  // namespace ownet
