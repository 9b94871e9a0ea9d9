#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "ownet/graph_store.hpp"

namespace ownet {

/// Node -> component assignment. Component ids are canonical: numbered in
/// order of their smallest member index.
struct ComponentIndex {
  std::vector<std::uint32_t> assignment;
  std::vector<std::size_t> sizes;
  /// Component ids by size descending; ties by smallest member (= id order).
  std::vector<std::uint32_t> rank_order;

  std::size_t count() const noexcept { return sizes.size(); }
  std::uint32_t largest() const { return rank_order.at(0); }
  /// Sizes in rank order.
  std::vector<std::size_t> ranked_sizes() const;
  /// Members of every component, each list ascending.
  std::vector<std::vector<NodeId>> members() const;
};

/// Components of the undirected view, O(N + E).
ComponentIndex weak_components(const FirmGraph& graph);

/// Strongly connected components (iterative Tarjan), O(N + E).
ComponentIndex strong_components(const FirmGraph& graph);

/// Per-node flag: node lies on a directed cycle (its SCC has >= 2 nodes).
std::vector<std::uint8_t> on_directed_cycle(const FirmGraph& graph);

struct CycleEffect {
  double p_overall = 0;
  std::optional<double> p_on_cycle;
  std::optional<double> increment_rate;
  std::size_t nodes_on_cycles = 0;
};

/// Discreditable probability overall vs among nodes on directed cycles.
CycleEffect cycle_effect(const FirmGraph& graph);

struct GraphStats {
  /// Directed links per node (E / N); equals the mean in- and out-degree.
  double avg_degree = 0;
  /// Mean degree of the undirected simple view.
  double avg_undirected_degree = 0;
  /// Mean local clustering over all nodes, degree < 2 contributing 0.
  double clustering_coefficient = 0;
  /// Degree Pearson correlation over undirected edge ends; absent when
  /// there are < 2 edges or the degree variance is zero.
  std::optional<double> assortativity;
};

GraphStats graph_stats(const FirmGraph& graph);

/// Degree histogram; counts sum to node_count.
std::map<std::size_t, std::size_t> degree_distribution(const FirmGraph& graph, Direction direction);
std::vector<std::uint64_t> degree_sequence(const FirmGraph& graph, Direction direction);

// ---------------------------------------------------------------------------
// Distribution fitting

struct PowerLawFit {
  double alpha = 0;
  std::uint64_t xmin = 1;
  std::size_t n_tail = 0;
  double ks_distance = 0;
};

struct XminPolicy {
  bool scan = false;
  std::uint64_t xmin = 1;

  static XminPolicy fixed(std::uint64_t x) { return {false, x}; }
  static XminPolicy scanning() { return {true, 1}; }
};

/// `exact` maximises the discrete power-law likelihood normalised by the
/// Hurwitz zeta function; `approximate` is the closed form
/// 1 + n / sum ln(x / (xmin - 1/2)), which is only accurate for xmin >~ 6.
enum class PowerLawEstimator { exact, approximate };

/// Discrete power-law MLE over samples >= xmin. The scan policy tries each
/// distinct value up to the 90th percentile (keeping >= 10 tail samples) and
/// keeps the xmin with the smallest KS distance. Throws std::invalid_argument
/// with fewer than 10 tail samples or a degenerate (all-equal) tail.
PowerLawFit fit_power_law_mle(std::span<const std::uint64_t> samples, XminPolicy policy,
                              PowerLawEstimator estimator = PowerLawEstimator::exact);

/// Log-likelihood of tail samples under the exact discrete model.
double power_law_log_likelihood(std::span<const std::uint64_t> tail, double alpha,
                                std::uint64_t xmin);

/// P(X >= x) of the fitted model (x >= xmin).
double power_law_survival(double alpha, std::uint64_t xmin, std::uint64_t x,
                          PowerLawEstimator estimator = PowerLawEstimator::exact);

struct ZipfFit {
  double zipf_exponent = 0;
  std::size_t excluded_top = 0;
  double r_squared = 0;
  std::size_t points = 0;
};

/// Least squares of ln(size) on ln(rank) after dropping the `exclude_top`
/// largest. Sizes are ranked descending with a stable sort, so equal sizes
/// keep their input order. Throws with fewer than 3 remaining points.
ZipfFit fit_zipf(std::span<const std::size_t> sizes, std::size_t exclude_top);

/// Rank-size slope z -> density exponent 1 + 1/z.
double zipf_to_powerlaw_exponent(double zipf_exponent);
double powerlaw_to_zipf_exponent(double powerlaw_exponent);

}  // namespace ownet
