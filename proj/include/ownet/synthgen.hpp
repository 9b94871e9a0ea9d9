#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ownet/graph_store.hpp"
#include "ownet/rng.hpp"
#include "ownet/schema.hpp"

namespace ownet {

struct LabelParams {
  double base_rate = 0.10;  // q0
  double beta = 0.3;        // contagion per discreditable neighbor
  double decay = 0.5;       // beta multiplier per extra sweep
  unsigned sweeps = 1;
  /// Weight of a discreditable investee relative to a discreditable investor.
  double investee_bias = 2.0;
};

struct GenParams {
  std::size_t n_nodes = 1'000'000;
  /// Directed links per node inside the giant component.
  double target_avg_degree = 1.2;
  double in_degree_exponent = 3.2;
  double giant_fraction = 0.35;
  /// Rank-size exponent of the small components.
  double small_zipf_exponent = 0.51;
  std::size_t small_size_cap = 1000;
  /// Pareto exponent of investor activity in the giant component.
  double out_activity_exponent = 2.5;
  LabelParams labels;
  double missing_attr_rate = 0.1171;
  /// 0 draws attributes independently of labels.
  double label_attr_correlation = 0.3;
  std::uint64_t seed = 1;

  /// Throws Error when a field is out of range.
  void validate() const;
};

/// Discrete power law P(k) proportional to k^-alpha on [xmin, cap], sampled by
/// inverting the exact Hurwitz-zeta survival function (tabulated).
class DiscretePowerLaw {
 public:
  DiscretePowerLaw(double alpha, std::uint64_t xmin, std::uint64_t cap);
  std::uint64_t operator()(SplitMix64& rng) const;
  /// Mean of the uncapped distribution (infinite for alpha <= 2).
  static double mean(double alpha, std::uint64_t xmin);

 private:
  double alpha_;
  std::uint64_t xmin_, cap_;
  std::vector<double> survival_;  // P(X >= xmin + i)
};

struct GroundTruth {
  GenParams params;
  std::size_t node_count = 0;
  std::size_t edge_count = 0;
  std::size_t giant_size = 0;
  std::size_t giant_edges = 0;
  std::vector<std::size_t> small_component_sizes;
  /// Probability a giant node's planned in-degree is zeroed.
  double zero_in_degree_probability = 0;
  std::size_t seeded = 0;
  std::size_t induced = 0;
  std::size_t incomplete_attribute_rows = 0;
  /// Node indices of the giant component.
  NodeId giant_first = 0;

  std::string to_json() const;
};

struct Corpus {
  FirmGraph graph;
  AttributeTable attributes;
  /// 1 for seeded labels, 2 for induced, 0 for clean.
  std::vector<std::uint8_t> label_origin;
  GroundTruth truth;
};

/// Topology only: the giant component occupies nodes
/// [giant_first, giant_first + giant_size); small components follow.
/// Throws Error when the degree target cannot be met.
Corpus generate_graph(const GenParams& params);

/// Seeds at rate q0, then `sweeps` synchronous sweeps; a clean node with
/// k_out discreditable investees and k_in discreditable investors flips with
/// probability 1 - (1 - beta_t)^(w_out k_out + w_in k_in), where
/// w_out = 2b/(b+1), w_in = 2/(b+1) for investee bias b.
std::vector<std::uint8_t> plant_labels(const FirmGraph& graph, const LabelParams& params, std::uint64_t seed,
                                       std::vector<std::uint8_t>* origin = nullptr);

AttributeTable generate_attributes(const FirmGraph& graph, const FeatureSchema& schema, double missing_rate,
                                   double label_correlation, std::uint64_t seed,
                                   std::size_t* incomplete_rows = nullptr);

/// Full corpus: topology, labels, attributes.
Corpus generate_corpus(const GenParams& params, const FeatureSchema& schema);

/// edges.csv, labels.csv, attributes.csv, schema.json, ground_truth.json.
void write_corpus(const Corpus& corpus, const FeatureSchema& schema, const std::filesystem::path& dir);

}  // namespace ownet
