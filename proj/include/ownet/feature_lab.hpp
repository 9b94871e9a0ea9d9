#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ownet/graph_store.hpp"
#include "ownet/schema.hpp"

namespace ownet {

enum class FeatureGroup { individual, network, combined };

std::string_view to_string(FeatureGroup group);
FeatureGroup parse_feature_group(std::string_view text);

// ---------------------------------------------------------------------------
// Individual features

/// All five attributes present.
bool is_complete(const FirmAttributes& attributes);

/// ln(1 + capital); negative capital is rejected.
double capital_transform(double capital);

/// Dense individual vector: slot 0 is ln(1 + capital) (standardised later,
/// per training fold), then one indicator block per categorical attribute.
/// Throws Error on a missing field or a value outside the vocabulary.
std::vector<double> encode_individual(const FirmAttributes& attributes, const FeatureSchema& schema);

// ---------------------------------------------------------------------------
// Network features

inline constexpr std::size_t kNetworkSetCount = 6;
inline constexpr std::size_t kNetworkFeatureCount = 2 * kNetworkSetCount;

/// investors, investees, neighbors (undirected), investors of neighbors,
/// investees of neighbors, second-order (undirected distance exactly 2).
inline constexpr std::array<std::string_view, kNetworkSetCount> kNetworkSets{
    "investors", "investees", "neighbors", "nbr_investors", "nbr_investees", "second_order"};

/// net_<set>_count, net_<set>_frac, set by set.
std::vector<std::string> network_feature_names();

using NetworkFeatures = std::array<double, kNetworkFeatureCount>;

/// (discreditable count, discreditable fraction) for each set; the target is
/// never a member and an empty set has fraction 0.
NetworkFeatures network_features(const FirmGraph& graph, NodeId node);

/// network_features for every node, parallel over nodes.
std::vector<NetworkFeatures> network_feature_table(const FirmGraph& graph);

// ---------------------------------------------------------------------------
// Datasets

/// Sparse design matrix with labels. Column 0 of an individual or combined
/// dataset is ln(1 + capital) and is stored explicitly in every row so that
/// standardisation can be applied at training time.
class LabeledDataset {
 public:
  struct Entry {
    std::uint32_t column;
    double value;
  };

  LabeledDataset() = default;
  LabeledDataset(FeatureGroup group, std::vector<std::string> feature_names,
                 std::vector<std::uint32_t> standardized_columns);

  FeatureGroup group() const noexcept { return group_; }
  std::size_t rows() const noexcept { return labels_.size(); }
  std::size_t cols() const noexcept { return names_.size(); }
  const std::vector<std::string>& feature_names() const noexcept { return names_; }
  /// Columns to z-score with training statistics.
  std::span<const std::uint32_t> standardized_columns() const noexcept { return standardized_; }

  std::span<const Entry> row(std::size_t r) const noexcept {
    return {entries_.data() + offsets_[r], entries_.data() + offsets_[r + 1]};
  }
  std::uint8_t label(std::size_t r) const noexcept { return labels_[r]; }
  std::span<const std::uint8_t> labels() const noexcept { return labels_; }
  /// Dense firm index of each row, ascending.
  NodeId firm(std::size_t r) const noexcept { return firms_[r]; }
  std::span<const NodeId> firms() const noexcept { return firms_; }

  /// Appends a row; entries must have ascending columns. Zero values are
  /// dropped except for standardised columns.
  void add_row(NodeId firm, std::uint8_t label, std::span<const Entry> entries);
  std::vector<double> dense_row(std::size_t r) const;

  /// Header = feature names + `label`; rows in firm order.
  void write_csv(std::ostream& out) const;

 private:
  FeatureGroup group_ = FeatureGroup::combined;
  std::vector<std::string> names_;
  std::vector<std::uint32_t> standardized_;
  std::vector<std::uint64_t> offsets_{0};
  std::vector<Entry> entries_;
  std::vector<std::uint8_t> labels_;
  std::vector<NodeId> firms_;
};

/// One row per firm, in dense index order. When the group includes the
/// individual block, firms without complete attributes are skipped and an
/// attribute table is required. Labels come from the graph (all of them, so
/// network features are transductive). Throws Error on an empty result or
/// an out-of-vocabulary value.
LabeledDataset assemble_dataset(const FirmGraph& graph, const AttributeTable* attributes,
                                const FeatureSchema& schema, FeatureGroup group);

}  // namespace ownet
