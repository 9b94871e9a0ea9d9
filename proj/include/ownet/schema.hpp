#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ownet/graph_store.hpp"

namespace ownet {

/// Closed vocabularies for the categorical attributes plus the single numeric
/// attribute. Individual features are laid out as
///   registered_capital, firm_type=..., size_class=..., region=..., industry=...
/// with each block in vocabulary order.
class FeatureSchema {
 public:
  FeatureSchema() = default;
  explicit FeatureSchema(std::array<std::vector<std::string>, kCategoricalAttributeCount> vocabularies);

  /// 158 firm types, 5 size classes, 32 registration authorities, 19
  /// industry sections.
  static FeatureSchema standard();

  /// JSON object with one string array per categorical attribute.
  static FeatureSchema from_json(std::string_view text);
  static FeatureSchema load(const std::filesystem::path& path);
  std::string to_json() const;

  const std::vector<std::string>& vocabulary(std::size_t attribute) const noexcept {
    return vocabularies_[attribute];
  }
  /// Position of a value inside its attribute's block.
  std::optional<std::size_t> index_of(std::size_t attribute, std::string_view value) const;
  /// Column of the first indicator of an attribute's block.
  std::size_t block_offset(std::size_t attribute) const noexcept { return offsets_[attribute]; }

  /// 1 + sum of vocabulary sizes.
  std::size_t individual_dimension() const noexcept { return dimension_; }
  std::vector<std::string> individual_feature_names() const;

 private:
  std::array<std::vector<std::string>, kCategoricalAttributeCount> vocabularies_;
  std::array<std::unordered_map<std::string, std::size_t>, kCategoricalAttributeCount> lookup_;
  std::array<std::size_t, kCategoricalAttributeCount> offsets_{};
  std::size_t dimension_ = 1;
};

inline constexpr std::string_view kCapitalFeature = "registered_capital";

}  // namespace ownet
