#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ownet/feature_lab.hpp"
#include "ownet/propagation.hpp"

namespace ownet {

inline constexpr std::string_view kToolName = "ownet";
inline constexpr std::string_view kToolVersion = "0.1.0";

/// Stages in execution order. `load` always runs first.
enum class Stage { ingest, stats, aggregation, propagation, features, classify };
std::string_view to_string(Stage stage);
Stage parse_stage(std::string_view text);
std::vector<Stage> all_analysis_stages();

enum class Scope { giant, all };
std::string_view to_string(Scope scope);
Scope parse_scope(std::string_view text);

struct RunConfig {
  std::filesystem::path edges;
  std::optional<std::filesystem::path> labels;
  std::optional<std::filesystem::path> attributes;
  std::optional<std::filesystem::path> schema;
  std::filesystem::path output_dir = "ownet_out";
  std::uint64_t seed = 1;
  std::vector<Stage> stages = all_analysis_stages();

  /// Graph used by degree fits, coefficients, propagation and features.
  Scope scope = Scope::giant;

  // topology
  std::size_t zipf_exclude_top = 2;
  /// "scan" or a fixed integer.
  std::string xmin = "scan";
  std::string estimator = "exact";

  // aggregation
  std::size_t trials = 1000;
  double hist_bin_width = 0.05;

  // propagation
  std::optional<std::uint32_t> m_max;
  std::size_t min_denominator = 100;
  unsigned d_max = 3;
  PatternSemantics semantics = PatternSemantics::exact_distance;

  // features / classifier
  std::vector<FeatureGroup> groups = {FeatureGroup::individual, FeatureGroup::network, FeatureGroup::combined};
  bool export_datasets = false;
  std::size_t folds = 10;
  std::vector<std::string> s_grid = {"0.1%", "0.5%", "1%", "2%", "5%", "10%"};
  double l2 = 0.0;
  double tol = 1e-8;
  unsigned max_iter = 500;

  int threads = 0;

  /// Throws Error when inputs are missing or values are out of range.
  void validate() const;
};

struct RunResult {
  bool ok = true;
  std::optional<Stage> failed_stage;
  bool load_failed = false;
  std::string error;
  std::vector<std::string> outputs;
};

/// Runs the requested stages in dependency order and writes every report
/// plus manifest.json into config.output_dir. Stage failures are reported
/// in the result and the manifest rather than thrown.
RunResult run_pipeline(const RunConfig& config);

}  // namespace ownet
