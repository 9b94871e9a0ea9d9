#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ownet/feature_lab.hpp"

namespace ownet {

/// 1 / (1 + e^-z) without overflow for any finite z.
double sigmoid(double z) noexcept;
/// ln sigmoid(z), accurate in both tails.
double log_sigmoid(double z) noexcept;

struct TrainHyper {
  double l2 = 0.0;
  /// Convergence: infinity norm of the objective gradient.
  double tol = 1e-8;
  unsigned max_iter = 500;
};

enum class StopReason { converged, iteration_cap, stalled };
std::string_view to_string(StopReason reason);

/// z-scoring for selected columns: x' = (x - mean) / scale.
struct ColumnScaling {
  std::vector<std::uint32_t> columns;
  std::vector<double> mean;
  std::vector<double> scale;
};

/// Statistics over the given rows (all rows when empty); a zero standard
/// deviation gives scale 1.
ColumnScaling fit_scaling(const LabeledDataset& data, std::span<const std::uint32_t> rows = {});

struct TrainedModel {
  std::vector<std::string> feature_names;
  std::vector<double> w;
  double intercept = 0.0;
  TrainHyper hyper;
  ColumnScaling scaling;
  unsigned iterations = 0;
  double gradient_norm = 0.0;
  StopReason stop = StopReason::iteration_cap;
  /// Objective after each accepted step, starting with the initial point.
  std::vector<double> objective_trace;

  bool converged() const noexcept { return stop == StopReason::converged; }
};

/// Objective = mean log-likelihood - (l2 / 2) |w|^2 over the rows (all when
/// empty), evaluated on scaled features. Gradient layout: intercept first,
/// then w.
struct ObjectiveValue {
  double value = 0.0;
  std::vector<double> gradient;
};

ObjectiveValue evaluate_objective(const LabeledDataset& data, std::span<const std::uint32_t> rows,
                                  const ColumnScaling& scaling, std::span<const double> w,
                                  double intercept, double l2);

/// Damped Newton ascent with backtracking; every accepted step increases
/// the objective. Throws Error for an empty or single-class training set.
TrainedModel train(const LabeledDataset& data, const TrainHyper& hyper = {},
                   std::span<const std::uint32_t> rows = {});

/// w.x + intercept for a raw (unscaled) dense feature vector.
double decision_value(const TrainedModel& model, std::span<const double> x);
/// sigmoid(decision_value); throws on a dimension mismatch.
double likelihood(const TrainedModel& model, std::span<const double> x);
double decision_value(const TrainedModel& model, const LabeledDataset& data, std::size_t row);

// ---------------------------------------------------------------------------
// Evaluation

struct PrecisionPoint {
  std::size_t S = 0;
  std::size_t R = 0;
  double P = 0.0;
};

/// Ranks by score descending (ties: ascending firm index) and reports
/// R / S for each grid value. Throws for S = 0 or S > number of items.
std::vector<PrecisionPoint> precision_at(std::span<const double> scores, std::span<const std::uint8_t> labels,
                                         std::span<const NodeId> firms, std::span<const std::size_t> grid);

/// A grid value is either an absolute count or a fraction of the test size
/// ("1%", "0.01"), resolved against the smallest test fold.
struct GridValue {
  bool fraction = false;
  double value = 0;

  static GridValue parse(std::string_view text);
  std::size_t resolve(std::size_t test_size) const;
};

struct FoldResult {
  std::size_t fold = 0;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  bool excluded = false;
  std::optional<TrainedModel> model;
  std::vector<PrecisionPoint> curve;
};

struct AveragedPoint {
  std::size_t S = 0;
  double P_mean = 0.0;
  /// Sample standard deviation over included folds (0 with one fold).
  double P_std = 0.0;
  std::size_t folds = 0;
};

struct EvalReport {
  FeatureGroup group = FeatureGroup::combined;
  std::vector<FoldResult> folds;
  std::vector<AveragedPoint> curve;
  std::vector<std::string> warnings;
};

/// Row -> fold under a seeded permutation; fold sizes floor(n/k) with the
/// remainder spread over the first folds.
std::vector<std::uint32_t> fold_assignment(std::size_t n, std::size_t k, std::uint64_t seed);

/// k-fold cross-validation. Folds whose training part lacks a class are
/// excluded from the average with a warning. Folds train in parallel.
EvalReport cross_validate(const LabeledDataset& data, std::size_t k, std::uint64_t seed,
                          std::span<const GridValue> grid, const TrainHyper& hyper = {},
                          bool keep_models = false);

// ---------------------------------------------------------------------------
// Weights

struct WeightEntry {
  std::string feature;
  double weight = 0.0;
  bool negative = false;
};

struct WeightReport {
  /// Sorted by |weight| descending (ties by feature order), zeros omitted.
  std::vector<WeightEntry> entries;
  /// |top network weight| / |top individual weight| when both exist.
  std::optional<double> network_to_individual_ratio;
};

/// Network features are those named net_*.
bool is_network_feature(std::string_view name);

WeightReport weight_report(const TrainedModel& model);

std::string model_to_json(const TrainedModel& model, FeatureGroup group);

}  // namespace ownet
