#include "ownet/classifier.hpp"

#include <fmt/format.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <numeric>

#include "ownet/csv.hpp"
#include "ownet/rng.hpp"

namespace ownet {

double sigmoid(double z) noexcept {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double log_sigmoid(double z) noexcept {
  if (z >= 0) return -std::log1p(std::exp(-z));
  return z - std::log1p(std::exp(z));
}

std::string_view to_string(StopReason reason) {
  switch (reason) {
    case StopReason::converged: return "converged";
    case StopReason::stalled: return "stalled";
    default: return "iteration_cap";
  }
}

namespace {

std::vector<std::uint32_t> all_rows(const LabeledDataset& data, std::span<const std::uint32_t> rows) {
  if (!rows.empty()) return {rows.begin(), rows.end()};
  std::vector<std::uint32_t> out(data.rows());
  std::iota(out.begin(), out.end(), 0u);
  return out;
}

/// Column -> slot in ColumnScaling, or -1.
std::vector<int> scaling_slots(const ColumnScaling& s, std::size_t cols) {
  std::vector<int> slot(cols, -1);
  for (std::size_t k = 0; k < s.columns.size(); ++k) {
    if (s.columns[k] >= cols) throw Error("scaling column out of range");
    slot[s.columns[k]] = static_cast<int>(k);
  }
  return slot;
}

/// Scaled feature value of one stored entry.
inline double scaled(const ColumnScaling& s, const std::vector<int>& slot, const LabeledDataset::Entry& e) {
  const int k = slot[e.column];
  return k < 0 ? e.value : (e.value - s.mean[static_cast<std::size_t>(k)]) / s.scale[static_cast<std::size_t>(k)];
}

struct Problem {
  const LabeledDataset& data;
  std::vector<std::uint32_t> rows;
  ColumnScaling scaling;
  std::vector<int> slot;
  double l2;

  double margin(std::uint32_t r, std::span<const double> beta) const {
    double z = beta[0];
    for (const auto& e : data.row(r)) z += beta[e.column + 1] * scaled(scaling, slot, e);
    return z;
  }

  double objective(std::span<const double> beta) const {
    double ll = 0;
    for (auto r : rows) {
      const double z = margin(r, beta);
      ll += data.label(r) ? log_sigmoid(z) : log_sigmoid(-z);
    }
    double penalty = 0;
    for (std::size_t c = 1; c < beta.size(); ++c) penalty += beta[c] * beta[c];
    return ll / static_cast<double>(rows.size()) - 0.5 * l2 * penalty;
  }

  /// Objective, gradient and (optionally) the negated Hessian at beta.
  double derivatives(std::span<const double> beta, Eigen::VectorXd& grad, Eigen::MatrixXd* neg_hessian) const {
    const std::size_t d = beta.size();
    grad.setZero(static_cast<Eigen::Index>(d));
    if (neg_hessian) neg_hessian->setZero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    std::vector<std::pair<std::uint32_t, double>> x;
    double ll = 0;
    for (auto r : rows) {
      x.clear();
      x.emplace_back(0, 1.0);
      for (const auto& e : data.row(r)) x.emplace_back(e.column + 1, scaled(scaling, slot, e));
      double z = 0;
      for (auto [c, v] : x) z += beta[c] * v;
      const double y = data.label(r);
      ll += y ? log_sigmoid(z) : log_sigmoid(-z);
      const double p = sigmoid(z);
      const double resid = y - p;
      for (auto [c, v] : x) grad[c] += resid * v;
      if (neg_hessian) {
        const double weight = p * (1.0 - p);
        auto& h = *neg_hessian;
        for (std::size_t a = 0; a < x.size(); ++a) {
          const double wa = weight * x[a].second;
          for (std::size_t b = a; b < x.size(); ++b) h(x[a].first, x[b].first) += wa * x[b].second;
        }
      }
    }
    const double inv_n = 1.0 / static_cast<double>(rows.size());
    grad *= inv_n;
    double penalty = 0;
    for (std::size_t c = 1; c < d; ++c) {
      grad[static_cast<Eigen::Index>(c)] -= l2 * beta[c];
      penalty += beta[c] * beta[c];
    }
    if (neg_hessian) {
      auto& h = *neg_hessian;
      // Only the upper triangle was accumulated.
      Eigen::MatrixXd sym = (h + h.transpose()) * inv_n;
      sym.diagonal() = h.diagonal() * inv_n;
      for (std::size_t c = 1; c < d; ++c) sym(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(c)) += l2;
      h = std::move(sym);
    }
    return ll * inv_n - 0.5 * l2 * penalty;
  }
};

void check_finite(const LabeledDataset& data, std::span<const std::uint32_t> rows) {
  for (auto r : rows) {
    for (const auto& e : data.row(r)) {
      if (!std::isfinite(e.value)) {
        throw Error(fmt::format("non-finite value in feature '{}'", data.feature_names()[e.column]));
      }
    }
  }
}

}  // namespace

ColumnScaling fit_scaling(const LabeledDataset& data, std::span<const std::uint32_t> rows) {
  const auto use = all_rows(data, rows);
  ColumnScaling s;
  const auto cols = data.standardized_columns();
  s.columns.assign(cols.begin(), cols.end());
  s.mean.assign(cols.size(), 0.0);
  s.scale.assign(cols.size(), 1.0);
  if (use.empty()) return s;
  std::vector<double> sum(cols.size(), 0.0), sumsq(cols.size(), 0.0);
  const auto slot = scaling_slots(s, data.cols());
  for (auto r : use) {
    for (const auto& e : data.row(r)) {
      const int k = slot[e.column];
      if (k >= 0) sum[static_cast<std::size_t>(k)] += e.value;
    }
  }
  const double n = static_cast<double>(use.size());
  for (std::size_t k = 0; k < cols.size(); ++k) s.mean[k] = sum[k] / n;
  // Second pass on centred values for a stable variance.
  for (auto r : use) {
    for (const auto& e : data.row(r)) {
      const int k = slot[e.column];
      if (k >= 0) {
        const double dev = e.value - s.mean[static_cast<std::size_t>(k)];
        sumsq[static_cast<std::size_t>(k)] += dev * dev;
      }
    }
  }
  for (std::size_t k = 0; k < cols.size(); ++k) {
    const double sd = std::sqrt(sumsq[k] / n);
    s.scale[k] = sd > 0 ? sd : 1.0;
  }
  return s;
}

ObjectiveValue evaluate_objective(const LabeledDataset& data, std::span<const std::uint32_t> rows,
                                  const ColumnScaling& scaling, std::span<const double> w, double intercept,
                                  double l2) {
  if (w.size() != data.cols()) throw Error("weight vector does not match the dataset dimension");
  Problem problem{data, all_rows(data, rows), scaling, scaling_slots(scaling, data.cols()), l2};
  if (problem.rows.empty()) throw Error("objective over an empty row set");
  std::vector<double> beta{intercept};
  beta.insert(beta.end(), w.begin(), w.end());
  Eigen::VectorXd grad;
  ObjectiveValue out;
  out.value = problem.derivatives(beta, grad, nullptr);
  out.gradient.assign(grad.data(), grad.data() + grad.size());
  return out;
}

TrainedModel train(const LabeledDataset& data, const TrainHyper& hyper, std::span<const std::uint32_t> rows) {
  if (hyper.l2 < 0 || !(hyper.tol > 0)) throw Error("invalid training hyperparameters");
  auto use = all_rows(data, rows);
  if (use.empty()) throw Error("cannot train on an empty dataset");
  std::size_t positives = 0;
  for (auto r : use) positives += data.label(r);
  if (positives == 0 || positives == use.size()) throw Error("training data has a single class");
  check_finite(data, use);

  auto scaling = fit_scaling(data, use);
  auto slot = scaling_slots(scaling, data.cols());
  Problem problem{data, std::move(use), std::move(scaling), std::move(slot), hyper.l2};

  const std::size_t d = data.cols() + 1;
  std::vector<double> beta(d, 0.0);
  // Start the intercept at the training log-odds.
  const double rate = static_cast<double>(positives) / static_cast<double>(problem.rows.size());
  beta[0] = std::log(rate / (1.0 - rate));

  TrainedModel model;
  model.feature_names = data.feature_names();
  model.hyper = hyper;

  Eigen::VectorXd grad;
  Eigen::MatrixXd neg_h;
  double f = problem.derivatives(beta, grad, &neg_h);
  model.objective_trace.push_back(f);
  model.stop = StopReason::iteration_cap;
  unsigned iter = 0;
  unsigned flat = 0;  // consecutive steps with negligible gain
  for (; iter < hyper.max_iter; ++iter) {
    if (grad.lpNorm<Eigen::Infinity>() <= hyper.tol) {
      model.stop = StopReason::converged;
      break;
    }
    // Newton direction on the Jacobi-scaled system, inverted on its range
    // only: one-hot blocks plus the intercept make the unpenalised Hessian
    // singular.
    Eigen::VectorXd diag = neg_h.diagonal();
    for (Eigen::Index k = 0; k < diag.size(); ++k) diag[k] = diag[k] > 0 ? 1.0 / std::sqrt(diag[k]) : 1.0;
    const Eigen::MatrixXd scaled_h = diag.asDiagonal() * neg_h * diag.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(scaled_h);
    const auto& values = eig.eigenvalues();
    const double cutoff = std::max(values.maxCoeff(), 0.0) * 1e-12;
    Eigen::VectorXd coeff = eig.eigenvectors().transpose() * diag.cwiseProduct(grad);
    for (Eigen::Index k = 0; k < coeff.size(); ++k) coeff[k] = values[k] > cutoff ? coeff[k] / values[k] : 0.0;
    Eigen::VectorXd step = diag.cwiseProduct(eig.eigenvectors() * coeff);
    double slope = grad.dot(step);
    if (!(slope > 0)) {
      step = grad;
      slope = grad.squaredNorm();
    }
    // Predicted gain below floating-point resolution of the objective.
    if (slope < 1e-15 * std::max(1.0, std::abs(f))) {
      model.stop = StopReason::stalled;
      break;
    }

    double t = 1.0;
    std::vector<double> trial(d);
    bool accepted = false;
    double f_new = f;
    while (t > 1e-12) {
      for (std::size_t c = 0; c < d; ++c) trial[c] = beta[c] + t * step[static_cast<Eigen::Index>(c)];
      f_new = problem.objective(trial);
      if (std::isfinite(f_new) && f_new >= f + 1e-4 * t * slope && f_new > f) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      model.stop = StopReason::stalled;
      break;
    }
    flat = f_new - f <= 1e-12 * std::max(1.0, std::abs(f)) ? flat + 1 : 0;
    beta = trial;
    f = problem.derivatives(beta, grad, &neg_h);
    model.objective_trace.push_back(f);
    if (flat >= 3 && grad.lpNorm<Eigen::Infinity>() > hyper.tol) {
      // Crawling along a nearly flat direction (collinear or quasi-separated
      // features); further steps cannot change the fit measurably.
      model.stop = StopReason::stalled;
      ++iter;
      break;
    }
  }
  if (iter == hyper.max_iter && grad.lpNorm<Eigen::Infinity>() <= hyper.tol) model.stop = StopReason::converged;

  model.iterations = static_cast<unsigned>(model.objective_trace.size() - 1);
  model.gradient_norm = grad.lpNorm<Eigen::Infinity>();
  model.intercept = beta[0];
  model.w.assign(beta.begin() + 1, beta.end());
  model.scaling = std::move(problem.scaling);
  return model;
}

double decision_value(const TrainedModel& model, std::span<const double> x) {
  if (x.size() != model.w.size()) {
    throw Error(fmt::format("feature vector has {} entries, model expects {}", x.size(), model.w.size()));
  }
  std::vector<double> v(x.begin(), x.end());
  for (std::size_t k = 0; k < model.scaling.columns.size(); ++k) {
    const auto c = model.scaling.columns[k];
    v[c] = (v[c] - model.scaling.mean[k]) / model.scaling.scale[k];
  }
  double z = model.intercept;
  for (std::size_t c = 0; c < v.size(); ++c) z += model.w[c] * v[c];
  return z;
}

double likelihood(const TrainedModel& model, std::span<const double> x) {
  return sigmoid(decision_value(model, x));
}

double decision_value(const TrainedModel& model, const LabeledDataset& data, std::size_t row) {
  if (data.cols() != model.w.size()) throw Error("dataset dimension does not match the model");
  const auto slot = scaling_slots(model.scaling, data.cols());
  double z = model.intercept;
  for (const auto& e : data.row(row)) z += model.w[e.column] * scaled(model.scaling, slot, e);
  return z;
}

// ---------------------------------------------------------------------------

std::vector<PrecisionPoint> precision_at(std::span<const double> scores, std::span<const std::uint8_t> labels,
                                         std::span<const NodeId> firms, std::span<const std::size_t> grid) {
  const std::size_t n = scores.size();
  if (labels.size() != n || firms.size() != n) throw Error("precision_at: input sizes differ");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return firms[a] < firms[b];
  });
  std::vector<std::size_t> hits(n + 1, 0);
  for (std::size_t k = 0; k < n; ++k) hits[k + 1] = hits[k] + labels[order[k]];
  std::vector<PrecisionPoint> out;
  for (auto S : grid) {
    if (S == 0 || S > n) throw Error(fmt::format("precision grid value {} outside [1, {}]", S, n));
    out.push_back({S, hits[S], static_cast<double>(hits[S]) / static_cast<double>(S)});
  }
  return out;
}

GridValue GridValue::parse(std::string_view text) {
  text = trim(text);
  GridValue g;
  if (!text.empty() && text.back() == '%') {
    const auto v = parse_double(text.substr(0, text.size() - 1));
    if (!v || *v <= 0 || *v > 100) throw std::invalid_argument("bad grid value '" + std::string(text) + "'");
    g.fraction = true;
    g.value = *v / 100.0;
    return g;
  }
  if (const auto i = parse_integer(text); i) {
    if (*i <= 0) throw std::invalid_argument("bad grid value '" + std::string(text) + "'");
    g.value = static_cast<double>(*i);
    return g;
  }
  const auto v = parse_double(text);
  if (!v || *v <= 0 || *v >= 1) throw std::invalid_argument("bad grid value '" + std::string(text) + "'");
  g.fraction = true;
  g.value = *v;
  return g;
}

std::size_t GridValue::resolve(std::size_t test_size) const {
  if (!fraction) return static_cast<std::size_t>(value);
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(value * static_cast<double>(test_size))));
}

std::vector<std::uint32_t> fold_assignment(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw Error("cross-validation needs k >= 2");
  if (n < k) throw Error(fmt::format("cross-validation needs at least k = {} rows, got {}", k, n));
  std::vector<std::uint32_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0u);
  SplitMix64 rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
  std::vector<std::uint32_t> fold(n);
  const std::size_t base = n / k, extra = n % k;
  std::size_t pos = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t size = base + (f < extra ? 1 : 0);
    for (std::size_t j = 0; j < size; ++j) fold[perm[pos++]] = static_cast<std::uint32_t>(f);
  }
  return fold;
}

EvalReport cross_validate(const LabeledDataset& data, std::size_t k, std::uint64_t seed,
                          std::span<const GridValue> grid, const TrainHyper& hyper, bool keep_models) {
  const std::size_t n = data.rows();
  const auto fold = fold_assignment(n, k, seed);
  EvalReport report;
  report.group = data.group();

  std::vector<std::vector<std::uint32_t>> test(k), training(k);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t f = 0; f < k; ++f) (fold[r] == f ? test[f] : training[f]).push_back(static_cast<std::uint32_t>(r));
  }
  std::size_t smallest = n;
  for (const auto& t : test) smallest = std::min(smallest, t.size());
  std::vector<std::size_t> S;
  for (const auto& g : grid) {
    const auto s = g.resolve(smallest);
    if (s > smallest) {
      report.warnings.push_back(fmt::format("grid value S = {} exceeds the smallest test fold ({}); skipped", s, smallest));
      continue;
    }
    if (std::find(S.begin(), S.end(), s) == S.end()) S.push_back(s);
  }

  report.folds.resize(k);
  std::vector<std::string> fold_errors(k);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t f = 0; f < k; ++f) {
    auto& result = report.folds[f];
    result.fold = f;
    result.train_size = training[f].size();
    result.test_size = test[f].size();
    std::size_t pos = 0;
    for (auto r : training[f]) pos += data.label(r);
    if (pos == 0 || pos == training[f].size()) {
      result.excluded = true;
      continue;
    }
    try {
      auto model = train(data, hyper, training[f]);
      std::vector<double> scores;
      std::vector<std::uint8_t> labels;
      std::vector<NodeId> firms;
      for (auto r : test[f]) {
        scores.push_back(decision_value(model, data, r));
        labels.push_back(data.label(r));
        firms.push_back(data.firm(r));
      }
      result.curve = precision_at(scores, labels, firms, S);
      if (keep_models) result.model = std::move(model);
    } catch (const std::exception& e) {
      fold_errors[f] = e.what();
    }
  }
  for (std::size_t f = 0; f < k; ++f) {
    if (!fold_errors[f].empty()) throw Error(fmt::format("fold {}: {}", f, fold_errors[f]));
    if (report.folds[f].excluded) {
      report.warnings.push_back(fmt::format("fold {} excluded: training part has a single class", f));
    }
  }

  for (std::size_t g = 0; g < S.size(); ++g) {
    AveragedPoint p;
    p.S = S[g];
    std::vector<double> values;
    for (const auto& fr : report.folds) {
      if (!fr.excluded) values.push_back(fr.curve[g].P);
    }
    p.folds = values.size();
    if (!values.empty()) {
      double sum = 0;
      for (double v : values) sum += v;
      p.P_mean = sum / static_cast<double>(values.size());
      if (values.size() > 1) {
        double ss = 0;
        for (double v : values) ss += (v - p.P_mean) * (v - p.P_mean);
        p.P_std = std::sqrt(ss / static_cast<double>(values.size() - 1));
      }
    }
    report.curve.push_back(p);
  }
  return report;
}

// ---------------------------------------------------------------------------

bool is_network_feature(std::string_view name) { return name.starts_with("net_"); }

WeightReport weight_report(const TrainedModel& model) {
  WeightReport report;
  std::vector<std::size_t> order;
  for (std::size_t c = 0; c < model.w.size(); ++c) {
    if (model.w[c] != 0.0) order.push_back(c);
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return std::abs(model.w[a]) > std::abs(model.w[b]); });
  std::optional<double> top_net, top_ind;
  for (auto c : order) {
    const auto& name = model.feature_names[c];
    report.entries.push_back({name, model.w[c], model.w[c] < 0});
    auto& slot = is_network_feature(name) ? top_net : top_ind;
    if (!slot) slot = std::abs(model.w[c]);
  }
  if (top_net && top_ind) report.network_to_individual_ratio = *top_net / *top_ind;
  return report;
}

std::string model_to_json(const TrainedModel& model, FeatureGroup group) {
  nlohmann::ordered_json doc;
  doc["feature_group"] = std::string(to_string(group));
  doc["feature_names"] = model.feature_names;
  doc["w"] = model.w;
  doc["intercept"] = model.intercept;
  doc["hyper"] = {{"l2", model.hyper.l2}, {"tol", model.hyper.tol}, {"max_iter", model.hyper.max_iter}};
  nlohmann::ordered_json transform = nlohmann::ordered_json::array();
  for (std::size_t k = 0; k < model.scaling.columns.size(); ++k) {
    transform.push_back({{"feature", model.feature_names[model.scaling.columns[k]]},
                         {"transform", "log1p_zscore"},
                         {"mean", model.scaling.mean[k]},
                         {"scale", model.scaling.scale[k]}});
  }
  doc["transform"] = transform;
  doc["training"] = {{"iterations", model.iterations},
                     {"gradient_norm", model.gradient_norm},
                     {"stop", std::string(to_string(model.stop))},
                     {"objective", model.objective_trace.empty() ? 0.0 : model.objective_trace.back()}};
  return doc.dump(2) + "\n";
}

}  // namespace ownet
