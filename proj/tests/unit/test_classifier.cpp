#include <gtest/gtest.h>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "oracles.hpp"
#include "ownet/classifier.hpp"

using namespace ownet;
using Big = boost::multiprecision::cpp_bin_float_100;

namespace {

TrainedModel fixed_model(std::vector<double> w, double intercept) {
  TrainedModel m;
  for (std::size_t k = 0; k < w.size(); ++k) m.feature_names.push_back("f" + std::to_string(k));
  m.w = std::move(w);
  m.intercept = intercept;
  return m;
}

oracle::PlantedLogistic small_problem(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> n(30, 120), p(1, 6);
  return oracle::planted_logistic(rng, n(rng), p(rng), -0.5);
}

}  // namespace

TEST(Sigmoid, ClosedForms) {
  auto m = fixed_model({0, 0, 0}, 0);
  const std::vector<double> x{3.0, -1.0, 7.0};
  EXPECT_DOUBLE_EQ(likelihood(m, x), 0.5);
  auto m3 = fixed_model({1.0}, 0);
  EXPECT_NEAR(likelihood(m3, std::vector<double>{std::log(3.0)}), 0.75, 1e-15);
  EXPECT_THROW(likelihood(m3, x), std::exception);
  EXPECT_EQ(sigmoid(-1000), 0.0);
  EXPECT_EQ(sigmoid(1000), 1.0);
  EXPECT_TRUE(std::isfinite(log_sigmoid(-1000)));
  EXPECT_NEAR(log_sigmoid(-1000), -1000, 1e-9);
}

TEST(Sigmoid, MatchesHighPrecision) {
  std::mt19937_64 rng(51);
  std::normal_distribution<double> normal(0, 3);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<double> w(5), x(5);
    for (auto& v : w) v = normal(rng);
    for (auto& v : x) v = normal(rng);
    const double b = normal(rng);
    Big z = b;
    for (int k = 0; k < 5; ++k) z += Big(w[k]) * Big(x[k]);
    const Big ref = 1 / (1 + exp(-z));
    const double got = likelihood(fixed_model(w, b), x);
    EXPECT_LE(abs((Big(got) - ref) / ref), 1e-12) << z;
    const Big log_ref = log(ref);
    EXPECT_LE(abs((Big(log_sigmoid(static_cast<double>(z))) - log_ref) / log_ref), 1e-12);
  }
}

TEST(Objective, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(52);
  std::normal_distribution<double> normal(0, 0.7);
  for (int trial = 0; trial < 20; ++trial) {
    const auto prob = small_problem(rng);
    std::vector<double> w(prob.w.size());
    for (auto& v : w) v = normal(rng);
    for (double l2 : {0.0, 0.1}) {
      EXPECT_LE(oracle::gradient_fd_error(prob.data, {}, w, normal(rng), l2), 1e-6);
    }
  }
}

TEST(Objective, GradientWithStandardisedColumn) {
  std::mt19937_64 rng(53);
  std::lognormal_distribution<double> capital(10, 2);
  std::vector<std::vector<double>> x(80, std::vector<double>(3));
  std::vector<std::uint8_t> y(80);
  for (std::size_t r = 0; r < 80; ++r) {
    x[r] = {std::log1p(capital(rng)), static_cast<double>(r % 2), static_cast<double>(r % 5)};
    y[r] = (r * 7) % 3 == 0;
  }
  const auto data = oracle::dense_dataset(x, y, {0});
  const auto scaling = fit_scaling(data);
  ASSERT_EQ(scaling.columns.size(), 1u);
  EXPECT_LE(oracle::gradient_fd_error(data, scaling, {0.3, -0.2, 0.1}, 0.4, 0.0), 1e-6);
}

TEST(Train, ObjectiveTraceIsMonotone) {
  std::mt19937_64 rng(54);
  for (int trial = 0; trial < 20; ++trial) {
    const auto prob = small_problem(rng);
    const auto model = train(prob.data);
    ASSERT_FALSE(model.objective_trace.empty());
    for (std::size_t k = 1; k < model.objective_trace.size(); ++k) {
      EXPECT_GT(model.objective_trace[k], model.objective_trace[k - 1]);
    }
    EXPECT_EQ(model.w.size(), prob.data.cols());
    if (model.converged()) {
      EXPECT_LE(model.gradient_norm, model.hyper.tol);
    } else if (model.stop == StopReason::iteration_cap) {
      EXPECT_EQ(model.iterations, model.hyper.max_iter);
    }
  }
}

TEST(Train, SeparableToySetIsFitPerfectly) {
  std::vector<std::vector<double>> x;
  std::vector<std::uint8_t> y;
  std::mt19937_64 rng(55);
  std::uniform_real_distribution<double> u(-1, 1);
  while (x.size() < 200) {
    const double a = u(rng), b = u(rng);
    const double margin = a + 2 * b - 0.3;
    if (std::abs(margin) < 0.05) continue;
    x.push_back({a, b});
    y.push_back(margin > 0);
  }
  const auto data = oracle::dense_dataset(x, y);
  TrainHyper hyper;
  hyper.l2 = 1e-4;
  const auto model = train(data, hyper);
  std::size_t correct = 0;
  for (std::size_t r = 0; r < data.rows(); ++r) correct += (decision_value(model, data, r) > 0) == (y[r] == 1);
  EXPECT_EQ(correct, data.rows());
}

TEST(Train, RecoversPlantedWeights) {
  std::mt19937_64 rng(56);
  const auto prob = oracle::planted_logistic(rng, 100'000, 10, -1.0);
  const auto model = train(prob.data);
  EXPECT_TRUE(model.converged());
  double worst = 0;
  for (std::size_t k = 0; k < 10; ++k) worst = std::max(worst, std::abs(model.w[k] - prob.w[k]));
  EXPECT_LE(worst, 0.1);
  EXPECT_NEAR(model.intercept, -1.0, 0.1);
}

TEST(Train, RejectsSingleClass) {
  const auto data = oracle::dense_dataset({{1.0}, {2.0}}, {1, 1});
  EXPECT_THROW(train(data), Error);
}

TEST(Train, DecisionValueOnRawScale) {
  std::mt19937_64 rng(57);
  std::lognormal_distribution<double> capital(10, 2);
  std::vector<std::vector<double>> x(60, std::vector<double>(2));
  std::vector<std::uint8_t> y(60);
  for (std::size_t r = 0; r < 60; ++r) {
    x[r] = {std::log1p(capital(rng)), static_cast<double>(r % 3)};
    y[r] = r % 4 == 0;
  }
  const auto data = oracle::dense_dataset(x, y, {0});
  const auto model = train(data);
  for (std::size_t r = 0; r < data.rows(); ++r) {
    EXPECT_NEAR(decision_value(model, data, r), decision_value(model, data.dense_row(r)), 1e-12);
  }
}

TEST(Precision, HandRanking) {
  const std::vector<double> scores{0.2, 0.9, 0.5, 0.5, 0.1, 0.7};
  const std::vector<std::uint8_t> labels{1, 1, 0, 1, 0, 0};
  const std::vector<NodeId> firms{0, 1, 2, 3, 4, 5};
  const std::vector<std::size_t> grid{1, 2, 3, 4, 5, 6};
  const auto pts = precision_at(scores, labels, firms, grid);
  const std::vector<std::size_t> R{1, 1, 1, 2, 3, 3};
  for (std::size_t k = 0; k < 6; ++k) {
    EXPECT_EQ(pts[k].S, k + 1);
    EXPECT_EQ(pts[k].R, R[k]);
    EXPECT_EQ(pts[k].P, static_cast<double>(R[k]) / static_cast<double>(k + 1));
  }
  const std::vector<std::size_t> zero{0}, big{7};
  EXPECT_THROW(precision_at(scores, labels, firms, zero), std::exception);
  EXPECT_THROW(precision_at(scores, labels, firms, big), std::exception);
}

TEST(Precision, TwentyItemsAgainstSortedOracle) {
  std::mt19937_64 rng(58);
  std::uniform_int_distribution<int> level(0, 6);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> scores(20);
    std::vector<std::uint8_t> labels(20);
    std::vector<NodeId> firms(20);
    for (int i = 0; i < 20; ++i) {
      scores[i] = level(rng) / 6.0;
      labels[i] = level(rng) % 2;
      firms[i] = static_cast<NodeId>(100 - 3 * i);
    }
    // selection by repeated maximum, ties to the smallest firm id
    std::vector<std::uint8_t> taken(20, 0);
    std::vector<std::size_t> rank;
    for (int s = 0; s < 20; ++s) {
      std::size_t best = 20;
      for (std::size_t i = 0; i < 20; ++i) {
        if (taken[i]) continue;
        if (best == 20 || scores[i] > scores[best] || (scores[i] == scores[best] && firms[i] < firms[best])) best = i;
      }
      taken[best] = 1;
      rank.push_back(best);
    }
    std::vector<std::size_t> grid(20);
    std::iota(grid.begin(), grid.end(), 1);
    const auto pts = precision_at(scores, labels, firms, grid);
    std::size_t r = 0;
    for (std::size_t s = 0; s < 20; ++s) {
      r += labels[rank[s]];
      ASSERT_EQ(pts[s].R, r);
      if (s > 0) {
        ASSERT_GE(pts[s].R, pts[s - 1].R);
      }
    }
  }
}

TEST(Precision, AllPositiveAndRandomBalanced) {
  std::vector<double> scores(1000);
  std::vector<std::uint8_t> ones(1000, 1), half(1000);
  std::vector<NodeId> firms(1000);
  std::mt19937_64 rng(59);
  std::uniform_real_distribution<double> u;
  for (std::size_t i = 0; i < 1000; ++i) {
    scores[i] = u(rng);
    half[i] = i % 2;
    firms[i] = static_cast<NodeId>(i);
  }
  const std::vector<std::size_t> grid{10, 100, 500};
  for (const auto& p : precision_at(scores, ones, firms, grid)) EXPECT_EQ(p.P, 1.0);
  const auto pts = precision_at(scores, half, firms, grid);
  EXPECT_NEAR(pts[2].P, 0.5, 3 * std::sqrt(0.25 / 500));
}

TEST(Precision, InvariantUnderMonotoneTransform) {
  std::mt19937_64 rng(60);
  const auto prob = oracle::planted_logistic(rng, 500, 4, -1.5);
  const auto model = train(prob.data);
  std::vector<double> z(500), e(500);
  for (std::size_t r = 0; r < 500; ++r) {
    z[r] = decision_value(model, prob.data, r);
    e[r] = likelihood(model, prob.data.dense_row(r));
  }
  const std::vector<std::size_t> grid{5, 25, 50, 250};
  const auto a = precision_at(z, prob.data.labels(), prob.data.firms(), grid);
  const auto b = precision_at(e, prob.data.labels(), prob.data.firms(), grid);
  for (std::size_t k = 0; k < grid.size(); ++k) EXPECT_EQ(a[k].R, b[k].R);
}

TEST(Grid, ParseAndResolve) {
  auto g = GridValue::parse("1%");
  EXPECT_TRUE(g.fraction);
  EXPECT_EQ(g.resolve(18'000), 180u);
  EXPECT_EQ(GridValue::parse("0.001").resolve(500), 1u);
  EXPECT_EQ(GridValue::parse("250").resolve(10), 250u);
  EXPECT_THROW(GridValue::parse("0"), std::invalid_argument);
  EXPECT_THROW(GridValue::parse("abc"), std::invalid_argument);
  EXPECT_THROW(GridValue::parse("150%"), std::invalid_argument);
}

TEST(Folds, PartitionAndSizes) {
  for (std::size_t n : {10u, 23u, 1000u, 1001u}) {
    const auto fold = fold_assignment(n, 10, 7);
    std::vector<std::size_t> size(10, 0);
    for (auto f : fold) ++size[f];
    for (std::size_t k = 0; k < 10; ++k) EXPECT_EQ(size[k], n / 10 + (k < n % 10 ? 1 : 0));
    EXPECT_EQ(fold, fold_assignment(n, 10, 7));
  }
  EXPECT_NE(fold_assignment(1000, 10, 7), fold_assignment(1000, 10, 8));
  EXPECT_THROW(fold_assignment(5, 10, 1), Error);
  EXPECT_THROW(fold_assignment(5, 1, 1), Error);
}

TEST(CrossValidate, LeaveOneOut) {
  std::mt19937_64 rng(61);
  auto prob = oracle::planted_logistic(rng, 10, 1, 0.0);
  std::vector<std::vector<double>> x;
  std::vector<std::uint8_t> y;
  for (std::size_t r = 0; r < 10; ++r) {
    x.push_back(prob.data.dense_row(r));
    y.push_back(r % 2);
  }
  const auto data = oracle::dense_dataset(x, y);
  const std::vector<GridValue> grid{GridValue::parse("1")};
  const auto rep = cross_validate(data, 10, 3, grid);
  ASSERT_EQ(rep.folds.size(), 10u);
  ASSERT_EQ(rep.curve.size(), 1u);
  EXPECT_EQ(rep.curve[0].S, 1u);
  EXPECT_EQ(rep.curve[0].folds, 10u);
  double mean = 0;
  for (const auto& f : rep.folds) {
    EXPECT_EQ(f.test_size, 1u);
    EXPECT_EQ(f.train_size, 9u);
    mean += f.curve[0].P;
  }
  EXPECT_DOUBLE_EQ(rep.curve[0].P_mean, mean / 10);
}

TEST(CrossValidate, FoldMissingClassIsExcluded) {
  std::vector<std::vector<double>> x;
  std::vector<std::uint8_t> y;
  for (int r = 0; r < 10; ++r) {
    x.push_back({static_cast<double>(r)});
    y.push_back(r == 4);
  }
  const auto data = oracle::dense_dataset(x, y);
  const std::vector<GridValue> grid{GridValue::parse("1")};
  const auto rep = cross_validate(data, 10, 3, grid);
  std::size_t excluded = 0;
  for (const auto& f : rep.folds) excluded += f.excluded;
  EXPECT_EQ(excluded, 1u);
  EXPECT_FALSE(rep.warnings.empty());
  EXPECT_EQ(rep.curve[0].folds, 9u);
}

TEST(CrossValidate, Deterministic) {
  std::mt19937_64 rng(62);
  const auto prob = oracle::planted_logistic(rng, 3000, 5, -2.0);
  const std::vector<GridValue> grid{GridValue::parse("1%"), GridValue::parse("10%"), GridValue::parse("50")};
  const auto a = cross_validate(prob.data, 10, 9, grid, {}, true);
  const auto b = cross_validate(prob.data, 10, 9, grid, {}, true);
  ASSERT_EQ(a.curve.size(), 3u);
  EXPECT_EQ(a.curve[0].S, 3u);
  for (std::size_t k = 0; k < a.curve.size(); ++k) {
    EXPECT_EQ(a.curve[k].P_mean, b.curve[k].P_mean);
    EXPECT_EQ(a.curve[k].P_std, b.curve[k].P_std);
  }
  for (std::size_t f = 0; f < 10; ++f) {
    ASSERT_TRUE(a.folds[f].model);
    EXPECT_EQ(a.folds[f].model->w, b.folds[f].model->w);
    for (const auto& p : a.folds[f].curve) EXPECT_EQ(p.P, static_cast<double>(p.R) / static_cast<double>(p.S));
  }
  // sample standard deviation over folds
  double mean = 0, ss = 0;
  for (const auto& f : a.folds) mean += f.curve[1].P / 10;
  for (const auto& f : a.folds) ss += (f.curve[1].P - mean) * (f.curve[1].P - mean);
  EXPECT_NEAR(a.curve[1].P_std, std::sqrt(ss / 9), 1e-12);
}

TEST(Weights, RankingAndFlags) {
  auto m = fixed_model({3, -2, 0}, 0.5);
  const auto rep = weight_report(m);
  ASSERT_EQ(rep.entries.size(), 2u);
  EXPECT_EQ(rep.entries[0].feature, "f0");
  EXPECT_EQ(rep.entries[0].weight, 3);
  EXPECT_FALSE(rep.entries[0].negative);
  EXPECT_EQ(rep.entries[1].feature, "f1");
  EXPECT_TRUE(rep.entries[1].negative);
  EXPECT_FALSE(rep.network_to_individual_ratio);
  EXPECT_TRUE(weight_report(fixed_model({0, 0}, 1)).entries.empty());

  auto mixed = fixed_model({0.5, -4}, 0);
  mixed.feature_names = {"region=Beijing", "net_investees_frac"};
  const auto r2 = weight_report(mixed);
  ASSERT_TRUE(r2.network_to_individual_ratio);
  EXPECT_DOUBLE_EQ(*r2.network_to_individual_ratio, 8.0);
  EXPECT_TRUE(is_network_feature(r2.entries[0].feature));
}
