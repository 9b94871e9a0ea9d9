#include <gsl/gsl_errno.h>
#include <gsl/gsl_sf_zeta.h>

#include <algorithm>
#include <boost/math/tools/minima.hpp>
#include <cmath>

#include "ownet/topology.hpp"

namespace ownet {

namespace {

constexpr std::size_t kMinTail = 10;
constexpr double kAlphaLow = 1.0 + 1e-6;
constexpr double kAlphaHigh = 40.0;

double hurwitz_zeta(double s, double q) {
  static const bool handler_off = [] {
    gsl_set_error_handler_off();
    return true;
  }();
  (void)handler_off;
  gsl_sf_result r;
  const int status = gsl_sf_hzeta_e(s, q, &r);
  if (status != GSL_SUCCESS && status != GSL_EUNDRFLW) {
    throw std::domain_error(std::string("Hurwitz zeta failed: ") + gsl_strerror(status));
  }
  return r.val;
}

struct Tail {
  std::vector<std::uint64_t> values;  // sorted ascending
  double log_sum = 0;
};

Tail make_tail(std::span<const std::uint64_t> sorted, std::uint64_t xmin) {
  Tail t;
  auto first = std::lower_bound(sorted.begin(), sorted.end(), xmin);
  t.values.assign(first, sorted.end());
  for (auto x : t.values) t.log_sum += std::log(static_cast<double>(x));
  return t;
}

double estimate_alpha(const Tail& tail, std::uint64_t xmin, PowerLawEstimator estimator) {
  const double n = static_cast<double>(tail.values.size());
  if (estimator == PowerLawEstimator::approximate) {
    const double denom = tail.log_sum - n * std::log(static_cast<double>(xmin) - 0.5);
    return 1.0 + n / denom;
  }
  // Concave in alpha; Brent on the negative mean log-likelihood.
  const double mean_log = tail.log_sum / n;
  const double q = static_cast<double>(xmin);
  auto negative = [&](double alpha) { return std::log(hurwitz_zeta(alpha, q)) + alpha * mean_log; };
  const auto [best, value] =
      boost::math::tools::brent_find_minima(negative, kAlphaLow, kAlphaHigh, 30);
  (void)value;
  return best;
}

double ks_distance(const Tail& tail, double alpha, std::uint64_t xmin, PowerLawEstimator estimator) {
  const auto& v = tail.values;
  const double n = static_cast<double>(v.size());
  double worst = 0;
  std::size_t i = 0;
  while (i < v.size()) {
    std::size_t j = i;
    while (j < v.size() && v[j] == v[i]) ++j;
    // Empirical and fitted CDF at the integer v[i]; both are step functions
    // jumping only at integers, so these points give the supremum.
    const double emp = static_cast<double>(j) / n;
    const double fit = 1.0 - power_law_survival(alpha, xmin, v[i] + 1, estimator);
    const double emp_before = static_cast<double>(i) / n;
    const double fit_before = 1.0 - power_law_survival(alpha, xmin, v[i], estimator);
    worst = std::max({worst, std::abs(emp - fit), std::abs(emp_before - fit_before)});
    i = j;
  }
  return worst;
}

}  // namespace

double power_law_survival(double alpha, std::uint64_t xmin, std::uint64_t x,
                          PowerLawEstimator estimator) {
  if (x <= xmin) return 1.0;
  if (estimator == PowerLawEstimator::approximate) {
    return std::pow((static_cast<double>(x) - 0.5) / (static_cast<double>(xmin) - 0.5), 1.0 - alpha);
  }
  return hurwitz_zeta(alpha, static_cast<double>(x)) / hurwitz_zeta(alpha, static_cast<double>(xmin));
}

double power_law_log_likelihood(std::span<const std::uint64_t> tail, double alpha,
                                std::uint64_t xmin) {
  double log_sum = 0;
  for (auto x : tail) {
    if (x < xmin) throw std::invalid_argument("sample below xmin");
    log_sum += std::log(static_cast<double>(x));
  }
  return -static_cast<double>(tail.size()) * std::log(hurwitz_zeta(alpha, static_cast<double>(xmin))) -
         alpha * log_sum;
}

PowerLawFit fit_power_law_mle(std::span<const std::uint64_t> samples, XminPolicy policy,
                              PowerLawEstimator estimator) {
  std::vector<std::uint64_t> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());

  auto fit_at = [&](std::uint64_t xmin) {
    if (xmin == 0) throw std::invalid_argument("xmin must be at least 1");
    Tail tail = make_tail(sorted, xmin);
    if (tail.values.size() < kMinTail) {
      throw std::invalid_argument("power-law fit needs at least 10 samples >= xmin");
    }
    if (tail.values.front() == tail.values.back()) {
      throw std::invalid_argument("degenerate sample: all tail values are equal");
    }
    PowerLawFit fit;
    fit.xmin = xmin;
    fit.n_tail = tail.values.size();
    fit.alpha = estimate_alpha(tail, xmin, estimator);
    fit.ks_distance = ks_distance(tail, fit.alpha, xmin, estimator);
    return fit;
  };

  if (!policy.scan) return fit_at(policy.xmin);

  const auto positive_begin = std::upper_bound(sorted.begin(), sorted.end(), std::uint64_t{0});
  const std::size_t positives = static_cast<std::size_t>(sorted.end() - positive_begin);
  if (positives < kMinTail) throw std::invalid_argument("power-law fit needs at least 10 positive samples");
  // Candidate cap: 90th percentile of the positive samples.
  const std::uint64_t cap = *(positive_begin + static_cast<std::ptrdiff_t>((positives - 1) * 9 / 10));

  std::optional<PowerLawFit> best;
  std::uint64_t previous = 0;
  for (auto it = positive_begin; it != sorted.end() && *it <= cap; ++it) {
    if (*it == previous) continue;
    previous = *it;
    const auto tail_size = static_cast<std::size_t>(sorted.end() - it);
    if (tail_size < kMinTail) break;
    if (*it == sorted.back()) break;  // degenerate from here on
    const auto fit = fit_at(*it);
    if (!best || fit.ks_distance < best->ks_distance) best = fit;
  }
  if (!best) throw std::invalid_argument("degenerate sample: no usable xmin candidate");
  return *best;
}

}  // namespace ownet
