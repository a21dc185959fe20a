#include "acp/stats.hpp"

#include <algorithm>

#include "acp/errors.hpp"

namespace acp {

EstimatorResult mean_of(const std::vector<double>& xs) {
  MeanAccumulator acc;
  for (double x : xs) acc.add(x);
  return acc.result();
}

EstimatorResult proportion(std::int64_t successes, std::int64_t n) {
  require(n > 0, "proportion: empty sample");
  double p = static_cast<double>(successes) / static_cast<double>(n);
  return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(n)), n, {}};
}

double ks_one_sample(std::vector<double> xs, const std::function<double(double)>& cdf) {
  require(!xs.empty(), "ks_one_sample: empty sample");
  std::sort(xs.begin(), xs.end());
  double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double f = cdf(xs[i]);
    d = std::max(d, std::max(static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n));
  }
  return d;
}

double ks_two_sample(std::vector<double> xs, std::vector<double> ys) {
  require(!xs.empty() && !ys.empty(), "ks_two_sample: empty sample");
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());
  double n = static_cast<double>(xs.size()), m = static_cast<double>(ys.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < xs.size() && j < ys.size()) {
    double t = std::min(xs[i], ys[j]);
    while (i < xs.size() && xs[i] <= t) ++i;
    while (j < ys.size() && ys[j] <= t) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
  }
  return d;
}

double ks_critical(double alpha, std::size_t n) {
  return std::sqrt(-0.5 * std::log(alpha / 2.0)) / std::sqrt(static_cast<double>(n));
}

ExponentialityCheck lilliefors_exponential(const std::vector<double>& xs) {
  require(xs.size() >= 5, "lilliefors_exponential: need at least 5 samples");
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  ExponentialityCheck c;
  c.rate = 1.0 / mean;
  c.statistic = ks_one_sample(xs, [&](double x) { return x <= 0 ? 0.0 : -std::expm1(-c.rate * x); });
  double sn = std::sqrt(static_cast<double>(xs.size()));
  // Stephens' modified statistic for the exponential case
  double modified = (c.statistic - 0.2 / static_cast<double>(xs.size())) * (sn + 0.26 + 0.5 / sn);
  c.critical = 1.094 / (sn + 0.26 + 0.5 / sn) + 0.2 / static_cast<double>(xs.size());
  c.pass = modified < 1.094;
  return c;
}

double total_variation(const std::map<double, double>& p, const std::map<double, double>& q) {
  double s = 0.0;
  for (const auto& [k, v] : p) {
    auto it = q.find(k);
    s += std::abs(v - (it == q.end() ? 0.0 : it->second));
  }
  for (const auto& [k, v] : q)
    if (!p.count(k)) s += std::abs(v);
  return 0.5 * s;
}

static double dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

double energy_statistic(const std::vector<std::vector<double>>& xs,
                        const std::vector<std::vector<double>>& ys) {
  require(!xs.empty() && !ys.empty(), "energy_statistic: empty sample");
  auto mean_dist = [](const auto& a, const auto& b) {
    double s = 0.0;
    for (const auto& x : a)
      for (const auto& y : b) s += dist(x, y);
    return s / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
  };
  return 2.0 * mean_dist(xs, ys) - mean_dist(xs, xs) - mean_dist(ys, ys);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace acp
