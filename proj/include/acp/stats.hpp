#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace acp {

struct EstimatorResult {
  double estimate = 0.0;
  double se = 0.0;
  std::int64_t count = 0;
  std::map<std::string, double> diagnostics;
};

// Welford running mean/variance.
class MeanAccumulator {
 public:
  void add(double x) {
    ++n_;
    double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
  }
  std::int64_t count() const { return n_; }
  double mean() const { return mean_; }
  double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
  double se() const { return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0; }
  EstimatorResult result() const { return {mean(), se(), count(), {}}; }

 private:
  std::int64_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

EstimatorResult mean_of(const std::vector<double>& xs);
EstimatorResult proportion(std::int64_t successes, std::int64_t n);

// sup |F_n - F| for a continuous reference CDF
double ks_one_sample(std::vector<double> xs, const std::function<double(double)>& cdf);
// sup |F_n - G_m|
double ks_two_sample(std::vector<double> xs, std::vector<double> ys);
// asymptotic critical value c(alpha)/sqrt(n) of the one-sample KS statistic
double ks_critical(double alpha, std::size_t n);
// KS distance to Exp(rate fitted by 1/mean), compared against the Lilliefors
// exponential critical value at the 5% level (1.06/sqrt(n) asymptotically)
struct ExponentialityCheck {
  double rate = 0.0;
  double statistic = 0.0;
  double critical = 0.0;
  bool pass = false;
};
ExponentialityCheck lilliefors_exponential(const std::vector<double>& xs);

double total_variation(const std::map<double, double>& p, const std::map<double, double>& q);

// Energy distance between two samples of points in R^k.
double energy_statistic(const std::vector<std::vector<double>>& xs,
                        const std::vector<std::vector<double>>& ys);

double normal_cdf(double x);

}  // namespace acp
