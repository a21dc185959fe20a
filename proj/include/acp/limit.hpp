#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "acp/evolution.hpp"
#include "acp/stats.hpp"
#include "acp/trait.hpp"

namespace acp {

using RProvider = std::function<double(double lambda)>;
using SProvider = std::function<double(double lambda, double lambda_prime)>;

// Table lookups; off-grid values are interpolated linearly when `interpolate`
// is set, and anything outside the table's range throws naming the missing lambda.
RProvider r_table(std::map<double, double> table, bool interpolate = true);
// Keyed by (lambda, lambda'); interpolation runs in lambda along a fixed increment lambda' - lambda.
SProvider s_table(std::map<std::pair<double, double>, double> table, bool interpolate = true);
SProvider s_constant(double s);

struct LimitParams {
  double lambda0 = 1.0;
  RateFunction b = RateFunction::constant(1.0);
  MutationKernel K = MutationKernel::two_point(1.0, 0.5, 0.5);
  RProvider R;
  SProvider S;

  double rate(double lambda) const;
  // zero for lambda' <= lambda
  double accept(double lambda, double lambda_prime) const;
  void validate() const;
};

struct Attempt {
  double time = 0.0;   // time of the attempt
  double sigma = 0.0;  // holding time since the previous attempt
  double from = 0.0;
  double proposal = 0.0;
  bool accepted = false;
  double value_after = 0.0;  // Lambda_j; repeats `from` on rejection
};

struct LimitSample {
  TraitPath path;
  std::vector<Attempt> attempts;
};

// max_attempts < 0 runs to the horizon; otherwise sampling stops after that many attempts
LimitSample sample_limit_path(const LimitParams& p, double horizon, std::uint64_t seed, std::int64_t max_attempts = -1);
std::vector<LimitSample> sample_limit_paths(const LimitParams& p, double horizon, std::int64_t n, std::uint64_t seed,
                                            int parallel = 1, std::int64_t max_attempts = -1);

// atoms of the kernel including the rejection mass at lambda (discrete kernels only)
std::vector<std::pair<double, double>> jump_kernel(const LimitParams& p, double lambda);

struct FddSpec {
  std::vector<double> times;
  std::vector<std::function<double(double)>> g;
  void validate() const;
};

// E[prod_j 1{sigma_j <= t_j} g_j(Lambda_j)], exact for discrete kernels
double fdd_weights(const LimitParams& p, const FddSpec& spec);
EstimatorResult fdd_weights_mc(const LimitParams& p, const FddSpec& spec, std::int64_t paths, std::uint64_t seed,
                               int parallel = 1);
// empirical mean of the fdd functional over existing attempt logs
EstimatorResult fdd_empirical(const std::vector<LimitSample>& samples, const FddSpec& spec);

struct NonexplosionReport {
  std::vector<double> horizons;          // H/4, H/2, H
  std::vector<EstimatorResult> mean_jumps;
  double q50 = 0.0, q90 = 0.0, q99 = 0.0;
  std::int64_t max_jumps = 0;
  bool flagged = false;
  std::string message;
};

NonexplosionReport check_nonexplosive(const LimitParams& p, double horizon, std::int64_t trials, std::uint64_t seed,
                                      int parallel = 1);

struct MicroEnsemble {
  double lambda0 = 0.0;
  MutationKernel K = MutationKernel::two_point(1.0, 0.5, 0.5);
  std::vector<TraitPath> paths;
  std::vector<std::pair<double, double>> first;  // (sigma_1, Lambda_1)
};

struct LimitEnsemble {
  double lambda0 = 0.0;
  MutationKernel K = MutationKernel::two_point(1.0, 0.5, 0.5);
  std::vector<TraitPath> paths;
  std::vector<std::pair<double, double>> first;
};

// first-round pairs come from runs whose first round satisfies E_{N,1}
MicroEnsemble micro_ensemble(double lambda0, const MutationKernel& K, const std::vector<RoundsResult>& runs);
LimitEnsemble limit_ensemble(const LimitParams& p, const std::vector<LimitSample>& samples);

struct CompareOptions {
  std::vector<double> times;
  int bootstrap = 200;
  double level = 0.99;
  std::uint64_t seed = 0;
  std::size_t energy_cap = 400;
};

struct ComparisonRow {
  std::string statistic;
  double value = 0.0;
  double band = 0.0;  // permutation quantile at the requested level
  std::int64_t n_micro = 0;
  std::int64_t n_limit = 0;
  std::uint64_t seed = 0;
  bool within() const { return value <= band; }
};

struct ComparisonReport {
  std::vector<ComparisonRow> rows;
  const ComparisonRow& row(const std::string& name) const;
};

ComparisonReport compare_paths(const MicroEnsemble& micro, const LimitEnsemble& limit, const CompareOptions& opt);
void write_comparison_csv(const ComparisonReport& rep, std::ostream& out);

}  // namespace acp
