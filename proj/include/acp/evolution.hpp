#pragma once

#include <string>
#include <utility>
#include <vector>

#include "acp/rng.hpp"

namespace acp {

class MutationKernel {
 public:
  enum class Variant { two_point, gaussian_increment, lognormal };

  // up value lambda+h_up with prob p, down value lambda-h_down with prob 1-p;
  // a down value at or below `floor` is redirected to `floor`
  static MutationKernel two_point(double h_up, double h_down, double p, double floor = 1e-3);
  // lambda + sigma Z conditioned on (0, inf)
  static MutationKernel gaussian_increment(double sigma);
  // lambda exp(sigma Z)
  static MutationKernel lognormal(double sigma);

  Variant variant() const { return variant_; }
  std::string variant_name() const;
  bool discrete() const { return variant_ == Variant::two_point; }
  double h_up() const { return a_; }
  double h_down() const { return b_; }
  double p() const { return p_; }
  double floor() const { return floor_; }
  double sigma() const { return a_; }

  double sample(double lambda, Rng& rng) const;
  // atoms of K(lambda, .) with positive mass (two-point only)
  std::vector<std::pair<double, double>> support(double lambda) const;
  // analytic CDF of K(lambda, .)
  double cdf(double lambda, double x) const;
  // sup of the support minus lambda, infinite for unbounded variants
  double max_increment() const;

  bool operator==(const MutationKernel&) const = default;

 private:
  MutationKernel(Variant v, double a, double b, double p, double floor)
      : variant_(v), a_(a), b_(b), p_(p), floor_(floor) {}
  double down_value(double lambda) const;
  Variant variant_;
  double a_;
  double b_;
  double p_;
  double floor_;
};

class RateFunction {
 public:
  enum class Variant { constant, linear_capped };
  static RateFunction constant(double c);
  static RateFunction linear_capped(double c, double c_max);

  double operator()(double lambda) const;
  Variant variant() const { return variant_; }
  std::string variant_name() const;
  double c() const { return c_; }
  double c_max() const { return c_max_; }
  double sup() const;

  bool operator==(const RateFunction&) const = default;

 private:
  RateFunction(Variant v, double c, double cm) : variant_(v), c_(c), c_max_(cm) {}
  Variant variant_;
  double c_;
  double c_max_;
};

// delta_N = c N^-gamma with declared eps0 and a
struct ScalingSchedule {
  double c = 1.0;
  double gamma = 3.0;
  double eps0 = 0.5;
  double a = 3.0;

  static ScalingSchedule default_for(int d);
  double delta(int N) const;
  // N^(1 + eps0/2)
  double t_N(int N) const;
  void validate() const;
};

struct ScheduleReport {
  bool assumption1 = false;  // delta_N N^(d+1+eps0) decreasing to 0
  bool assumption2 = false;  // delta_N >= N^-a over the range
  bool delta_in_unit_interval = false;
  std::vector<std::pair<int, double>> delta_by_N;
  std::string message;
  bool pass() const { return assumption1 && assumption2 && delta_in_unit_interval; }
};

ScheduleReport validate_schedule(const ScalingSchedule& s, int d, int N_min, int N_max);

// (non-mutant factor, mutant factor)
std::pair<double, double> birth_split(double delta, const RateFunction& b, double lambda);

}  // namespace acp
