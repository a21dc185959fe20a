#include "acp/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "acp/errors.hpp"
#include "acp/stats.hpp"

namespace acp {

MutationKernel MutationKernel::two_point(double h_up, double h_down, double p, double floor) {
  require(h_up > 0 && h_down > 0, "two-point kernel: h_up and h_down must be positive");
  require(p >= 0 && p <= 1, "two-point kernel: p must lie in [0,1]");
  require(floor > 0, "two-point kernel: floor must be positive");
  return MutationKernel(Variant::two_point, h_up, h_down, p, floor);
}

MutationKernel MutationKernel::gaussian_increment(double sigma) {
  require(sigma > 0 && std::isfinite(sigma), "gaussian-increment kernel: sigma must be positive");
  return MutationKernel(Variant::gaussian_increment, sigma, 0.0, 0.0, 0.0);
}

MutationKernel MutationKernel::lognormal(double sigma) {
  require(sigma > 0 && std::isfinite(sigma), "lognormal kernel: sigma must be positive");
  return MutationKernel(Variant::lognormal, sigma, 0.0, 0.0, 0.0);
}

std::string MutationKernel::variant_name() const {
  switch (variant_) {
    case Variant::two_point: return "two-point";
    case Variant::gaussian_increment: return "gaussian-increment";
    case Variant::lognormal: return "lognormal";
  }
  return "?";
}

double MutationKernel::down_value(double lambda) const {
  double v = lambda - b_;
  if (v <= floor_) v = floor_;
  if (v == lambda) throw DomainError("two-point kernel: parent type sits at the floor value");
  return v;
}

double MutationKernel::sample(double lambda, Rng& rng) const {
  if (!(lambda > 0)) throw DomainError("sample_mutant_type: lambda must be positive");
  switch (variant_) {
    case Variant::two_point:
      return uniform01(rng) < p_ ? lambda + a_ : down_value(lambda);
    case Variant::gaussian_increment:
      for (;;) {
        double v = lambda + a_ * standard_normal(rng);
        if (v > 0 && v != lambda) return v;
      }
    case Variant::lognormal:
      for (;;) {
        double v = lambda * std::exp(a_ * standard_normal(rng));
        if (v > 0 && v != lambda && std::isfinite(v)) return v;
      }
  }
  return lambda;
}

std::vector<std::pair<double, double>> MutationKernel::support(double lambda) const {
  require(discrete(), "kernel support is only available for the two-point kernel");
  std::vector<std::pair<double, double>> out;
  if (p_ > 0) out.emplace_back(lambda + a_, p_);
  if (p_ < 1) out.emplace_back(down_value(lambda), 1.0 - p_);
  return out;
}

double MutationKernel::cdf(double lambda, double x) const {
  switch (variant_) {
    case Variant::two_point: {
      double s = 0.0;
      for (auto [v, w] : support(lambda))
        if (v <= x) s += w;
      return s;
    }
    case Variant::gaussian_increment: {
      if (x <= 0) return 0.0;
      double z0 = normal_cdf(-lambda / a_);
      return (normal_cdf((x - lambda) / a_) - z0) / (1.0 - z0);
    }
    case Variant::lognormal:
      if (x <= 0) return 0.0;
      return normal_cdf(std::log(x / lambda) / a_);
  }
  return 0.0;
}

double MutationKernel::max_increment() const {
  if (variant_ == Variant::two_point) return p_ > 0 ? a_ : 0.0;
  return std::numeric_limits<double>::infinity();
}

RateFunction RateFunction::constant(double c) {
  require(c > 0 && std::isfinite(c), "constant rate function: c must be positive");
  return RateFunction(Variant::constant, c, c);
}

RateFunction RateFunction::linear_capped(double c, double c_max) {
  require(c > 0 && c_max > 0, "linear-capped rate function: parameters must be positive");
  return RateFunction(Variant::linear_capped, c, c_max);
}

double RateFunction::operator()(double lambda) const {
  if (variant_ == Variant::constant) return c_;
  return std::min(c_ * lambda, c_max_);
}

double RateFunction::sup() const { return variant_ == Variant::constant ? c_ : c_max_; }

std::string RateFunction::variant_name() const {
  return variant_ == Variant::constant ? "constant" : "linear-capped";
}

ScalingSchedule ScalingSchedule::default_for(int d) {
  return {1.0, static_cast<double>(d + 2), 0.5, static_cast<double>(d + 2)};
}

void ScalingSchedule::validate() const {
  require(c > 0 && c <= 1, "schedule: c must lie in (0,1]");
  require(gamma > 0, "schedule: gamma must be positive");
  require(eps0 > 0, "schedule: eps0 must be positive");
  require(a > 0, "schedule: a must be positive");
}

double ScalingSchedule::delta(int N) const { return c * std::pow(static_cast<double>(N), -gamma); }

double ScalingSchedule::t_N(int N) const {
  return std::pow(static_cast<double>(N), 1.0 + eps0 / 2.0);
}

ScheduleReport validate_schedule(const ScalingSchedule& s, int d, int N_min, int N_max) {
  s.validate();
  require(d >= 1, "validate_schedule: d must be positive");
  require(N_min >= 2 && N_max >= N_min, "validate_schedule: bad N range");
  ScheduleReport r;
  double e1 = static_cast<double>(d) + 1.0 + s.eps0;
  r.assumption1 = s.gamma > e1;
  r.assumption2 = true;
  r.delta_in_unit_interval = true;
  for (int N = N_min; N <= N_max; ++N) {
    double dn = s.delta(N);
    if (N == N_min || N == N_max || (N - N_min) % std::max(1, (N_max - N_min) / 8) == 0)
      r.delta_by_N.emplace_back(N, dn);
    if (!(dn > 0 && dn < 1)) r.delta_in_unit_interval = false;
    if (dn < std::pow(static_cast<double>(N), -s.a)) r.assumption2 = false;
  }
  std::ostringstream m;
  m << "assumption 1 (gamma=" << s.gamma << " vs d+1+eps0=" << e1 << "): "
    << (r.assumption1 ? "pass" : "fail") << "; assumption 2 (delta_N >= N^-" << s.a << " on ["
    << N_min << "," << N_max << "]): " << (r.assumption2 ? "pass" : "fail")
    << "; delta_N in (0,1): " << (r.delta_in_unit_interval ? "yes" : "no");
  r.message = m.str();
  return r;
}

std::pair<double, double> birth_split(double delta, const RateFunction& b, double lambda) {
  require(delta >= 0 && delta < 1, "birth_split: delta must lie in [0,1)");
  double x = delta * b(lambda);
  return {std::max(0.0, 1.0 - x), std::min(x, 1.0)};
}

}  // namespace acp
