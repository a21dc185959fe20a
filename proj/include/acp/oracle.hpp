#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "acp/engine.hpp"

namespace acp {

// A contact-type process with finitely many site values, in the form the
// exact oracle can enumerate. Label 0 is the empty site.
struct FiniteModel {
  LatticePtr lattice;
  std::vector<double> values;                   // value of each label
  std::vector<double> birth_rate;               // per label
  std::vector<std::vector<double>> child_law;   // per label: law of the child's label

  static FiniteModel one_type(LatticePtr lattice, double lambda);
  static FiniteModel two_type(LatticePtr lattice, double lambda, double lambda_prime);
  // `types` must contain every type reachable through K from its own members
  static FiniteModel adaptive(LatticePtr lattice, const AdaptiveParams& params, std::vector<double> types);

  int label_of(double value) const;
};

class ExactOracle {
 public:
  static constexpr std::size_t kDefaultCap = 729;

  explicit ExactOracle(FiniteModel model, std::size_t cap = kDefaultCap);

  std::size_t state_count() const { return states_; }
  const FiniteModel& model() const { return model_; }
  std::vector<int> decode(std::size_t s) const;
  std::size_t encode(const std::vector<int>& labels) const;
  std::vector<double> point_mass(const std::vector<double>& config) const;

  // p0 exp(Qt) by uniformization, Poisson tail truncated below tol
  std::vector<double> transient(const std::vector<double>& p0, double t, double tol = 1e-10) const;
  // p0 exp(Qt) by a sub-stepped Taylor series on the dense generator; independent check
  std::vector<double> transient_series(const std::vector<double>& p0, double t) const;

  double expectation(const std::vector<double>& dist,
                     const std::function<double(const std::vector<int>&)>& f) const;
  double occupied_probability(const std::vector<double>& dist, int site) const;
  // int_a^b E_{p0}[f(X_s)] ds by composite Simpson on `intervals` panels
  double time_integral(const std::vector<double>& p0, double a, double b,
                       const std::function<double(const std::vector<int>&)>& f, int intervals = 200) const;

 private:
  FiniteModel model_;
  std::size_t states_;
  int m_;
  std::vector<std::size_t> off_;
  std::vector<std::size_t> target_;
  std::vector<double> rate_;
  std::vector<double> exit_;
};

}  // namespace acp
