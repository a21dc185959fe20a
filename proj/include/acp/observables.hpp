#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <vector>

#include "acp/engine.hpp"
#include "acp/graphical.hpp"
#include "acp/local.hpp"
#include "acp/stats.hpp"
#include "acp/torus.hpp"

namespace acp {

// ---- R(lambda) ----

struct EstimateROptions {
  bool condition_on_survival = true;
  int parallel = 1;
  std::int64_t event_cap = 1'000'000'000;
};

// 0->1 flips per site and unit time in [warmup, warmup + window], from full occupancy
EstimatorResult estimate_R(double lambda, const TorusSpec& spec, double warmup, double window, std::int64_t trials,
                           std::uint64_t seed, const EstimateROptions& opt = {});

// ---- jump sums ----

double jump_sum(const Trajectory& traj, const LocalFunction& f);
double compensator_integral(const Trajectory& traj, const LocalFunction& f, double lambda);

// ---- landscapes ----

struct LandscapeOptions {
  int runs = 1;  // independent trajectories sharing the requested samples
  int parallel = 1;
  std::int64_t event_cap = 1'000'000'000;
};

struct LandscapeSample {
  int d = 1;
  int ell = 0;
  std::map<std::uint64_t, std::int64_t> counts;
  std::int64_t total = 0;
  std::int64_t died_runs = 0;
  std::map<std::uint64_t, double> frequencies() const;
};

LandscapeSample sample_landscape_at_birth(double lambda, const TorusSpec& spec, int ell, double burn_in,
                                          std::int64_t samples, std::uint64_t seed,
                                          const LandscapeOptions& opt = {});

// Occupied offsets (within Q(o, radius), origin excluded) seen by newborns.
std::vector<std::vector<std::vector<int>>> sample_birth_supports(double lambda, const TorusSpec& spec, int radius,
                                                                 double burn_in, std::int64_t samples,
                                                                 std::uint64_t seed, const LandscapeOptions& opt = {});

// ---- past-truncated sampler ----

// eta(u) = 1{Z^d_N x {0} ~> (u, lookback)} on a fresh window per sample
std::vector<std::uint8_t> past_truncated_configuration(double lambda, LatticePtr lattice, double lookback,
                                                       std::uint64_t seed);

struct PastTruncatedResult {
  std::int64_t samples = 0;
  EstimatorResult density;
  std::vector<EstimatorResult> averages;  // one per requested local function
};

// spatial averages of each g over eta, one value per sample
PastTruncatedResult sample_stationary_past_truncated(double lambda, const TorusSpec& spec, double lookback,
                                                     std::int64_t samples, std::uint64_t seed,
                                                     const std::vector<LocalFunction>& gs = {}, int parallel = 1);

// Landscape law obtained from past-truncated samples reweighted by lambda q / R.
std::map<std::uint64_t, double> reweighted_landscape(double lambda, double R, const TorusSpec& spec, int ell,
                                                     double lookback, std::int64_t samples, std::uint64_t seed,
                                                     int parallel = 1);

// ---- box survival and acceptance ----

struct SboxOptions {
  std::optional<double> horizon;  // default sqrt(r)
  enum class Method { engine, window } method = Method::engine;
  int parallel = 1;
};

// P(type 2 alive at the horizon) on Q(o, r) with absorbing complement, type 2 at o, type 1 on B
EstimatorResult estimate_Sbox(double lambda, double lambda_prime, const std::vector<std::vector<int>>& B, int d,
                              int r, std::int64_t trials, std::uint64_t seed, const SboxOptions& opt = {});

struct AcceptanceOptions {
  double burn_in = 50.0;
  int landscape_runs = 0;  // 0: one trajectory per outer landscape
  std::optional<double> horizon;
  int parallel = 1;
};

EstimatorResult estimate_acceptance(double lambda, double lambda_prime, const TorusSpec& spec, int r, int ell,
                                    std::int64_t outer, std::int64_t inner, std::uint64_t seed,
                                    const AcceptanceOptions& opt = {});

using AcceptanceProvider = std::function<EstimatorResult(double lambda, double lambda_prime)>;

// S(lambda, lambda) = int (1 - S(lambda, l')) K(lambda, dl')
EstimatorResult rejection_mass(double lambda, const MutationKernel& K, const AcceptanceProvider& S,
                               std::int64_t quadrature_samples = 10000, std::uint64_t seed = 0);

// ---- good boxes ----

int default_sub_radius(int r);

bool detect_good_box(const TorusSpec& spec, const std::vector<std::uint8_t>& xi, const TorusBox& box,
                     std::optional<int> sub_radius = std::nullopt);

// ---- extinction ----

struct ProbeCheck {
  double t = 0.0;
  double frequency = 0.0;
  double se = 0.0;
  double bound = 0.0;
  bool pass = false;
};

struct ExtinctionReport {
  bool has_estimate = false;
  EstimatorResult tau;
  std::int64_t capped = 0;
  std::vector<ProbeCheck> checks;
};

// probe times default to {tau_hat / 2}
ExtinctionReport estimate_extinction_time(double lambda, int d, int radius, std::int64_t trials, std::uint64_t seed,
                                          double horizon_cap = 1e6, std::vector<double> probe_times = {},
                                          int parallel = 1);

// ---- density and coupling ----

struct DiagnosticsReport {
  int window_radius = 1;
  double density_fraction = 0.0;  // over event times of the full-start process
  std::int64_t event_times = 0;
  bool coupled = false;
  double coupling_time = std::numeric_limits<double>::infinity();
};

// a sparse initial set meeting every box of radius w
std::vector<std::uint8_t> sparse_density_start(const Lattice& lattice, int w);

DiagnosticsReport density_and_coupling_diagnostics(double lambda, const TorusSpec& spec, double horizon,
                                                   std::uint64_t seed, std::optional<int> window_radius = {},
                                                   std::optional<std::vector<std::uint8_t>> initial = {});

// single-ancestor survival frequency to `horizon` for each lambda (guide for declaring supercriticality)
std::vector<EstimatorResult> survival_sweep(const std::vector<double>& lambdas, const TorusSpec& spec, double horizon,
                                            std::int64_t trials, std::uint64_t seed, int parallel = 1);

}  // namespace acp
