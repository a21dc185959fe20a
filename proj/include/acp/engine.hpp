#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "acp/evolution.hpp"
#include "acp/rng.hpp"
#include "acp/torus.hpp"

namespace acp {

enum class Cause : std::uint8_t { death = 0, birth = 1, mutant_birth = 2 };
std::string cause_name(Cause c);

struct Event {
  double time;
  int site;
  double old_value;
  double new_value;
  Cause cause;
  int parent;          // -1 for deaths
  bool marked = false; // inane mark carried by the arrow (window replays only)
};

enum class StopReason : std::uint8_t { horizon = 0, absorbed = 1, predicate = 2, event_cap = 3 };
std::string stop_reason_name(StopReason r);

struct Trajectory {
  LatticePtr lattice;
  std::vector<double> initial;
  std::vector<Event> events;
  double final_time = 0.0;
  StopReason stop = StopReason::horizon;
  std::uint64_t seed = 0;
  std::int64_t event_count = 0;  // also counts events that were not logged

  std::vector<double> state_at(double t) const;
  std::vector<double> final_state() const;
  bool capped() const { return stop == StopReason::event_cap; }
};

// Per-type behaviour of the generic engine.
struct TypeRates {
  std::function<double(double)> birth_rate;
  std::function<double(double)> mutation_prob;
  std::function<double(double, Rng&)> mutate;
};

// Rejection-free next-event simulation with a sum tree over per-site rates
// r(u) = 1{occupied} (1 + birth_rate(type) * #empty neighbours).
class Engine {
 public:
  Engine(LatticePtr lattice, std::vector<double> initial, TypeRates rates, std::uint64_t seed);

  // Next event if it happens at or before `limit`; otherwise the clock moves
  // to `limit` (or stays put when absorbed) and nullopt is returned.
  std::optional<Event> step(double limit);

  double time() const { return t_; }
  bool absorbed() const { return occupied_ == 0; }
  const Lattice& lattice() const { return *lat_; }
  LatticePtr lattice_ptr() const { return lat_; }
  double value(int site) const { return values_[site]; }
  const std::vector<double>& values() const { return values_; }
  int occupied() const { return occupied_; }
  int live_types() const { return live_types_; }
  std::int64_t count_of(double type) const;
  std::int64_t event_count() const { return events_; }
  double total_rate() const { return tree_[1]; }
  double site_rate(int site) const { return tree_[leaves_ + site]; }
  int empty_neighbours(int site) const { return empty_nbrs_[site]; }
  // sum of death rates, i.e. number of occupied sites
  double death_rate() const { return occupied_; }
  std::vector<std::pair<double, std::int64_t>> type_counts() const;
  Rng& rng() { return rng_; }

 private:
  int label_for(double v);
  void refresh(int site);
  void set_site(int site, double v);
  int sample_site(double x) const;

  LatticePtr lat_;
  TypeRates rates_;
  Rng rng_;
  double t_ = 0.0;
  std::int64_t events_ = 0;
  std::vector<double> values_;
  std::vector<int> label_;
  std::vector<int> empty_nbrs_;
  std::vector<double> label_value_;
  std::vector<double> label_birth_;
  std::vector<double> label_mut_;
  std::vector<std::int64_t> label_count_;
  std::map<double, int> label_of_value_;
  int occupied_ = 0;
  int live_types_ = 0;
  int leaves_ = 1;
  std::vector<double> tree_;
};

struct StopSpec {
  double horizon = std::numeric_limits<double>::infinity();
  bool first_mutation = false;
  // exactly one type remains, armed once two types have coexisted
  bool resolution = false;
  std::optional<int> density_exit_radius;
  std::function<bool(const Engine&, const Event&)> predicate;
  std::int64_t event_cap = 1'000'000'000;
  bool record_events = true;
};

Trajectory run_engine(Engine& engine, const StopSpec& stop, std::uint64_t seed);

struct AdaptiveParams {
  double delta = 0.0;
  RateFunction b = RateFunction::constant(1.0);
  MutationKernel K = MutationKernel::two_point(1.0, 0.5, 0.5);
};

TypeRates adaptive_rates(const AdaptiveParams& p);

Trajectory run_adaptive(LatticePtr lattice, const AdaptiveParams& params, std::vector<double> initial,
                        const StopSpec& stop, std::uint64_t seed);
Trajectory run_one_type(LatticePtr lattice, double lambda, std::span<const std::uint8_t> initial,
                        double horizon, std::uint64_t seed);
Trajectory run_two_type(LatticePtr lattice, double lambda, double lambda_prime,
                        std::span<const std::uint8_t> initial, double horizon, bool stop_on_resolution,
                        std::uint64_t seed);

// Generator rates at a configuration, for audits.
struct RateAudit {
  double death = 0.0;
  double birth = 0.0;         // non-mutant births
  double mutant_birth = 0.0;
  double total() const { return death + birth + mutant_birth; }
};
RateAudit audit_rates(const Lattice& lattice, const std::vector<double>& config, double delta,
                      const RateFunction& b);
// rate of the specific transition recorded by `ev` at the pre-event configuration
double transition_rate(const Lattice& lattice, const std::vector<double>& config, const Event& ev,
                       double delta, const RateFunction& b);

void write_trajectory_csv(const Trajectory& traj, std::ostream& out);

}  // namespace acp
