#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "acp/engine.hpp"
#include "acp/local.hpp"
#include "acp/stats.hpp"

namespace acp {

struct ProjectionValue {
  enum class Tag { empty, single, star };
  Tag tag = Tag::empty;
  double value = 0.0;  // the unique type for single, 0 otherwise
  bool operator==(const ProjectionValue&) const = default;
};

ProjectionValue project_phi(std::span<const double> config);

struct TraitJump {
  double time;  // rescaled
  double value;
  bool resident_retained = false;  // value repeats the previous one
};

struct TraitPath {
  double initial = 0.0;
  std::vector<TraitJump> jumps;
  double horizon = 0.0;  // rescaled
  double value_at(double t) const;
};

struct StarLedger {
  double raw = 0.0;
  double rescaled = 0.0;
  std::vector<std::pair<double, double>> intervals;  // rescaled STAR periods
};

// Incremental extraction of Z from an event stream.
class TraitFold {
 public:
  TraitFold(std::span<const double> initial, double time_scale);
  void on_event(const Event& e);
  void finish(double raw_time);
  ProjectionValue current() const;
  const TraitPath& path() const { return path_; }
  const StarLedger& ledger() const { return ledger_; }
  double time_scale() const { return scale_; }

 private:
  double scale_;
  std::map<double, std::int64_t> counts_;
  TraitPath path_;
  StarLedger ledger_;
  double last_value_;
  bool in_star_ = false;
  double star_start_ = 0.0;
};

struct ExtractedTrait {
  TraitPath path;
  StarLedger ledger;
};

// time scale delta * N^d with N^d the number of sites of the trajectory's torus
ExtractedTrait extract_Z(const Trajectory& traj, double delta);
double star_time_fraction(const Trajectory& traj, double delta, double t);
double star_time_fraction(const StarLedger& ledger, double t);

enum class RoundOutcome { mutant_fixed, resident_retained, unresolved, process_died, superseded };
std::string outcome_name(RoundOutcome o);

struct RoundRecord {
  int index = 0;               // 1-based round number
  double stage1_start = 0.0;   // raw time stage 1 began
  double T_N = 0.0;            // raw time of the mutant birth
  int site = -1;
  double parent_type = 0.0;
  double mutant_type = 0.0;
  LocalLandscape landscape;
  std::vector<int> support;    // occupied sites other than the mutant, shifted so the mutant sits at o
  bool landscape_dense = false;
  std::optional<double> T_prime;
  double winner = 0.0;
  double T_dprime = 0.0;
  bool T_dprime_reached = false;
  bool dense_at_T_dprime = false;
  bool mutation_before_T_dprime = false;
  bool interrupted = false;    // a later mutation arrived before resolution
  RoundOutcome outcome = RoundOutcome::unresolved;
  bool e_flag = false;         // E_{N,k} through this round
  double sigma = 0.0;
  double Lambda = 0.0;
};

struct RoundsParams {
  LatticePtr lattice;
  AdaptiveParams model;
  double t_N = 0.0;
  int density_radius = 1;
  int landscape_ell = 3;
  double raw_horizon = std::numeric_limits<double>::infinity();
  std::int64_t event_cap = 1'000'000'000;
  bool keep_support = true;
  bool t_N_overridden = false;

  // Builds parameters from a schedule; throws unless the schedule passes or `waive` is set.
  static RoundsParams from_schedule(const TorusSpec& spec, const ScalingSchedule& schedule, const RateFunction& b,
                                    const MutationKernel& K, bool waive = false);
  double time_scale() const { return model.delta * lattice->size(); }
};

struct RoundsResult {
  std::vector<RoundRecord> rounds;
  bool e_flag = false;
  std::vector<std::pair<double, double>> sigma_lambda;
  TraitPath path;
  StarLedger ledger;
  StopReason stop = StopReason::horizon;
  double final_time = 0.0;
  double time_scale = 0.0;
  std::int64_t events = 0;
};

// k = 0 runs until the raw horizon without a round limit
RoundsResult run_rounds(const RoundsParams& params, double lambda0, int k, std::uint64_t seed);

// TraitPath rebuilt from (sigma, Lambda) tuples
TraitPath path_from_sigma_lambda(double lambda0, const std::vector<std::pair<double, double>>& sl, double horizon);

struct RoundTables {
  std::vector<double> t_grid;
  std::vector<EstimatorResult> U;
  EstimatorResult V;
  EstimatorResult V_bar;
  std::int64_t runs = 0;
  std::int64_t rounds = 0;
};

RoundTables round_statistics(const std::vector<RoundsResult>& runs, const std::vector<double>& t_grid,
                             bool first_round_only = true);

void write_rounds_csv(const std::vector<RoundsResult>& runs, std::ostream& out);
void write_trait_paths_csv(const std::vector<TraitPath>& paths, std::ostream& out);

}  // namespace acp
