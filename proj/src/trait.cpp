#include "acp/trait.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <ostream>

#include "acp/csv.hpp"
#include "acp/errors.hpp"

namespace acp {

ProjectionValue project_phi(std::span<const double> config) {
  ProjectionValue p;
  bool seen = false;
  for (double v : config) {
    if (v == 0) continue;
    if (!seen) {
      seen = true;
      p = {ProjectionValue::Tag::single, v};
    } else if (v != p.value) {
      return {ProjectionValue::Tag::star, 0.0};
    }
  }
  return p;
}

double TraitPath::value_at(double t) const {
  double v = initial;
  for (const auto& j : jumps) {
    if (j.time > t) break;
    v = j.value;
  }
  return v;
}

TraitFold::TraitFold(std::span<const double> initial, double time_scale) : scale_(time_scale) {
  require(time_scale > 0, "extract_Z: time scale delta N^d must be positive");
  for (double v : initial)
    if (v != 0) ++counts_[v];
  auto p = current();
  require(p.tag != ProjectionValue::Tag::star, "extract_Z: trajectory must start from a single-type configuration");
  path_.initial = last_value_ = p.value;
}

ProjectionValue TraitFold::current() const {
  if (counts_.empty()) return {ProjectionValue::Tag::empty, 0.0};
  if (counts_.size() == 1) return {ProjectionValue::Tag::single, counts_.begin()->first};
  return {ProjectionValue::Tag::star, 0.0};
}

void TraitFold::on_event(const Event& e) {
  if (e.old_value != 0) {
    auto it = counts_.find(e.old_value);
    if (it != counts_.end() && --it->second == 0) counts_.erase(it);
  }
  if (e.new_value != 0) ++counts_[e.new_value];
  auto p = current();
  bool star = p.tag == ProjectionValue::Tag::star;
  if (star) {
    if (!in_star_) {
      in_star_ = true;
      star_start_ = e.time;
    }
    return;
  }
  if (in_star_) {
    double a = scale_ * star_start_, b = scale_ * e.time;
    ledger_.intervals.emplace_back(a, b);
    ledger_.raw += e.time - star_start_;
    ledger_.rescaled += b - a;
    in_star_ = false;
    path_.jumps.push_back({b, p.value, p.value == last_value_});
    last_value_ = p.value;
  } else if (p.value != last_value_) {
    path_.jumps.push_back({scale_ * e.time, p.value, false});
    last_value_ = p.value;
  }
}

void TraitFold::finish(double raw_time) {
  if (in_star_) {
    double a = scale_ * star_start_, b = scale_ * raw_time;
    ledger_.intervals.emplace_back(a, b);
    ledger_.raw += raw_time - star_start_;
    ledger_.rescaled += b - a;
    in_star_ = false;
  }
  path_.horizon = scale_ * raw_time;
}

ExtractedTrait extract_Z(const Trajectory& traj, double delta) {
  require(traj.lattice != nullptr, "extract_Z: trajectory has no lattice");
  require(delta > 0 && delta < 1, "extract_Z: delta must lie in (0,1)");
  TraitFold fold(traj.initial, delta * traj.lattice->size());
  for (const auto& e : traj.events) fold.on_event(e);
  fold.finish(traj.final_time);
  return {fold.path(), fold.ledger()};
}

double star_time_fraction(const StarLedger& ledger, double t) {
  require(t > 0, "star_time_fraction: t must be positive");
  double s = 0.0;
  for (auto [a, b] : ledger.intervals) s += std::max(0.0, std::min(b, t) - a);
  return s / t;
}

double star_time_fraction(const Trajectory& traj, double delta, double t) {
  auto z = extract_Z(traj, delta);
  require(t <= z.path.horizon * (1 + 1e-12), "star_time_fraction: t beyond the trajectory's rescaled range");
  return star_time_fraction(z.ledger, t);
}

std::string outcome_name(RoundOutcome o) {
  switch (o) {
    case RoundOutcome::mutant_fixed: return "mutant-fixed";
    case RoundOutcome::resident_retained: return "resident-retained";
    case RoundOutcome::unresolved: return "unresolved-at-T''";
    case RoundOutcome::process_died: return "process-died";
    case RoundOutcome::superseded: return "superseded";
  }
  return "?";
}

RoundsParams RoundsParams::from_schedule(const TorusSpec& spec, const ScalingSchedule& schedule, const RateFunction& b,
                                         const MutationKernel& K, bool waive) {
  auto rep = validate_schedule(schedule, spec.d, spec.N, spec.N);
  if (!rep.pass() && !waive) throw ValidationError("run_rounds: schedule rejected: " + rep.message);
  RoundsParams p;
  p.lattice = Lattice::torus(spec);
  p.model.delta = schedule.delta(spec.N);
  p.model.b = b;
  p.model.K = K;
  p.t_N = schedule.t_N(spec.N);
  p.density_radius = default_density_radius(spec.N);
  return p;
}

namespace {

void classify(RoundRecord& r) {
  if (r.T_prime && *r.T_prime < r.T_dprime) {
    if (r.winner == 0) r.outcome = RoundOutcome::process_died;
    else if (r.winner == r.mutant_type) r.outcome = RoundOutcome::mutant_fixed;
    else if (r.winner == r.parent_type) r.outcome = RoundOutcome::resident_retained;
    else r.outcome = RoundOutcome::superseded;
  } else {
    r.outcome = RoundOutcome::unresolved;
  }
}

}  // namespace

RoundsResult run_rounds(const RoundsParams& p, double lambda0, int k, std::uint64_t seed) {
  require(p.lattice && p.lattice->is_torus(), "run_rounds: torus lattice required");
  require(lambda0 > 0, "run_rounds: lambda0 must be positive");
  require(k >= 0, "run_rounds: k must be >= 0");
  require(k > 0 || std::isfinite(p.raw_horizon), "run_rounds: need a round count or a finite horizon");
  require(p.t_N > 0, "run_rounds: t_N must be positive");
  const Lattice& lat = *p.lattice;
  RoundsResult res;
  res.time_scale = p.model.delta * lat.size();
  std::vector<double> init(lat.size(), lambda0);
  Engine eng(p.lattice, init, adaptive_rates(p.model), seed);
  std::optional<TraitFold> fold;
  if (res.time_scale > 0) fold.emplace(init, res.time_scale);
  std::vector<std::uint8_t> occ(lat.size(), 1);
  PatternMap pm(p.lattice, p.landscape_ell);
  auto& recs = res.rounds;
  std::size_t open_from = 0;       // rounds [open_from, size) still await resolution
  std::deque<std::size_t> pending;  // rounds whose T'' has not been reached
  bool done = false;
  while (!done) {
    double checkpoint = pending.empty() ? std::numeric_limits<double>::infinity() : recs[pending.front()].T_dprime;
    double limit = std::min(checkpoint, p.raw_horizon);
    if (eng.event_count() >= p.event_cap) {
      res.stop = StopReason::event_cap;
      break;
    }
    auto ev = eng.step(limit);
    if (!ev) {
      if (eng.absorbed()) {
        res.stop = StopReason::absorbed;
        break;
      }
      if (checkpoint <= p.raw_horizon && eng.time() >= checkpoint) {
        auto& r = recs[pending.front()];
        pending.pop_front();
        r.T_dprime_reached = true;
        r.dense_at_T_dprime = in_density_class(lat, occ, p.density_radius);
        if (k > 0 && r.index >= k) {
          res.stop = StopReason::predicate;
          done = true;
        }
        continue;
      }
      res.stop = StopReason::horizon;
      break;
    }
    occ[ev->site] = ev->new_value != 0;
    if (fold) fold->on_event(*ev);
    if (ev->cause == Cause::mutant_birth) {
      for (std::size_t i = open_from; i < recs.size(); ++i) recs[i].interrupted = true;
      for (auto i : pending) recs[i].mutation_before_T_dprime = true;
      RoundRecord r;
      r.index = static_cast<int>(recs.size()) + 1;
      r.stage1_start = recs.empty() ? 0.0 : recs.back().T_dprime;
      r.T_N = ev->time;
      r.site = ev->site;
      r.parent_type = eng.value(ev->parent);
      r.mutant_type = ev->new_value;
      r.landscape = {lat.dim(), p.landscape_ell, pm.landscape_code(occ, ev->site)};
      {
        std::vector<std::uint8_t> shifted(lat.size(), 0);
        auto x = lat.coords(ev->site);
        for (auto& c : x) c = -c;
        for (int v = 0; v < lat.size(); ++v) {
          if (v == ev->site || !occ[v]) continue;
          int s = *lat.offset(v, x);
          shifted[s] = 1;
          if (p.keep_support) r.support.push_back(s);
        }
        std::sort(r.support.begin(), r.support.end());
        r.landscape_dense = in_density_class(lat, shifted, p.density_radius);
      }
      r.T_dprime = ev->time + p.t_N;
      recs.push_back(std::move(r));
      pending.push_back(recs.size() - 1);
    }
    int live = eng.live_types();
    if (live <= 1 && open_from < recs.size()) {
      double w = live == 0 ? 0.0 : eng.type_counts().front().first;
      for (std::size_t i = open_from; i < recs.size(); ++i) {
        recs[i].T_prime = ev->time;
        recs[i].winner = w;
      }
      open_from = recs.size();
    }
    if (eng.absorbed()) {
      res.stop = StopReason::absorbed;
      break;
    }
  }
  res.final_time = eng.time();
  res.events = eng.event_count();
  if (fold) {
    fold->finish(res.final_time);
    res.path = fold->path();
    res.ledger = fold->ledger();
  } else {
    res.path.initial = lambda0;
  }
  if (k > 0 && static_cast<int>(recs.size()) > k) recs.resize(k);
  bool e = true;
  double prev_tp = 0.0;
  for (auto& r : recs) {
    classify(r);
    bool ok = r.T_prime && r.T_N < *r.T_prime && *r.T_prime < r.T_dprime && r.T_dprime_reached &&
              !r.mutation_before_T_dprime && r.dense_at_T_dprime && r.winner != 0;
    e = e && ok;
    r.e_flag = e;
    if (e) {
      r.sigma = res.time_scale * *r.T_prime - res.time_scale * prev_tp;
      r.Lambda = r.winner;
      prev_tp = *r.T_prime;
    }
    res.sigma_lambda.emplace_back(r.sigma, r.Lambda);
  }
  res.e_flag = !recs.empty() && e;
  return res;
}

TraitPath path_from_sigma_lambda(double lambda0, const std::vector<std::pair<double, double>>& sl, double horizon) {
  TraitPath p;
  p.initial = lambda0;
  p.horizon = horizon;
  double t = 0.0, prev = lambda0;
  for (auto [s, l] : sl) {
    if (!(s > 0)) break;
    t += s;
    if (t > horizon) break;
    p.jumps.push_back({t, l, l == prev});
    prev = l;
  }
  return p;
}

RoundTables round_statistics(const std::vector<RoundsResult>& runs, const std::vector<double>& t_grid,
                             bool first_round_only) {
  RoundTables tab;
  tab.t_grid = t_grid;
  tab.runs = static_cast<std::int64_t>(runs.size());
  require(!runs.empty(), "round_statistics: no runs");
  // stage-1 durations (rescaled; infinite when no mutation happened) and their landscape flags
  std::vector<std::pair<double, bool>> stage1;
  std::int64_t v = 0, vbar = 0, n_rounds = 0;
  for (const auto& run : runs) {
    if (run.rounds.empty()) {
      stage1.emplace_back(std::numeric_limits<double>::infinity(), false);
      continue;
    }
    bool prev_e = true;
    for (const auto& r : run.rounds) {
      if (!prev_e) break;
      stage1.emplace_back(run.time_scale * (r.T_N - r.stage1_start), r.landscape_dense);
      bool clean = r.T_prime && *r.T_prime < r.T_dprime && r.T_dprime_reached && !r.mutation_before_T_dprime &&
                   r.dense_at_T_dprime;
      ++n_rounds;
      if (clean && r.outcome == RoundOutcome::mutant_fixed) ++v;
      if (clean && r.outcome == RoundOutcome::resident_retained) ++vbar;
      if (first_round_only) break;
      prev_e = r.e_flag;
    }
  }
  for (double t : t_grid) {
    std::int64_t c = 0;
    for (auto [s, dense] : stage1) c += (s <= t && dense);
    tab.U.push_back(proportion(c, static_cast<std::int64_t>(stage1.size())));
  }
  tab.rounds = n_rounds;
  if (n_rounds > 0) {
    tab.V = proportion(v, n_rounds);
    tab.V_bar = proportion(vbar, n_rounds);
  }
  return tab;
}

void write_rounds_csv(const std::vector<RoundsResult>& runs, std::ostream& out) {
  CsvWriter w(out);
  w.row({"run", "round", "T_N", "T_N_rescaled", "site", "parent_type", "mutant_type", "landscape_code",
         "landscape_dense", "T_prime", "T_dprime", "winner", "outcome", "dense_at_T_dprime", "interrupted",
         "e_flag", "sigma", "Lambda"});
  for (std::size_t i = 0; i < runs.size(); ++i) {
    for (const auto& r : runs[i].rounds) {
      w.cell(static_cast<long long>(i)).cell(r.index).cell(r.T_N).cell(runs[i].time_scale * r.T_N).cell(r.site);
      w.cell(r.parent_type).cell(r.mutant_type).cell(static_cast<unsigned long long>(r.landscape.code));
      w.cell(r.landscape_dense);
      if (r.T_prime) w.cell(*r.T_prime);
      else w.cell("");
      w.cell(r.T_dprime).cell(r.winner).cell(outcome_name(r.outcome)).cell(r.dense_at_T_dprime);
      w.cell(r.interrupted).cell(r.e_flag).cell(r.sigma).cell(r.Lambda);
      w.end_row();
    }
  }
}

void write_trait_paths_csv(const std::vector<TraitPath>& paths, std::ostream& out) {
  CsvWriter w(out);
  w.row({"run", "time", "value", "resident_retained"});
  for (std::size_t i = 0; i < paths.size(); ++i) {
    w.cell(static_cast<long long>(i)).cell(0.0).cell(paths[i].initial).cell(false);
    w.end_row();
    for (const auto& j : paths[i].jumps) {
      w.cell(static_cast<long long>(i)).cell(j.time).cell(j.value).cell(j.resident_retained);
      w.end_row();
    }
  }
}

}  // namespace acp
