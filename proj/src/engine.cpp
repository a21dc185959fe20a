#include "acp/engine.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "acp/csv.hpp"
#include "acp/errors.hpp"

namespace acp {

std::string cause_name(Cause c) {
  switch (c) {
    case Cause::death: return "death";
    case Cause::birth: return "birth";
    case Cause::mutant_birth: return "birth-with-mutation";
  }
  return "?";
}

std::string stop_reason_name(StopReason r) {
  switch (r) {
    case StopReason::horizon: return "horizon";
    case StopReason::absorbed: return "absorbed";
    case StopReason::predicate: return "predicate";
    case StopReason::event_cap: return "event-cap";
  }
  return "?";
}

std::vector<double> Trajectory::state_at(double t) const {
  std::vector<double> x = initial;
  for (const auto& e : events) {
    if (e.time > t) break;
    x[e.site] = e.new_value;
  }
  return x;
}

std::vector<double> Trajectory::final_state() const {
  std::vector<double> x = initial;
  for (const auto& e : events) x[e.site] = e.new_value;
  return x;
}

Engine::Engine(LatticePtr lattice, std::vector<double> initial, TypeRates rates, std::uint64_t seed)
    : lat_(std::move(lattice)), rates_(std::move(rates)), rng_(seed), values_(std::move(initial)) {
  require(static_cast<int>(values_.size()) == lat_->size(), "Engine: initial configuration has wrong size");
  for (double v : values_) require(v >= 0 && std::isfinite(v), "Engine: type values must be finite and >= 0");
  label_value_.push_back(0.0);
  label_birth_.push_back(0.0);
  label_mut_.push_back(0.0);
  label_count_.push_back(0);
  label_of_value_[0.0] = 0;
  int n = lat_->size();
  label_.assign(n, 0);
  empty_nbrs_.assign(n, 0);
  while (leaves_ < n) leaves_ *= 2;
  tree_.assign(2 * static_cast<std::size_t>(leaves_), 0.0);
  for (int i = 0; i < n; ++i) {
    int l = label_for(values_[i]);
    label_[i] = l;
    if (label_count_[l]++ == 0 && l != 0) ++live_types_;
    if (l != 0) ++occupied_;
  }
  for (int i = 0; i < n; ++i)
    for (int j : lat_->neighbors(i)) empty_nbrs_[i] += (label_[j] == 0);
  for (int i = 0; i < n; ++i) {
    tree_[leaves_ + i] = label_[i] ? 1.0 + label_birth_[label_[i]] * empty_nbrs_[i] : 0.0;
  }
  for (int j = leaves_ - 1; j >= 1; --j) tree_[j] = tree_[2 * j] + tree_[2 * j + 1];
}

int Engine::label_for(double v) {
  auto it = label_of_value_.find(v);
  if (it != label_of_value_.end()) return it->second;
  int l = static_cast<int>(label_value_.size());
  double br = rates_.birth_rate(v);
  double mp = rates_.mutation_prob ? rates_.mutation_prob(v) : 0.0;
  require(br >= 0 && std::isfinite(br), "Engine: birth rate must be finite and >= 0");
  require(mp >= 0 && mp <= 1, "Engine: mutation probability must lie in [0,1]");
  if (mp > 0) require(static_cast<bool>(rates_.mutate), "Engine: mutation probability without a kernel");
  label_value_.push_back(v);
  label_birth_.push_back(br);
  label_mut_.push_back(mp);
  label_count_.push_back(0);
  label_of_value_[v] = l;
  return l;
}

std::int64_t Engine::count_of(double type) const {
  auto it = label_of_value_.find(type);
  return it == label_of_value_.end() ? 0 : label_count_[it->second];
}

std::vector<std::pair<double, std::int64_t>> Engine::type_counts() const {
  std::vector<std::pair<double, std::int64_t>> out;
  for (std::size_t l = 1; l < label_value_.size(); ++l)
    if (label_count_[l] > 0) out.emplace_back(label_value_[l], label_count_[l]);
  std::sort(out.begin(), out.end());
  return out;
}

void Engine::refresh(int site) {
  int l = label_[site];
  double r = l ? 1.0 + label_birth_[l] * empty_nbrs_[site] : 0.0;
  int j = leaves_ + site;
  tree_[j] = r;
  for (j >>= 1; j >= 1; j >>= 1) tree_[j] = tree_[2 * j] + tree_[2 * j + 1];
}

void Engine::set_site(int site, double v) {
  int old = label_[site];
  int nl = label_for(v);
  label_[site] = nl;
  values_[site] = v;
  if (--label_count_[old] == 0 && old != 0) --live_types_;
  if (label_count_[nl]++ == 0 && nl != 0) ++live_types_;
  bool was = old != 0, now = nl != 0;
  if (was != now) {
    occupied_ += now ? 1 : -1;
    int delta = now ? -1 : 1;
    for (int j : lat_->neighbors(site)) {
      empty_nbrs_[j] += delta;
      refresh(j);
    }
  }
  refresh(site);
}

int Engine::sample_site(double x) const {
  int j = 1;
  while (j < leaves_) {
    int l = 2 * j;
    if ((x < tree_[l] && tree_[l] > 0) || tree_[l + 1] <= 0) {
      j = l;
    } else {
      x -= tree_[l];
      j = l + 1;
    }
  }
  return j - leaves_;
}

std::optional<Event> Engine::step(double limit) {
  double total = tree_[1];
  if (occupied_ == 0 || !(total > 0)) {
    if (std::isfinite(limit)) t_ = std::max(t_, limit);
    return std::nullopt;
  }
  double dt = exponential(rng_, total);
  if (t_ + dt > limit) {
    t_ = limit;
    return std::nullopt;
  }
  t_ += dt;
  int u = sample_site(uniform01(rng_) * total);
  int l = label_[u];
  int e = empty_nbrs_[u];
  double ru = 1.0 + label_birth_[l] * e;
  ++events_;
  if (e == 0 || uniform01(rng_) * ru < 1.0) {
    Event ev{t_, u, values_[u], 0.0, Cause::death, -1, false};
    set_site(u, 0.0);
    return ev;
  }
  int k = static_cast<int>(uniform_index(rng_, static_cast<std::uint64_t>(e)));
  int target = -1;
  for (int v : lat_->neighbors(u)) {
    if (label_[v] == 0 && k-- == 0) {
      target = v;
      break;
    }
  }
  double parent = values_[u];
  double child = parent;
  Cause cause = Cause::birth;
  if (label_mut_[l] > 0 && uniform01(rng_) < label_mut_[l]) {
    child = rates_.mutate(parent, rng_);
    cause = Cause::mutant_birth;
  }
  Event ev{t_, target, 0.0, child, cause, u, false};
  set_site(target, child);
  return ev;
}

Trajectory run_engine(Engine& engine, const StopSpec& stop, std::uint64_t seed) {
  Trajectory tr;
  tr.lattice = engine.lattice_ptr();
  tr.initial = engine.values();
  tr.seed = seed;
  bool armed = stop.resolution && engine.live_types() >= 2;
  std::optional<DensityTracker> density;
  if (stop.density_exit_radius) {
    std::vector<std::uint8_t> occ(engine.values().size());
    for (std::size_t i = 0; i < occ.size(); ++i) occ[i] = engine.values()[i] != 0;
    density.emplace(engine.lattice_ptr(), *stop.density_exit_radius, occ);
  }
  std::int64_t start_events = engine.event_count();
  for (;;) {
    if (engine.event_count() - start_events >= stop.event_cap) {
      tr.stop = StopReason::event_cap;
      break;
    }
    auto ev = engine.step(stop.horizon);
    if (!ev) {
      tr.stop = engine.absorbed() ? StopReason::absorbed : StopReason::horizon;
      break;
    }
    if (stop.record_events) tr.events.push_back(*ev);
    bool halt = false;
    if (stop.first_mutation && ev->cause == Cause::mutant_birth) halt = true;
    if (stop.resolution) {
      if (engine.live_types() >= 2) armed = true;
      else if (armed) halt = true;
    }
    if (density) {
      density->set(ev->site, ev->new_value != 0);
      if (!density->in_class()) halt = true;
    }
    if (stop.predicate && stop.predicate(engine, *ev)) halt = true;
    if (halt) {
      tr.stop = StopReason::predicate;
      break;
    }
  }
  tr.final_time = engine.time();
  tr.event_count = engine.event_count() - start_events;
  return tr;
}

TypeRates adaptive_rates(const AdaptiveParams& p) {
  require(p.delta >= 0 && p.delta < 1, "adaptive engine: delta must lie in [0,1)");
  TypeRates r;
  r.birth_rate = [](double v) { return v; };
  double delta = p.delta;
  RateFunction b = p.b;
  MutationKernel K = p.K;
  r.mutation_prob = [delta, b](double v) { return birth_split(delta, b, v).second; };
  r.mutate = [K](double v, Rng& rng) { return K.sample(v, rng); };
  return r;
}

Trajectory run_adaptive(LatticePtr lattice, const AdaptiveParams& params, std::vector<double> initial,
                        const StopSpec& stop, std::uint64_t seed) {
  Engine eng(std::move(lattice), std::move(initial), adaptive_rates(params), seed);
  return run_engine(eng, stop, seed);
}

Trajectory run_one_type(LatticePtr lattice, double lambda, std::span<const std::uint8_t> initial,
                        double horizon, std::uint64_t seed) {
  require(lambda >= 0 && std::isfinite(lambda), "run_one_type: lambda must be finite and >= 0");
  std::vector<double> x(initial.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    require(initial[i] <= 1, "run_one_type: configuration values must be 0 or 1");
    x[i] = initial[i];
  }
  TypeRates r{[lambda](double) { return lambda; }, nullptr, nullptr};
  Engine eng(std::move(lattice), std::move(x), r, seed);
  StopSpec s;
  s.horizon = horizon;
  return run_engine(eng, s, seed);
}

Trajectory run_two_type(LatticePtr lattice, double lambda, double lambda_prime,
                        std::span<const std::uint8_t> initial, double horizon, bool stop_on_resolution,
                        std::uint64_t seed) {
  require(lambda >= 0 && lambda_prime >= 0, "run_two_type: rates must be >= 0");
  std::vector<double> x(initial.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    require(initial[i] <= 2, "run_two_type: configuration values must be 0, 1 or 2");
    x[i] = initial[i];
  }
  TypeRates r{[lambda, lambda_prime](double v) { return v == 1.0 ? lambda : lambda_prime; }, nullptr, nullptr};
  Engine eng(std::move(lattice), std::move(x), r, seed);
  auto resolved = [](const Engine& e) { return e.count_of(1.0) == 0 || e.count_of(2.0) == 0; };
  if (stop_on_resolution && resolved(eng)) {
    Trajectory tr;
    tr.lattice = eng.lattice_ptr();
    tr.initial = eng.values();
    tr.seed = seed;
    tr.stop = StopReason::predicate;
    return tr;
  }
  StopSpec s;
  s.horizon = horizon;
  if (stop_on_resolution) s.predicate = [resolved](const Engine& e, const Event&) { return resolved(e); };
  return run_engine(eng, s, seed);
}

RateAudit audit_rates(const Lattice& lat, const std::vector<double>& x, double delta, const RateFunction& b) {
  RateAudit a;
  for (int u = 0; u < lat.size(); ++u) {
    if (x[u] == 0) continue;
    a.death += 1.0;
    auto [keep, mut] = birth_split(delta, b, x[u]);
    for (int v : lat.neighbors(u)) {
      if (x[v] != 0) continue;
      a.birth += x[u] * keep;
      a.mutant_birth += x[u] * mut;
    }
  }
  return a;
}

double transition_rate(const Lattice& lat, const std::vector<double>& x, const Event& ev, double delta,
                       const RateFunction& b) {
  if (ev.cause == Cause::death) return x[ev.site] != 0 ? 1.0 : 0.0;
  if (ev.parent < 0 || x[ev.parent] == 0 || x[ev.site] != 0) return 0.0;
  auto nb = lat.neighbors(ev.parent);
  if (std::find(nb.begin(), nb.end(), ev.site) == nb.end()) return 0.0;
  double parent = x[ev.parent];
  auto [keep, mut] = birth_split(delta, b, parent);
  if (ev.cause == Cause::birth) return ev.new_value == parent ? parent * keep : 0.0;
  return ev.new_value != parent ? parent * mut : 0.0;
}

void write_trajectory_csv(const Trajectory& traj, std::ostream& out) {
  CsvWriter w(out);
  w.row({"time", "site_index", "old", "new", "cause", "parent_site"});
  for (const auto& e : traj.events) {
    w.cell(e.time).cell(e.site).cell(e.old_value).cell(e.new_value).cell(cause_name(e.cause)).cell(e.parent);
    w.end_row();
  }
}

}  // namespace acp
