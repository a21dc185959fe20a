#include "acp/observables.hpp"

#include <algorithm>
#include <cmath>

#include "acp/errors.hpp"
#include "acp/parallel.hpp"

namespace acp {

namespace {

TypeRates one_type_rates(double lambda) { return {[lambda](double) { return lambda; }, nullptr, nullptr}; }

std::vector<double> full_config(const Lattice& lat) { return std::vector<double>(lat.size(), 1.0); }

// Advance to `limit`, calling on_event for every event; false if the cap was hit.
template <class F>
bool advance(Engine& eng, double limit, std::int64_t cap, F on_event) {
  while (auto ev = eng.step(limit)) {
    on_event(*ev);
    if (eng.event_count() >= cap) return false;
  }
  return true;
}

}  // namespace

// ---------------------------------------------------------------- R(lambda)

EstimatorResult estimate_R(double lambda, const TorusSpec& spec, double warmup, double window, std::int64_t trials,
                           std::uint64_t seed, const EstimateROptions& opt) {
  require(lambda > 0, "estimate_R: lambda must be positive");
  require(warmup > 0 && window > 0, "estimate_R: warmup and window must be positive");
  require(trials > 0, "estimate_R: trials must be positive");
  auto lat = Lattice::torus(spec);
  struct Trial {
    double value = 0.0;
    bool censored = false;
    bool capped = false;
  };
  auto res = run_trials(trials, opt.parallel, [&](std::int64_t i) {
    Trial tr;
    Engine eng(lat, full_config(*lat), one_type_rates(lambda), seed_for(seed, "estimate-R", i));
    if (!advance(eng, warmup, opt.event_cap, [](const Event&) {})) {
      tr.capped = true;
      return tr;
    }
    std::int64_t flips = 0;
    if (!advance(eng, warmup + window, opt.event_cap, [&](const Event& e) { flips += e.cause != Cause::death; })) {
      tr.capped = true;
      return tr;
    }
    tr.censored = eng.absorbed();
    tr.value = static_cast<double>(flips) / (static_cast<double>(lat->size()) * window);
    return tr;
  });
  MeanAccumulator acc;
  std::int64_t censored = 0, capped = 0;
  for (const auto& t : res) {
    if (t.capped) {
      ++capped;
      continue;
    }
    if (t.censored) ++censored;
    if (t.censored && opt.condition_on_survival) continue;
    acc.add(t.value);
  }
  if (acc.count() == 0) throw EstimationError("estimate_R: every trial was censored or capped");
  auto r = acc.result();
  r.diagnostics["trials"] = static_cast<double>(trials);
  r.diagnostics["censored"] = static_cast<double>(censored);
  r.diagnostics["censored_fraction"] = static_cast<double>(censored) / static_cast<double>(trials);
  r.diagnostics["capped"] = static_cast<double>(capped);
  return r;
}

// ---------------------------------------------------------------- jump sums

static void check_one_type(const Trajectory& traj) {
  require(traj.lattice != nullptr, "trajectory has no lattice");
  for (double v : traj.initial) require(v == 0 || v == 1, "one-type trajectory expected");
}

double jump_sum(const Trajectory& traj, const LocalFunction& f) {
  check_one_type(traj);
  require(f.d() == traj.lattice->dim(), "jump_sum: dimension mismatch");
  PatternMap pm(traj.lattice, f.ell());
  std::vector<std::uint8_t> occ(traj.initial.begin(), traj.initial.end());
  double s = 0.0;
  for (const auto& e : traj.events) {
    if (e.old_value == 0 && e.new_value != 0) s += f.at(pm, occ, e.site);
    occ[e.site] = e.new_value != 0;
  }
  return s;
}

double compensator_integral(const Trajectory& traj, const LocalFunction& f, double lambda) {
  check_one_type(traj);
  require(f.d() == traj.lattice->dim(), "compensator_integral: dimension mismatch");
  const auto& lat = traj.lattice;
  PatternMap pf(lat, f.ell());
  PatternMap pq(lat, 1);
  PatternMap reach(lat, std::max(1, f.ell()));
  auto q = LocalFunction::q(lat->dim());
  std::vector<std::uint8_t> occ(traj.initial.begin(), traj.initial.end());
  int n = lat->size();
  std::vector<double> g(n);
  auto value = [&](int u) {
    double qu = q.at(pq, occ, u);
    return qu == 0 ? 0.0 : qu * f.at(pf, occ, u);
  };
  double total = 0.0;
  for (int u = 0; u < n; ++u) total += g[u] = value(u);
  double integral = 0.0, t = 0.0;
  for (const auto& e : traj.events) {
    integral += total * (e.time - t);
    t = e.time;
    occ[e.site] = e.new_value != 0;
    for (int c = 0; c < reach.cells(); ++c) {
      int u = reach.site(e.site, c);
      double nv = value(u);
      total += nv - g[u];
      g[u] = nv;
    }
  }
  integral += total * (traj.final_time - t);
  return lambda * integral;
}

// ---------------------------------------------------------------- landscapes

namespace {

template <class T, class Extract>
std::vector<std::vector<T>> collect_births(double lambda, const TorusSpec& spec, double burn_in, std::int64_t samples,
                                           std::uint64_t seed, const LandscapeOptions& opt, const char* label,
                                           Extract extract, std::int64_t& died) {
  require(lambda > 0, "landscape sampler: lambda must be positive");
  require(burn_in >= 0, "landscape sampler: burn-in must be >= 0");
  require(samples > 0, "landscape sampler: samples must be positive");
  int runs = std::max<std::int64_t>(1, std::min<std::int64_t>(opt.runs, samples));
  auto lat = Lattice::torus(spec);
  auto per_run = run_trials(runs, opt.parallel, [&](std::int64_t r) {
    std::int64_t want = samples / runs + (r < samples % runs ? 1 : 0);
    std::vector<T> out;
    out.reserve(want);
    Engine eng(lat, full_config(*lat), one_type_rates(lambda), seed_for(seed, label, r));
    std::vector<std::uint8_t> occ(lat->size(), 1);
    auto track = [&](const Event& e) { occ[e.site] = e.new_value != 0; };
    if (!advance(eng, burn_in, opt.event_cap, track)) return out;
    while (static_cast<std::int64_t>(out.size()) < want && eng.event_count() < opt.event_cap) {
      auto ev = eng.step(std::numeric_limits<double>::infinity());
      if (!ev) break;
      track(*ev);
      if (ev->cause != Cause::death) out.push_back(extract(occ, ev->site));
    }
    return out;
  });
  died = 0;
  for (std::int64_t r = 0; r < runs; ++r)
    if (static_cast<std::int64_t>(per_run[r].size()) < samples / runs) ++died;
  return per_run;
}

}  // namespace

std::map<std::uint64_t, double> LandscapeSample::frequencies() const {
  std::map<std::uint64_t, double> f;
  for (auto [k, c] : counts) f[k] = static_cast<double>(c) / static_cast<double>(total);
  return f;
}

LandscapeSample sample_landscape_at_birth(double lambda, const TorusSpec& spec, int ell, double burn_in,
                                          std::int64_t samples, std::uint64_t seed, const LandscapeOptions& opt) {
  spec.validate();
  require(ell >= 0 && 2 * ell + 1 <= spec.N, "sample_landscape_at_birth: need ell < N/2");
  auto lat = Lattice::torus(spec);
  PatternMap pm(lat, ell);
  LandscapeSample out;
  out.d = spec.d;
  out.ell = ell;
  auto runs = collect_births<std::uint64_t>(
      lambda, spec, burn_in, samples, seed, opt, "landscape",
      [&](const std::vector<std::uint8_t>& occ, int site) { return pm.landscape_code(occ, site); }, out.died_runs);
  for (const auto& r : runs)
    for (auto c : r) {
      ++out.counts[c];
      ++out.total;
    }
  if (out.total == 0) throw EstimationError("sample_landscape_at_birth: no births recorded");
  return out;
}

std::vector<std::vector<std::vector<int>>> sample_birth_supports(double lambda, const TorusSpec& spec, int radius,
                                                                 double burn_in, std::int64_t samples,
                                                                 std::uint64_t seed, const LandscapeOptions& opt) {
  spec.validate();
  require(radius >= 0 && 2 * radius + 1 <= spec.N, "sample_birth_supports: need radius < N/2");
  auto lat = Lattice::torus(spec);
  auto offs = box_offsets(spec.d, radius);
  std::int64_t died = 0;
  auto runs = collect_births<std::vector<std::vector<int>>>(
      lambda, spec, burn_in, samples, seed, opt, "supports",
      [&](const std::vector<std::uint8_t>& occ, int site) {
        std::vector<std::vector<int>> B;
        for (const auto& x : offs) {
          if (std::all_of(x.begin(), x.end(), [](int c) { return c == 0; })) continue;
          if (occ[*lat->offset(site, x)]) B.push_back(x);
        }
        return B;
      },
      died);
  std::vector<std::vector<std::vector<int>>> out;
  for (auto& r : runs)
    for (auto& b : r) out.push_back(std::move(b));
  if (out.empty()) throw EstimationError("sample_birth_supports: no births recorded");
  return out;
}

// ---------------------------------------------------------------- past-truncated

std::vector<std::uint8_t> past_truncated_configuration(double lambda, LatticePtr lattice, double lookback,
                                                       std::uint64_t seed) {
  require(lookback > 0, "past-truncated sampler: lookback must be positive");
  auto w = generate_window(lattice, lambda, std::nullopt, 0.0, lookback, seed);
  PathQuery q;
  q.from_set.resize(lattice->size());
  for (int i = 0; i < lattice->size(); ++i) q.from_set[i] = i;
  q.s = 0.0;
  q.t = lookback;
  return reachable_at(w, q);
}

PastTruncatedResult sample_stationary_past_truncated(double lambda, const TorusSpec& spec, double lookback,
                                                     std::int64_t samples, std::uint64_t seed,
                                                     const std::vector<LocalFunction>& gs, int parallel) {
  require(samples > 0, "past-truncated sampler: samples must be positive");
  auto lat = Lattice::torus(spec);
  std::vector<PatternMap> maps;
  for (const auto& g : gs) {
    require(g.d() == spec.d, "past-truncated sampler: dimension mismatch");
    maps.emplace_back(lat, g.ell());
  }
  auto per = run_trials(samples, parallel, [&](std::int64_t i) {
    auto eta = past_truncated_configuration(lambda, lat, lookback, seed_for(seed, "past-truncated", i));
    std::vector<double> v(gs.size() + 1, 0.0);
    double n = lat->size();
    for (int u = 0; u < lat->size(); ++u) {
      v[0] += eta[u] / n;
      for (std::size_t k = 0; k < gs.size(); ++k) v[k + 1] += gs[k].at(maps[k], eta, u) / n;
    }
    return v;
  });
  PastTruncatedResult out;
  out.samples = samples;
  std::vector<MeanAccumulator> acc(gs.size() + 1);
  for (const auto& v : per)
    for (std::size_t k = 0; k < v.size(); ++k) acc[k].add(v[k]);
  out.density = acc[0].result();
  for (std::size_t k = 0; k < gs.size(); ++k) out.averages.push_back(acc[k + 1].result());
  return out;
}

std::map<std::uint64_t, double> reweighted_landscape(double lambda, double R, const TorusSpec& spec, int ell,
                                                     double lookback, std::int64_t samples, std::uint64_t seed,
                                                     int parallel) {
  require(R > 0, "reweighted_landscape: R must be positive");
  require(samples > 0, "reweighted_landscape: samples must be positive");
  auto lat = Lattice::torus(spec);
  PatternMap pm(lat, ell);
  PatternMap pq(lat, 1);
  auto q = LocalFunction::q(spec.d);
  auto per = run_trials(samples, parallel, [&](std::int64_t i) {
    auto eta = past_truncated_configuration(lambda, lat, lookback, seed_for(seed, "reweighted", i));
    std::map<std::uint64_t, double> m;
    for (int u = 0; u < lat->size(); ++u) {
      double w = q.at(pq, eta, u);
      if (w > 0) m[pm.landscape_code(eta, u)] += lambda * w / R;
    }
    return m;
  });
  std::map<std::uint64_t, double> out;
  double norm = static_cast<double>(samples) * lat->size();
  for (const auto& m : per)
    for (auto [k, v] : m) out[k] += v / norm;
  return out;
}

// ---------------------------------------------------------------- S^box

EstimatorResult estimate_Sbox(double lambda, double lambda_prime, const std::vector<std::vector<int>>& B, int d, int r,
                              std::int64_t trials, std::uint64_t seed, const SboxOptions& opt) {
  require(lambda > 0 && lambda_prime > lambda, "estimate_Sbox: need lambda' > lambda > 0");
  require(r >= 0 && trials > 0, "estimate_Sbox: bad radius or trial count");
  auto lat = Lattice::box(d, r);
  std::vector<std::uint8_t> init(lat->size(), 0);
  int o = lat->origin();
  for (const auto& x : B) {
    require(static_cast<int>(x.size()) == d, "estimate_Sbox: offset has wrong dimension");
    for (int c : x) require(std::abs(c) <= r, "estimate_Sbox: B must lie in Q(o, r)");
    int s = lat->index(x);
    require(s != o, "estimate_Sbox: the origin must not belong to B");
    init[s] = 1;
  }
  init[o] = 2;
  double h = opt.horizon.value_or(std::sqrt(static_cast<double>(r)));
  require(h >= 0, "estimate_Sbox: horizon must be >= 0");
  auto alive = run_trials(trials, opt.parallel, [&](std::int64_t i) -> std::uint8_t {
    std::uint64_t s = seed_for(seed, "sbox", i);
    if (opt.method == SboxOptions::Method::window) {
      auto w = generate_window(lat, lambda, lambda_prime, 0.0, h, s);
      auto xi = init;
      for (const auto& ev : w.events()) apply_two_type(xi, ev);
      return std::find(xi.begin(), xi.end(), 2) != xi.end();
    }
    std::vector<double> x(init.begin(), init.end());
    TypeRates rates{[lambda, lambda_prime](double v) { return v == 1.0 ? lambda : lambda_prime; }, nullptr, nullptr};
    Engine eng(lat, std::move(x), rates, s);
    while (eng.step(h))
      if (eng.count_of(2.0) == 0) break;
    return eng.count_of(2.0) > 0;
  });
  std::int64_t k = 0;
  for (auto a : alive) k += a;
  auto res = proportion(k, trials);
  res.diagnostics["horizon"] = h;
  return res;
}

EstimatorResult estimate_acceptance(double lambda, double lambda_prime, const TorusSpec& spec, int r, int ell,
                                    std::int64_t outer, std::int64_t inner, std::uint64_t seed,
                                    const AcceptanceOptions& opt) {
  require(lambda > 0 && lambda_prime > 0, "estimate_acceptance: rates must be positive");
  require(lambda_prime != lambda, "estimate_acceptance: lambda' must differ from lambda");
  require(outer > 0 && inner > 0, "estimate_acceptance: sample sizes must be positive");
  if (lambda_prime < lambda) {
    EstimatorResult z{0.0, 0.0, outer, {}};
    z.diagnostics["exact"] = 1.0;
    return z;
  }
  require(ell >= 0, "estimate_acceptance: ell must be >= 0");
  LandscapeOptions lo;
  lo.runs = opt.landscape_runs > 0 ? opt.landscape_runs : static_cast<int>(outer);
  lo.parallel = opt.parallel;
  auto supports = sample_birth_supports(lambda, spec, std::max(r, ell), opt.burn_in, outer,
                                        seed_for(seed, "acceptance", "landscapes"), lo);
  MeanAccumulator acc, occ_window;
  SboxOptions so;
  so.horizon = opt.horizon;
  for (std::size_t i = 0; i < supports.size(); ++i) {
    std::vector<std::vector<int>> B;
    int in_window = 0;
    for (const auto& x : supports[i]) {
      int m = 0;
      for (int c : x) m = std::max(m, std::abs(c));
      if (m <= r) B.push_back(x);
      if (m <= ell) ++in_window;
    }
    occ_window.add(in_window);
    acc.add(estimate_Sbox(lambda, lambda_prime, B, spec.d, r, inner, seed_for(seed, "acceptance", "inner", i), so)
                .estimate);
  }
  auto res = acc.result();
  res.diagnostics["outer"] = static_cast<double>(acc.count());
  res.diagnostics["inner"] = static_cast<double>(inner);
  res.diagnostics["mean_occupied_in_window"] = occ_window.mean();
  return res;
}

EstimatorResult rejection_mass(double lambda, const MutationKernel& K, const AcceptanceProvider& S,
                               std::int64_t quadrature_samples, std::uint64_t seed) {
  require(lambda > 0, "rejection_mass: lambda must be positive");
  if (K.discrete()) {
    double m = 0.0, var = 0.0;
    for (auto [v, w] : K.support(lambda)) {
      if (v <= lambda) {
        m += w;
        continue;
      }
      auto s = S(lambda, v);
      m += w * (1.0 - s.estimate);
      var += w * w * s.se * s.se;
    }
    EstimatorResult r{m, std::sqrt(var), 1, {}};
    r.diagnostics["closed_form"] = 1.0;
    return r;
  }
  require(quadrature_samples > 1, "rejection_mass: need quadrature samples");
  Rng rng(seed_for(seed, "rejection-mass"));
  MeanAccumulator acc;
  for (std::int64_t i = 0; i < quadrature_samples; ++i) {
    double v = K.sample(lambda, rng);
    acc.add(v <= lambda ? 1.0 : 1.0 - S(lambda, v).estimate);
  }
  return acc.result();
}

// ---------------------------------------------------------------- good boxes

int default_sub_radius(int r) {
  return std::max(1, static_cast<int>(std::floor(std::pow(static_cast<double>(std::max(r, 1)), 1.0 / 24.0))));
}

bool detect_good_box(const TorusSpec& spec, const std::vector<std::uint8_t>& xi, const TorusBox& box,
                     std::optional<int> sub_radius) {
  auto lat = Lattice::torus(spec);
  require(static_cast<int>(xi.size()) == lat->size(), "detect_good_box: configuration has wrong size");
  auto sites = box_sites(spec, box);
  int c = static_cast<int>(site_index(spec, box.center));
  for (const auto& s : sites)
    if (xi[site_index(spec, s)] == 1) return false;
  int rho = sub_radius.value_or(default_sub_radius(box.radius));
  require(rho >= 0, "detect_good_box: sub-box radius must be >= 0");
  int inner = std::max(0, box.radius - rho);
  int sub = std::min(rho, box.radius);
  auto sub_offs = box_offsets(spec.d, sub);
  for (const auto& x : box_offsets(spec.d, inner)) {
    int center = *lat->offset(c, x);
    bool hit = false;
    for (const auto& y : sub_offs)
      if (xi[*lat->offset(center, y)] == 2) {
        hit = true;
        break;
      }
    if (!hit) return false;
  }
  return true;
}

// ---------------------------------------------------------------- extinction

ExtinctionReport estimate_extinction_time(double lambda, int d, int radius, std::int64_t trials, std::uint64_t seed,
                                          double horizon_cap, std::vector<double> probe_times, int parallel) {
  require(lambda >= 0, "estimate_extinction_time: lambda must be >= 0");
  require(trials > 0 && horizon_cap > 0, "estimate_extinction_time: bad trial count or cap");
  auto lat = Lattice::box(d, radius);
  auto taus = run_trials(trials, parallel, [&](std::int64_t i) {
    Engine eng(lat, full_config(*lat), one_type_rates(lambda), seed_for(seed, "extinction", i));
    double last = 0.0;
    while (auto ev = eng.step(horizon_cap)) last = ev->time;
    return eng.absorbed() ? last : std::numeric_limits<double>::infinity();
  });
  ExtinctionReport rep;
  MeanAccumulator acc;
  for (double t : taus) {
    if (std::isinf(t)) ++rep.capped;
    else acc.add(t);
  }
  if (acc.count() == 0) return rep;
  rep.has_estimate = true;
  rep.tau = acc.result();
  rep.tau.diagnostics["capped"] = static_cast<double>(rep.capped);
  if (probe_times.empty()) probe_times.push_back(rep.tau.estimate / 2.0);
  double n = static_cast<double>(trials);
  for (double t : probe_times) {
    ProbeCheck pc;
    pc.t = t;
    double k = 0;
    for (double x : taus) k += x <= t;
    pc.frequency = k / n;
    double se_f = std::sqrt(pc.frequency * (1 - pc.frequency) / n);
    double tau = rep.tau.estimate;
    pc.bound = t / tau;
    double se_b = t * rep.tau.se / (tau * tau);
    pc.se = std::sqrt(se_f * se_f + se_b * se_b);
    pc.pass = pc.frequency <= pc.bound + 3.0 * pc.se;
    rep.checks.push_back(pc);
  }
  return rep;
}

// ---------------------------------------------------------------- density / coupling

std::vector<std::uint8_t> sparse_density_start(const Lattice& lat, int w) {
  std::vector<std::uint8_t> occ(lat.size(), 0);
  int step = 2 * w + 1;
  for (int i = 0; i < lat.size(); ++i) {
    auto c = lat.coords(i);
    occ[i] = std::all_of(c.begin(), c.end(), [step](int x) { return x % step == 0; });
  }
  auto win = box_offsets(lat.dim(), w);
  for (int x = 0; x < lat.size(); ++x) {
    bool hit = false;
    for (const auto& o : win) {
      auto y = lat.offset(x, o);
      if (y && occ[*y]) {
        hit = true;
        break;
      }
    }
    if (!hit) occ[x] = 1;
  }
  return occ;
}

DiagnosticsReport density_and_coupling_diagnostics(double lambda, const TorusSpec& spec, double horizon,
                                                   std::uint64_t seed, std::optional<int> window_radius,
                                                   std::optional<std::vector<std::uint8_t>> initial) {
  require(horizon >= 0, "diagnostics: horizon must be >= 0");
  auto lat = Lattice::torus(spec);
  DiagnosticsReport rep;
  rep.window_radius = window_radius.value_or(default_density_radius(spec.N));
  std::vector<std::uint8_t> full(lat->size(), 1);
  auto other = initial.value_or(sparse_density_start(*lat, rep.window_radius));
  require(static_cast<int>(other.size()) == lat->size(), "diagnostics: initial configuration has wrong size");
  DensityTracker dens(lat, rep.window_radius, full);
  auto w = generate_window(lat, lambda, std::nullopt, 0.0, horizon, seed);
  auto a = full;
  auto b = other;
  std::int64_t diff = 0;
  for (int i = 0; i < lat->size(); ++i) diff += a[i] != b[i];
  std::int64_t in = dens.in_class(), times = 1;
  if (diff == 0) {
    rep.coupled = true;
    rep.coupling_time = 0.0;
  }
  for (const auto& ev : w.events()) {
    int s = ev.channel == Channel::death ? ev.from : ev.to;
    bool before = a[s] != b[s];
    apply_one_type(a, ev, ArrowClasses::basic);
    apply_one_type(b, ev, ArrowClasses::basic);
    diff += static_cast<int>(a[s] != b[s]) - static_cast<int>(before);
    dens.set(s, a[s]);
    ++times;
    in += dens.in_class();
    if (!rep.coupled && diff == 0) {
      rep.coupled = true;
      rep.coupling_time = ev.time;
    }
  }
  rep.event_times = times;
  rep.density_fraction = static_cast<double>(in) / static_cast<double>(times);
  return rep;
}

std::vector<EstimatorResult> survival_sweep(const std::vector<double>& lambdas, const TorusSpec& spec, double horizon,
                                            std::int64_t trials, std::uint64_t seed, int parallel) {
  auto lat = Lattice::torus(spec);
  std::vector<EstimatorResult> out;
  for (std::size_t k = 0; k < lambdas.size(); ++k) {
    double lambda = lambdas[k];
    auto alive = run_trials(trials, parallel, [&](std::int64_t i) -> std::uint8_t {
      std::vector<double> x(lat->size(), 0.0);
      x[lat->origin()] = 1.0;
      Engine eng(lat, std::move(x), one_type_rates(lambda), seed_for(seed, "survival", k, i));
      while (eng.step(horizon)) {
      }
      return !eng.absorbed();
    });
    std::int64_t s = 0;
    for (auto v : alive) s += v;
    auto r = proportion(s, trials);
    r.diagnostics["lambda"] = lambda;
    out.push_back(r);
  }
  return out;
}

}  // namespace acp
