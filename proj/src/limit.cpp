#include "acp/limit.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <ostream>
#include <sstream>

#include "acp/csv.hpp"
#include "acp/errors.hpp"
#include "acp/parallel.hpp"
#include "acp/rng.hpp"

namespace acp {

namespace {

std::string num(double x) { return fmt_double(x); }

double interp(const std::vector<std::pair<double, double>>& pts, double x, bool& ok) {
  ok = false;
  if (pts.empty() || x < pts.front().first || x > pts.back().first) return 0.0;
  auto it = std::lower_bound(pts.begin(), pts.end(), x, [](const auto& p, double v) { return p.first < v; });
  ok = true;
  if (it->first == x) return it->second;
  auto lo = std::prev(it);
  double w = (x - lo->first) / (it->first - lo->first);
  return lo->second + w * (it->second - lo->second);
}

}  // namespace

RProvider r_table(std::map<double, double> table, bool interpolate) {
  for (auto [l, r] : table) require(r > 0 && r <= 1, "r_table: R(" + num(l) + ") outside (0,1]");
  std::vector<std::pair<double, double>> pts(table.begin(), table.end());
  return [pts, interpolate](double lambda) {
    bool ok = false;
    double v = 0.0;
    if (interpolate) {
      v = interp(pts, lambda, ok);
    } else {
      auto it = std::lower_bound(pts.begin(), pts.end(), lambda, [](const auto& p, double x) { return p.first < x; });
      if (it != pts.end() && it->first == lambda) ok = true, v = it->second;
    }
    if (!ok) throw ValidationError("R provider has no value for lambda=" + num(lambda));
    return v;
  };
}

SProvider s_table(std::map<std::pair<double, double>, double> table, bool interpolate) {
  for (auto [k, s] : table)
    require(s >= 0 && s <= 1, "s_table: S(" + num(k.first) + "," + num(k.second) + ") outside [0,1]");
  return [table, interpolate](double l, double lp) {
    auto it = table.find({l, lp});
    if (it != table.end()) return it->second;
    if (interpolate) {
      double inc = lp - l;
      std::vector<std::pair<double, double>> pts;
      for (auto [k, s] : table)
        if (std::abs((k.second - k.first) - inc) < 1e-9) pts.emplace_back(k.first, s);
      std::sort(pts.begin(), pts.end());
      bool ok = false;
      double v = interp(pts, l, ok);
      if (ok) return v;
    }
    throw ValidationError("S provider has no value for (lambda, lambda')=(" + num(l) + "," + num(lp) + ")");
  };
}

SProvider s_constant(double s) {
  require(s >= 0 && s <= 1, "s_constant: value outside [0,1]");
  return [s](double, double) { return s; };
}

double LimitParams::rate(double lambda) const {
  double r = R(lambda);
  if (!(r > 0 && r <= 1)) throw ValidationError("R(" + num(lambda) + ") outside (0,1]");
  return b(lambda) * r;
}

double LimitParams::accept(double lambda, double lambda_prime) const {
  if (lambda_prime <= lambda) return 0.0;
  double s = S(lambda, lambda_prime);
  if (!(s >= 0 && s <= 1)) throw ValidationError("S(" + num(lambda) + "," + num(lambda_prime) + ") outside [0,1]");
  return s;
}

void LimitParams::validate() const {
  require(lambda0 > 0, "limit: lambda0 must be positive");
  require(static_cast<bool>(R), "limit: R provider missing");
  require(static_cast<bool>(S), "limit: S provider missing");
}

LimitSample sample_limit_path(const LimitParams& p, double horizon, std::uint64_t seed, std::int64_t max_attempts) {
  p.validate();
  require(horizon >= 0, "sample_limit_path: horizon must be >= 0");
  Rng rng(seed);
  LimitSample out;
  out.path.initial = p.lambda0;
  out.path.horizon = horizon;
  double t = 0.0, lam = p.lambda0;
  while (max_attempts < 0 || static_cast<std::int64_t>(out.attempts.size()) < max_attempts) {
    double rate = p.rate(lam);
    if (!(rate > 0)) break;
    double s = exponential(rng, rate);
    if (t + s > horizon) break;
    t += s;
    double prop = p.K.sample(lam, rng);
    double a = p.accept(lam, prop);
    bool acc = a >= 1 || (a > 0 && uniform01(rng) < a);
    out.attempts.push_back({t, s, lam, prop, acc, acc ? prop : lam});
    if (acc) {
      out.path.jumps.push_back({t, prop, false});
      lam = prop;
    }
  }
  return out;
}

std::vector<LimitSample> sample_limit_paths(const LimitParams& p, double horizon, std::int64_t n, std::uint64_t seed,
                                            int parallel, std::int64_t max_attempts) {
  return run_trials(n, parallel, [&](std::int64_t i) {
    return sample_limit_path(p, horizon, seed_for(seed, "limit-path", i), max_attempts);
  });
}

std::vector<std::pair<double, double>> jump_kernel(const LimitParams& p, double lambda) {
  if (!p.K.discrete())
    throw DomainError("jump_kernel: exact evaluation needs a discrete kernel; use the Monte Carlo mode");
  std::vector<std::pair<double, double>> out;
  double stay = 0.0;
  for (auto [v, m] : p.K.support(lambda)) {
    double s = p.accept(lambda, v);
    if (m * s > 0) out.emplace_back(v, m * s);
    stay += m * (1 - s);
  }
  if (stay > 0) out.emplace_back(lambda, stay);
  return out;
}

void FddSpec::validate() const {
  require(!times.empty(), "FddSpec: k must be >= 1");
  require(times.size() == g.size(), "FddSpec: one test function per time");
  for (double t : times) require(t > 0, "FddSpec: times must be positive");
  for (const auto& f : g) require(static_cast<bool>(f), "FddSpec: empty test function");
}

namespace {

double fdd_rec(const LimitParams& p, const FddSpec& spec, std::size_t j, double lam) {
  if (j == spec.times.size()) return 1.0;
  double hold = -std::expm1(-p.rate(lam) * spec.times[j]);
  if (hold == 0) return 0.0;
  double s = 0.0;
  for (auto [a, m] : jump_kernel(p, lam)) {
    double gv = spec.g[j](a);
    if (gv != 0) s += m * gv * fdd_rec(p, spec, j + 1, a);
  }
  return hold * s;
}

double fdd_value(const LimitSample& smp, const FddSpec& spec) {
  if (smp.attempts.size() < spec.times.size()) return 0.0;
  double v = 1.0;
  for (std::size_t j = 0; j < spec.times.size(); ++j) {
    const auto& a = smp.attempts[j];
    if (a.sigma > spec.times[j]) return 0.0;
    v *= spec.g[j](a.value_after);
  }
  return v;
}

}  // namespace

double fdd_weights(const LimitParams& p, const FddSpec& spec) {
  p.validate();
  spec.validate();
  if (!p.K.discrete())
    throw DomainError("fdd_weights: exact mode needs a discrete kernel; use fdd_weights_mc for continuous kernels");
  return fdd_rec(p, spec, 0, p.lambda0);
}

EstimatorResult fdd_empirical(const std::vector<LimitSample>& samples, const FddSpec& spec) {
  spec.validate();
  MeanAccumulator acc;
  for (const auto& s : samples) acc.add(fdd_value(s, spec));
  return acc.result();
}

EstimatorResult fdd_weights_mc(const LimitParams& p, const FddSpec& spec, std::int64_t paths, std::uint64_t seed,
                               int parallel) {
  spec.validate();
  require(paths >= 1, "fdd_weights_mc: need at least one path");
  double h = 0.0;
  for (double t : spec.times) h += t;
  return fdd_empirical(sample_limit_paths(p, h, paths, seed, parallel), spec);
}

NonexplosionReport check_nonexplosive(const LimitParams& p, double horizon, std::int64_t trials, std::uint64_t seed,
                                      int parallel) {
  require(horizon > 0, "check_nonexplosive: horizon must be positive");
  require(trials >= 2, "check_nonexplosive: need at least two trials");
  NonexplosionReport rep;
  rep.horizons = {horizon / 4, horizon / 2, horizon};
  auto counts = run_trials(trials, parallel, [&](std::int64_t i) {
    auto s = sample_limit_path(p, horizon, seed_for(seed, "nonexplosion", i));
    std::array<std::int64_t, 3> c{};
    for (const auto& j : s.path.jumps)
      for (int h = 0; h < 3; ++h) c[h] += j.time <= rep.horizons[h];
    return c;
  });
  std::array<MeanAccumulator, 3> m;
  MeanAccumulator d1, d2;
  std::vector<double> full;
  for (const auto& c : counts) {
    for (int h = 0; h < 3; ++h) m[h].add(static_cast<double>(c[h]));
    d1.add(static_cast<double>(c[1] - 2 * c[0]));
    d2.add(static_cast<double>(c[2] - 2 * c[1]));
    full.push_back(static_cast<double>(c[2]));
    rep.max_jumps = std::max(rep.max_jumps, c[2]);
  }
  for (auto& a : m) rep.mean_jumps.push_back(a.result());
  std::sort(full.begin(), full.end());
  auto q = [&](double u) { return full[std::min(full.size() - 1, static_cast<std::size_t>(u * full.size()))]; };
  rep.q50 = q(0.5), rep.q90 = q(0.9), rep.q99 = q(0.99);
  bool g1 = d1.mean() > 3 * d1.se() && d1.mean() > 0;
  bool g2 = d2.mean() > 3 * d2.se() && d2.mean() > 0;
  rep.flagged = g1 && g2;
  std::ostringstream msg;
  msg << "mean jumps " << num(m[0].mean()) << ", " << num(m[1].mean()) << ", " << num(m[2].mean())
      << (rep.flagged ? "; superlinear growth across doubled horizons" : "; no superlinear growth detected");
  rep.message = msg.str();
  return rep;
}

MicroEnsemble micro_ensemble(double lambda0, const MutationKernel& K, const std::vector<RoundsResult>& runs) {
  MicroEnsemble m;
  m.lambda0 = lambda0;
  m.K = K;
  for (const auto& r : runs) {
    m.paths.push_back(r.path);
    if (!r.rounds.empty() && r.rounds.front().e_flag) m.first.emplace_back(r.rounds.front().sigma, r.rounds.front().Lambda);
  }
  return m;
}

LimitEnsemble limit_ensemble(const LimitParams& p, const std::vector<LimitSample>& samples) {
  LimitEnsemble l;
  l.lambda0 = p.lambda0;
  l.K = p.K;
  for (const auto& s : samples) {
    l.paths.push_back(s.path);
    if (!s.attempts.empty()) l.first.emplace_back(s.attempts.front().sigma, s.attempts.front().value_after);
  }
  return l;
}

const ComparisonRow& ComparisonReport::row(const std::string& name) const {
  for (const auto& r : rows)
    if (r.statistic == name) return r;
  throw ValidationError("comparison report has no row " + name);
}

namespace {

template <class T>
using Stat = std::function<double(const std::vector<T>&, const std::vector<T>&)>;

template <class T>
double permutation_band(const std::vector<T>& xs, const std::vector<T>& ys, const Stat<T>& stat, int reps, double level,
                        Rng& rng) {
  if (reps <= 0) return std::numeric_limits<double>::infinity();
  std::vector<T> pool(xs);
  pool.insert(pool.end(), ys.begin(), ys.end());
  std::vector<double> vals;
  for (int b = 0; b < reps; ++b) {
    std::shuffle(pool.begin(), pool.end(), rng);
    std::vector<T> a(pool.begin(), pool.begin() + xs.size()), c(pool.begin() + xs.size(), pool.end());
    vals.push_back(stat(a, c));
  }
  std::sort(vals.begin(), vals.end());
  auto i = std::min(vals.size() - 1, static_cast<std::size_t>(std::ceil(level * vals.size())) - 1);
  return vals[i];
}

std::map<double, double> histogram(const std::vector<double>& xs) {
  std::map<double, double> h;
  for (double x : xs) h[x] += 1.0 / static_cast<double>(xs.size());
  return h;
}

double tv_samples(const std::vector<double>& a, const std::vector<double>& b) {
  return total_variation(histogram(a), histogram(b));
}

template <class T>
std::vector<T> subsample(std::vector<T> xs, std::size_t cap, Rng& rng) {
  if (xs.size() <= cap) return xs;
  std::shuffle(xs.begin(), xs.end(), rng);
  xs.resize(cap);
  return xs;
}

}  // namespace

ComparisonReport compare_paths(const MicroEnsemble& micro, const LimitEnsemble& limit, const CompareOptions& opt) {
  require(micro.lambda0 == limit.lambda0, "compare_paths: lambda0 differs between ensembles");
  require(micro.K == limit.K, "compare_paths: kernels differ between ensembles");
  require(opt.level > 0 && opt.level < 1, "compare_paths: level must lie in (0,1)");
  require(!micro.first.empty() && !limit.first.empty(), "compare_paths: empty first-round sample");
  ComparisonReport rep;
  Rng rng(seed_for(opt.seed, "compare"));
  auto n1 = static_cast<std::int64_t>(micro.first.size()), n2 = static_cast<std::int64_t>(limit.first.size());
  std::vector<double> s1, s2, l1, l2;
  for (auto [s, l] : micro.first) s1.push_back(s), l1.push_back(l);
  for (auto [s, l] : limit.first) s2.push_back(s), l2.push_back(l);

  Stat<double> ks = [](const auto& a, const auto& b) { return ks_two_sample(a, b); };
  rep.rows.push_back({"ks_sigma1", ks(s1, s2), permutation_band(s1, s2, ks, opt.bootstrap, opt.level, rng), n1, n2,
                      opt.seed});
  if (micro.K.discrete()) {
    Stat<double> tv = tv_samples;
    rep.rows.push_back({"tv_lambda1", tv(l1, l2), permutation_band(l1, l2, tv, opt.bootstrap, opt.level, rng), n1,
                        n2, opt.seed});
  }
  std::vector<std::vector<double>> j1, j2;
  for (auto [s, l] : micro.first) j1.push_back({s, l});
  for (auto [s, l] : limit.first) j2.push_back({s, l});
  j1 = subsample(std::move(j1), opt.energy_cap, rng);
  j2 = subsample(std::move(j2), opt.energy_cap, rng);
  Stat<std::vector<double>> en = [](const auto& a, const auto& b) { return energy_statistic(a, b); };
  rep.rows.push_back({"energy_joint", en(j1, j2), permutation_band(j1, j2, en, opt.bootstrap, opt.level, rng),
                      static_cast<std::int64_t>(j1.size()), static_cast<std::int64_t>(j2.size()), opt.seed});
  for (double t : opt.times) {
    std::vector<double> a, b;
    for (const auto& p : micro.paths)
      if (p.horizon >= t) a.push_back(p.value_at(t));
    for (const auto& p : limit.paths)
      if (p.horizon >= t) b.push_back(p.value_at(t));
    if (a.empty() || b.empty()) continue;
    Stat<double> tv = micro.K.discrete() ? Stat<double>(tv_samples) : ks;
    rep.rows.push_back({"marginal_t=" + num(t), tv(a, b), permutation_band(a, b, tv, opt.bootstrap, opt.level, rng),
                        static_cast<std::int64_t>(a.size()), static_cast<std::int64_t>(b.size()), opt.seed});
  }
  return rep;
}

void write_comparison_csv(const ComparisonReport& rep, std::ostream& out) {
  CsvWriter w(out);
  w.row({"statistic", "value", "band", "within_band", "n_micro", "n_limit", "seed"});
  for (const auto& r : rep.rows) {
    w.cell(r.statistic).cell(r.value).cell(r.band).cell(r.within());
    w.cell(static_cast<long long>(r.n_micro)).cell(static_cast<long long>(r.n_limit));
    w.cell(static_cast<unsigned long long>(r.seed));
    w.end_row();
  }
}

}  // namespace acp
