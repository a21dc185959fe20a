#include "acp/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include "acp/csv.hpp"
#include "acp/engine.hpp"
#include "acp/errors.hpp"
#include "acp/evolution.hpp"
#include "acp/graphical.hpp"
#include "acp/limit.hpp"
#include "acp/observables.hpp"
#include "acp/oracle.hpp"
#include "acp/parallel.hpp"
#include "acp/rng.hpp"
#include "acp/trait.hpp"

namespace acp {

using json = nlohmann::json;
namespace fs = std::filesystem;

std::atomic<bool>& interrupt_flag() {
  static std::atomic<bool> flag{false};
  return flag;
}

json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config parse error: ") + e.what());
  }
}

void apply_override(json& config, const std::string& assignment) {
  auto eq = assignment.find('=');
  require(eq != std::string::npos && eq > 0, "override must look like KEY=VALUE: " + assignment);
  std::string key = assignment.substr(0, eq), raw = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;
  }
  json* node = &config;
  std::stringstream ss(key);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    require(!parts[i].empty(), "override has an empty path segment: " + key);
    if (!node->contains(parts[i])) (*node)[parts[i]] = json::object();
    node = &(*node)[parts[i]];
    require(node->is_object(), "override path crosses a non-object: " + key);
  }
  (*node)[parts.back()] = value;
}

std::string config_hash(const json& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : config.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

namespace {

const std::set<std::string> kKinds = {"simulate-adaptive", "rounds",       "estimate-r", "landscape",
                                      "estimate-acceptance", "sbox",       "limit-sample", "compare",
                                      "oracle-check",      "diagnostics"};

const std::map<std::string, std::set<std::string>> kKeys = {
    {"", {"kind", "model", "run", "output"}},
    {"model",
     {"d", "N", "N_list", "lambda0", "lambda", "lambda_prime", "lambdas", "delta", "schedule", "kernel", "rate",
      "t_N", "density_radius", "landscape_ell", "ell", "r", "B", "R_table", "S_table", "S_constant"}},
    {"model.schedule", {"c", "gamma", "eps0", "a", "waive"}},
    {"model.kernel", {"type", "h_up", "h_down", "p", "floor", "sigma"}},
    {"model.rate", {"type", "c", "c_max"}},
    {"run",
     {"trials", "horizon", "seed", "parallel", "event_cap", "rounds", "warmup", "window", "burn_in", "samples",
      "inner", "outer", "t", "times", "bootstrap", "level", "method", "limit_trials"}},
    {"output", {"dir", "window_dump"}},
};

void check_keys(const json& node, const std::string& path) {
  require(node.is_object(), "config section '" + (path.empty() ? std::string("root") : path) + "' must be an object");
  const auto& allowed = kKeys.at(path);
  for (auto& [k, v] : node.items()) {
    std::string full = path.empty() ? k : path + "." + k;
    if (!allowed.count(k)) throw ValidationError("unknown config key '" + full + "'");
    if (kKeys.count(full)) check_keys(v, full);
  }
}

// Reads config values with defaults and records every effective value.
class Resolver {
 public:
  Resolver(const json& cfg, json& resolved) : cfg_(cfg), res_(resolved) {}

  template <class T>
  T get(const std::string& block, const std::string& key, const T& def) {
    const json* node = find(block);
    T v = def;
    if (node && node->contains(key)) {
      try {
        v = (*node)[key].get<T>();
      } catch (const json::exception&) {
        throw ValidationError("config key '" + block + "." + key + "' has the wrong type");
      }
    }
    slot(block)[key] = v;
    return v;
  }
  template <class T>
  std::optional<T> opt(const std::string& block, const std::string& key) {
    const json* node = find(block);
    if (!node || !node->contains(key)) return std::nullopt;
    return get<T>(block, key, T{});
  }
  bool has(const std::string& block, const std::string& key) {
    const json* node = find(block);
    return node && node->contains(key);
  }
  void set(const std::string& block, const std::string& key, const json& v) { slot(block)[key] = v; }

 private:
  const json* find(const std::string& block) const {
    const json* n = &cfg_;
    std::stringstream ss(block);
    std::string p;
    while (std::getline(ss, p, '.')) {
      if (!n->contains(p)) return nullptr;
      n = &(*n)[p];
    }
    return n;
  }
  json& slot(const std::string& block) {
    json* n = &res_;
    std::stringstream ss(block);
    std::string p;
    while (std::getline(ss, p, '.')) n = &(*n)[p];
    return *n;
  }
  const json& cfg_;
  json& res_;
};

struct Ctx {
  Resolver& r;
  std::uint64_t seed;
  int parallel;
  fs::path dir;
  json& meta;
  std::vector<std::string>& files;
  bool capped = false;
  bool truncated = false;

  std::ofstream open(const std::string& name) {
    files.push_back(name);
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw ValidationError("cannot write " + (dir / name).string());
    return f;
  }
};

MutationKernel read_kernel(Resolver& r) {
  auto type = r.get<std::string>("model.kernel", "type", "two_point");
  if (type == "two_point")
    return MutationKernel::two_point(r.get("model.kernel", "h_up", 1.0), r.get("model.kernel", "h_down", 0.5),
                                     r.get("model.kernel", "p", 0.5), r.get("model.kernel", "floor", 1e-3));
  if (type == "gaussian_increment") return MutationKernel::gaussian_increment(r.get("model.kernel", "sigma", 0.5));
  if (type == "lognormal") return MutationKernel::lognormal(r.get("model.kernel", "sigma", 0.5));
  throw ValidationError("unknown kernel type '" + type + "'");
}

RateFunction read_rate(Resolver& r) {
  auto type = r.get<std::string>("model.rate", "type", "constant");
  if (type == "constant") return RateFunction::constant(r.get("model.rate", "c", 1.0));
  if (type == "linear_capped")
    return RateFunction::linear_capped(r.get("model.rate", "c", 1.0), r.get("model.rate", "c_max", 10.0));
  throw ValidationError("unknown rate type '" + type + "'");
}

ScalingSchedule read_schedule(Resolver& r, int d) {
  auto s = ScalingSchedule::default_for(d);
  s.c = r.get("model.schedule", "c", s.c);
  s.gamma = r.get("model.schedule", "gamma", s.gamma);
  s.eps0 = r.get("model.schedule", "eps0", s.eps0);
  s.a = r.get("model.schedule", "a", s.a);
  s.validate();
  return s;
}

std::vector<int> read_Ns(Resolver& r, int def) {
  if (r.has("model", "N_list")) {
    auto v = r.get<std::vector<int>>("model", "N_list", {});
    require(!v.empty(), "model.N_list must be nonempty");
    return v;
  }
  return {r.get("model", "N", def)};
}

json schedule_json(const ScheduleReport& rep) {
  json j;
  j["assumption1"] = rep.assumption1;
  j["assumption2"] = rep.assumption2;
  j["delta_in_unit_interval"] = rep.delta_in_unit_interval;
  j["pass"] = rep.pass();
  j["message"] = rep.message;
  for (auto [N, d] : rep.delta_by_N) j["delta_by_N"][std::to_string(N)] = d;
  return j;
}

// Schedule check that runs automatically for every kind using a schedule.
ScheduleReport check_schedule(Ctx& c, const ScalingSchedule& s, int d, const std::vector<int>& Ns,
                              bool explicit_delta) {
  auto [lo, hi] = std::minmax_element(Ns.begin(), Ns.end());
  auto rep = validate_schedule(s, d, *lo, *hi);
  c.meta["schedule_report"] = schedule_json(rep);
  bool waive = c.r.get("model.schedule", "waive", false);
  if (!rep.pass() && !waive && !explicit_delta) throw ValidationError("schedule rejected: " + rep.message);
  return rep;
}

void write_estimates(Ctx& c, const std::string& name, const std::vector<std::pair<json, EstimatorResult>>& rows,
                     const std::vector<std::string>& keys) {
  auto f = c.open(name);
  CsvWriter w(f);
  std::vector<std::string> head(keys);
  head.insert(head.end(), {"estimate", "se", "count"});
  std::set<std::string> diag;
  for (auto& [k, e] : rows)
    for (auto& [dk, dv] : e.diagnostics) diag.insert(dk);
  head.insert(head.end(), diag.begin(), diag.end());
  w.row(head);
  for (auto& [k, e] : rows) {
    for (auto& key : keys) {
      const auto& v = k[key];
      if (v.is_number_integer()) w.cell(static_cast<long long>(v.get<std::int64_t>()));
      else if (v.is_number()) w.cell(v.get<double>());
      else w.cell(v.is_string() ? v.get<std::string>() : v.dump());
    }
    w.cell(e.estimate).cell(e.se).cell(static_cast<long long>(e.count));
    for (auto& dk : diag) {
      auto it = e.diagnostics.find(dk);
      if (it != e.diagnostics.end()) w.cell(it->second);
      else w.cell("");
    }
    w.end_row();
  }
}

// Runs n trials in batches so an interrupt leaves the completed prefix.
template <class F>
auto batched(Ctx& c, std::int64_t n, F fn) {
  using R = decltype(fn(std::int64_t{0}));
  std::vector<R> out;
  std::int64_t batch = std::max<std::int64_t>(16, 4 * c.parallel);
  for (std::int64_t start = 0; start < n; start += batch) {
    if (interrupt_flag().load()) {
      c.truncated = true;
      break;
    }
    auto m = std::min(batch, n - start);
    auto part = run_trials(m, c.parallel, [&](std::int64_t i) { return fn(start + i); });
    for (auto& x : part) out.push_back(std::move(x));
  }
  return out;
}

void kind_simulate(Ctx& c) {
  auto& r = c.r;
  int d = r.get("model", "d", 1), N = r.get("model", "N", 50);
  double lambda0 = r.get("model", "lambda0", 2.0);
  auto sched = read_schedule(r, d);
  AdaptiveParams p;
  bool explicit_delta = r.has("model", "delta");
  check_schedule(c, sched, d, {N}, explicit_delta);
  p.delta = explicit_delta ? r.get("model", "delta", 0.0) : sched.delta(N);
  r.set("model", "delta", p.delta);
  p.b = read_rate(r);
  p.K = read_kernel(r);
  StopSpec stop;
  stop.horizon = r.get("run", "horizon", 100.0);
  stop.event_cap = r.get<std::int64_t>("run", "event_cap", 100'000'000);
  TorusSpec spec{d, N};
  spec.validate();
  auto lat = Lattice::torus(spec);
  auto traj = run_adaptive(lat, p, std::vector<double>(lat->size(), lambda0), stop, seed_for(c.seed, "simulate", 0));
  c.capped = traj.capped();
  {
    auto f = c.open("trajectory.csv");
    write_trajectory_csv(traj, f);
  }
  if (p.delta > 0) {
    auto z = extract_Z(traj, p.delta);
    auto f = c.open("trait_path.csv");
    write_trait_paths_csv({z.path}, f);
    c.meta["star_time_rescaled"] = z.ledger.rescaled;
  }
  c.meta["events"] = traj.event_count;
  c.meta["stop"] = stop_reason_name(traj.stop);
  c.meta["final_time"] = traj.final_time;
}

std::vector<RoundsResult> run_round_ensemble(Ctx& c, int d, int N, double lambda0, const ScalingSchedule& sched,
                                             const RateFunction& b, const MutationKernel& K, bool waive,
                                             std::int64_t trials, int k, const std::string& label,
                                             std::optional<double> horizon) {
  TorusSpec spec{d, N};
  spec.validate();
  auto p = RoundsParams::from_schedule(spec, sched, b, K, waive);
  if (auto tn = c.r.opt<double>("model", "t_N")) {
    p.t_N = *tn;
    p.t_N_overridden = true;
  }
  if (auto w = c.r.opt<int>("model", "density_radius")) p.density_radius = *w;
  p.landscape_ell = c.r.get("model", "landscape_ell", std::min(3, (N - 1) / 2));
  p.event_cap = c.r.get<std::int64_t>("run", "event_cap", 1'000'000'000);
  if (horizon) p.raw_horizon = *horizon / p.time_scale();
  p.keep_support = false;
  json& res = c.meta["resolved_by_N"][std::to_string(N)];
  res["t_N"] = p.t_N;
  res["delta_N"] = p.model.delta;
  res["density_radius"] = p.density_radius;
  res["landscape_ell"] = p.landscape_ell;
  res["time_scale"] = p.time_scale();
  auto runs = batched(c, trials, [&](std::int64_t i) { return run_rounds(p, lambda0, k, seed_for(c.seed, label, N, i)); });
  for (auto& run : runs) c.capped = c.capped || run.stop == StopReason::event_cap;
  return runs;
}

void kind_rounds(Ctx& c) {
  auto& r = c.r;
  int d = r.get("model", "d", 1);
  auto Ns = read_Ns(r, 50);
  double lambda0 = r.get("model", "lambda0", 2.0);
  auto sched = read_schedule(r, d);
  check_schedule(c, sched, d, Ns, false);
  bool waive = r.get("model.schedule", "waive", false);
  auto b = read_rate(r);
  auto K = read_kernel(r);
  auto trials = r.get<std::int64_t>("run", "trials", 100);
  int k = r.get("run", "rounds", 1);
  auto grid = r.get<std::vector<double>>("run", "times", {0.5, 1.0, 2.0, 4.0});
  auto fr = c.open("rounds.csv");
  auto fp = c.open("trait_paths.csv");
  auto fs_ = c.open("round_stats.csv");
  CsvWriter ws(fs_);
  ws.row({"N", "statistic", "t", "estimate", "se", "count"});
  for (int N : Ns) {
    auto runs = run_round_ensemble(c, d, N, lambda0, sched, b, K, waive, trials, k, "rounds", r.opt<double>("run", "horizon"));
    std::ostringstream rs, ps;
    write_rounds_csv(runs, rs);
    std::vector<TraitPath> paths;
    for (auto& x : runs) paths.push_back(x.path);
    write_trait_paths_csv(paths, ps);
    // prefix each table with N
    auto emit = [N](std::ofstream& f, const std::string& s, bool header) {
      std::istringstream in(s);
      std::string line;
      bool first = true;
      while (std::getline(in, line)) {
        if (first) {
          first = false;
          if (header) f << "N," << line << '\n';
          continue;
        }
        f << N << ',' << line << '\n';
      }
    };
    emit(fr, rs.str(), N == Ns.front());
    emit(fp, ps.str(), N == Ns.front());
    if (runs.empty()) continue;
    auto tab = round_statistics(runs, grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      ws.cell(N).cell("U").cell(grid[i]).cell(tab.U[i].estimate).cell(tab.U[i].se).cell(static_cast<long long>(tab.U[i].count));
      ws.end_row();
    }
    ws.cell(N).cell("V").cell("").cell(tab.V.estimate).cell(tab.V.se).cell(static_cast<long long>(tab.V.count));
    ws.end_row();
    ws.cell(N).cell("V_bar").cell("").cell(tab.V_bar.estimate).cell(tab.V_bar.se).cell(static_cast<long long>(tab.V_bar.count));
    ws.end_row();
    double star = 0.0;
    for (auto& x : runs) star += x.ledger.rescaled / std::max(x.path.horizon, 1e-300);
    ws.cell(N).cell("star_fraction").cell("").cell(star / runs.size()).cell("").cell(static_cast<long long>(runs.size()));
    ws.end_row();
  }
}

void kind_estimate_r(Ctx& c) {
  auto& r = c.r;
  int d = r.get("model", "d", 1), N = r.get("model", "N", 200);
  auto lambdas = r.has("model", "lambdas") ? r.get<std::vector<double>>("model", "lambdas", {})
                                           : std::vector<double>{r.get("model", "lambda", 2.0)};
  double warmup = r.get("run", "warmup", 50.0), window = r.get("run", "window", 50.0);
  auto trials = r.get<std::int64_t>("run", "trials", 50);
  EstimateROptions o;
  o.parallel = c.parallel;
  o.event_cap = r.get<std::int64_t>("run", "event_cap", o.event_cap);
  std::vector<std::pair<json, EstimatorResult>> rows;
  for (double l : lambdas) {
    if (interrupt_flag().load()) {
      c.truncated = true;
      break;
    }
    auto e = estimate_R(l, {d, N}, warmup, window, trials, seed_for(c.seed, "estimate-r", fmt_double(l)), o);
    if (e.diagnostics["capped"] > 0) c.capped = true;
    rows.push_back({{{"lambda", l}}, e});
  }
  write_estimates(c, "r.csv", rows, {"lambda"});
}

void kind_landscape(Ctx& c) {
  auto& r = c.r;
  int d = r.get("model", "d", 1), N = r.get("model", "N", 100), ell = r.get("model", "ell", 2);
  double lambda = r.get("model", "lambda", 2.0);
  LandscapeOptions o;
  o.runs = r.get("run", "trials", 1);
  o.parallel = c.parallel;
  o.event_cap = r.get<std::int64_t>("run", "event_cap", o.event_cap);
  auto s = sample_landscape_at_birth(lambda, {d, N}, ell, r.get("run", "burn_in", 50.0),
                                     r.get<std::int64_t>("run", "samples", 10000), seed_for(c.seed, "landscape"), o);
  auto f = c.open("landscape.csv");
  CsvWriter w(f);
  w.row({"code", "count", "frequency"});
  auto fr = s.frequencies();
  for (auto [code, n] : s.counts) {
    w.cell(static_cast<unsigned long long>(code)).cell(static_cast<long long>(n)).cell(fr[code]);
    w.end_row();
  }
  c.meta["samples"] = s.total;
  c.meta["died_runs"] = s.died_runs;
}

void kind_acceptance(Ctx& c) {
  auto& r = c.r;
  int d = r.get("model", "d", 1), N = r.get("model", "N", 100);
  double l = r.get("model", "lambda", 2.0), lp = r.get("model", "lambda_prime", 3.0);
  int rr = r.get("model", "r", 4), ell = r.get("model", "ell", 2);
  AcceptanceOptions o;
  o.burn_in = r.get("run", "burn_in", o.burn_in);
  o.parallel = c.parallel;
  o.horizon = r.opt<double>("run", "horizon");
  r.set("run", "horizon", o.horizon.value_or(std::sqrt(static_cast<double>(rr))));
  auto e = estimate_acceptance(l, lp, {d, N}, rr, ell, r.get<std::int64_t>("run", "outer", 100),
                               r.get<std::int64_t>("run", "inner", 100), seed_for(c.seed, "acceptance"), o);
  write_estimates(c, "acceptance.csv", {{{{"lambda", l}, {"lambda_prime", lp}}, e}}, {"lambda", "lambda_prime"});
}

void kind_sbox(Ctx& c) {
  auto& r = c.r;
  int d = r.get("model", "d", 1), rr = r.get("model", "r", 2);
  double l = r.get("model", "lambda", 1.0), lp = r.get("model", "lambda_prime", 4.0);
  std::vector<std::vector<int>> B;
  if (r.has("model", "B")) {
    B = r.get<std::vector<std::vector<int>>>("model", "B", {});
  } else {
    for (auto& x : box_offsets(d, rr))
      if (std::any_of(x.begin(), x.end(), [](int v) { return v != 0; })) B.push_back(x);
    r.set("model", "B", B);
  }
  SboxOptions o;
  o.parallel = c.parallel;
  o.horizon = r.opt<double>("run", "horizon");
  r.set("run", "horizon", o.horizon.value_or(std::sqrt(static_cast<double>(rr))));
  auto m = r.get<std::string>("run", "method", "engine");
  require(m == "engine" || m == "window", "run.method must be 'engine' or 'window'");
  o.method = m == "engine" ? SboxOptions::Method::engine : SboxOptions::Method::window;
  auto e = estimate_Sbox(l, lp, B, d, rr, r.get<std::int64_t>("run", "trials", 10000), seed_for(c.seed, "sbox"), o);
  write_estimates(c, "sbox.csv", {{{{"lambda", l}, {"lambda_prime", lp}, {"r", rr}}, e}}, {"lambda", "lambda_prime", "r"});
  if (r.get("output", "window_dump", false)) {
    auto lat = Lattice::box(d, rr);
    auto w = generate_window(lat, l, lp, 0.0, o.horizon.value_or(std::sqrt(static_cast<double>(rr))),
                             seed_for(c.seed, "sbox-window-dump"));
    auto f = c.open("window.bin");
    save_window(w, f);
  }
}

LimitParams read_limit(Resolver& r) {
  LimitParams p;
  p.lambda0 = r.get("model", "lambda0", 2.0);
  p.b = read_rate(r);
  p.K = read_kernel(r);
  auto rt = r.get<std::vector<std::vector<double>>>("model", "R_table", {});
  require(!rt.empty(), "limit: model.R_table is required");
  std::map<double, double> rm;
  for (auto& row : rt) {
    require(row.size() == 2, "model.R_table rows are [lambda, R]");
    rm[row[0]] = row[1];
  }
  p.R = r_table(rm);
  if (r.has("model", "S_constant")) {
    p.S = s_constant(r.get("model", "S_constant", 0.0));
  } else {
    auto st = r.get<std::vector<std::vector<double>>>("model", "S_table", {});
    require(!st.empty(), "limit: model.S_table or model.S_constant is required");
    std::map<std::pair<double, double>, double> sm;
    for (auto& row : st) {
      require(row.size() == 3, "model.S_table rows are [lambda, lambda_prime, S]");
      sm[{row[0], row[1]}] = row[2];
    }
    p.S = s_table(sm);
  }
  p.validate();
  return p;
}

void kind_limit_sample(Ctx& c) {
  auto& r = c.r;
  auto p = read_limit(r);
  double horizon = r.get("run", "horizon", 10.0);
  auto trials = r.get<std::int64_t>("run", "trials", 1000);
  auto samples = batched(c, trials, [&](std::int64_t i) {
    return sample_limit_path(p, horizon, seed_for(c.seed, "limit-path", i));
  });
  std::vector<TraitPath> paths;
  for (auto& s : samples) paths.push_back(s.path);
  {
    auto f = c.open("trait_paths.csv");
    write_trait_paths_csv(paths, f);
  }
  auto f = c.open("attempts.csv");
  CsvWriter w(f);
  w.row({"run", "attempt", "time", "sigma", "from", "proposal", "accepted", "value_after"});
  for (std::size_t i = 0; i < samples.size(); ++i)
    for (std::size_t j = 0; j < samples[i].attempts.size(); ++j) {
      const auto& a = samples[i].attempts[j];
      w.cell(static_cast<long long>(i)).cell(static_cast<long long>(j + 1)).cell(a.time).cell(a.sigma);
      w.cell(a.from).cell(a.proposal).cell(a.accepted).cell(a.value_after);
      w.end_row();
    }
  auto ne = check_nonexplosive(p, horizon, std::max<std::int64_t>(2, trials), seed_for(c.seed, "nonexplosion"),
                               c.parallel);
  json j;
  j["mean_jumps"] = json::array();
  for (auto& m : ne.mean_jumps) j["mean_jumps"].push_back({{"estimate", m.estimate}, {"se", m.se}});
  j["horizons"] = ne.horizons;
  j["q50"] = ne.q50;
  j["q90"] = ne.q90;
  j["q99"] = ne.q99;
  j["max"] = ne.max_jumps;
  j["flagged"] = ne.flagged;
  j["message"] = ne.message;
  c.meta["nonexplosion"] = j;
}

void kind_compare(Ctx& c) {
  auto& r = c.r;
  int d = r.get("model", "d", 1);
  auto Ns = read_Ns(r, 50);
  auto sched = read_schedule(r, d);
  check_schedule(c, sched, d, Ns, false);
  bool waive = r.get("model.schedule", "waive", false);
  auto p = read_limit(r);
  auto trials = r.get<std::int64_t>("run", "trials", 200);
  auto lt = r.get<std::int64_t>("run", "limit_trials", trials);
  double horizon = r.get("run", "horizon", 4.0);
  CompareOptions o;
  o.times = r.get<std::vector<double>>("run", "times", {1.0, 2.0});
  o.bootstrap = r.get("run", "bootstrap", o.bootstrap);
  o.level = r.get("run", "level", o.level);
  o.seed = seed_for(c.seed, "compare");
  auto limit = limit_ensemble(p, sample_limit_paths(p, horizon, lt, seed_for(c.seed, "compare-limit"), c.parallel));
  auto f = c.open("comparison.csv");
  bool header = true;
  for (int N : Ns) {
    // micro paths cover the whole rescaled horizon so the marginals are not conditioned on early stopping
    auto runs = run_round_ensemble(c, d, N, p.lambda0, sched, p.b, p.K, waive, trials, 0, "compare-micro", horizon);
    if (c.truncated) break;
    auto micro = micro_ensemble(p.lambda0, p.K, runs);
    if (micro.first.empty()) throw EstimationError("compare: no micro round satisfied E_{N,1} at N=" + std::to_string(N));
    std::ostringstream os;
    write_comparison_csv(compare_paths(micro, limit, o), os);
    std::istringstream in(os.str());
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
      if (first) {
        first = false;
        if (header) f << "N," << line << '\n';
        header = false;
        continue;
      }
      f << N << ',' << line << '\n';
    }
  }
}

void kind_oracle_check(Ctx& c) {
  auto& r = c.r;
  int d = r.get("model", "d", 1), N = r.get("model", "N", 3);
  double lambda = r.get("model", "lambda", 1.0), t = r.get("run", "t", 1.0);
  auto trials = r.get<std::int64_t>("run", "trials", 100000);
  TorusSpec spec{d, N};
  spec.validate();
  auto lat = Lattice::torus(spec);
  ExactOracle oracle(FiniteModel::one_type(lat, lambda));
  auto dist = oracle.transient(oracle.point_mass(std::vector<double>(lat->size(), 1.0)), t, 1e-10);
  double exact = oracle.occupied_probability(dist, 0);
  std::vector<std::uint8_t> full(lat->size(), 1);
  auto hits = batched(c, trials, [&](std::int64_t i) {
    auto traj = run_one_type(lat, lambda, full, t, seed_for(c.seed, "oracle-check", i));
    return static_cast<int>(traj.state_at(t)[0] != 0);
  });
  if (hits.empty()) return;
  std::int64_t k = 0;
  for (int h : hits) k += h;
  auto e = proportion(k, static_cast<std::int64_t>(hits.size()));
  double sigma = std::sqrt(exact * (1 - exact) / std::max<double>(1, hits.size()));
  auto f = c.open("oracle.csv");
  CsvWriter w(f);
  w.row({"oracle", "empirical", "sigma", "trials", "deviation_sigmas", "pass"});
  double dev = sigma > 0 ? std::abs(e.estimate - exact) / sigma : 0.0;
  w.cell(exact).cell(e.estimate).cell(sigma).cell(static_cast<long long>(hits.size())).cell(dev).cell(dev <= 3);
  w.end_row();
}

void kind_diagnostics(Ctx& c) {
  auto& r = c.r;
  int d = r.get("model", "d", 1), N = r.get("model", "N", 100);
  double lambda = r.get("model", "lambda", 2.0), horizon = r.get("run", "horizon", 50.0);
  auto w = r.opt<int>("model", "density_radius");
  auto rep = density_and_coupling_diagnostics(lambda, {d, N}, horizon, seed_for(c.seed, "diagnostics"), w);
  r.set("model", "density_radius", rep.window_radius);
  auto f = c.open("diagnostics.csv");
  CsvWriter wr(f);
  wr.row({"window_radius", "density_fraction", "event_times", "coupled", "coupling_time"});
  wr.cell(rep.window_radius).cell(rep.density_fraction).cell(static_cast<long long>(rep.event_times));
  wr.cell(rep.coupled).cell(rep.coupling_time);
  wr.end_row();
}

std::string timestamp() {
  auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

}  // namespace

Bundle run_experiment(json config, const HarnessOptions& opt) {
  Bundle b;
  json resolved;
  json meta;
  std::vector<std::string> files;
  try {
    for (const auto& o : opt.overrides) apply_override(config, o);
    check_keys(config, "");
    require(config.contains("kind") && config["kind"].is_string(), "config needs a string 'kind'");
    std::string kind = config["kind"];
    if (!kKinds.count(kind)) throw ValidationError("unknown experiment kind '" + kind + "'");
    if (opt.seed) config["run"]["seed"] = *opt.seed;
    if (opt.parallel) config["run"]["parallel"] = *opt.parallel;
    if (opt.out_dir) config["output"]["dir"] = *opt.out_dir;
    Resolver r(config, resolved);
    resolved["kind"] = kind;
    auto seed = r.get<std::uint64_t>("run", "seed", 0);
    int parallel = r.get("run", "parallel", 1);
    require(parallel >= 1, "run.parallel must be >= 1");
    b.dir = r.get<std::string>("output", "dir", "results");
    fs::create_directories(b.dir);
    meta["tool_version"] = kToolVersion;
    meta["config_hash"] = config_hash(config);
    meta["master_seed"] = seed;
    meta["started_at"] = timestamp();
    Ctx c{r, seed, parallel, fs::path(b.dir), meta, files};
    static const std::map<std::string, std::function<void(Ctx&)>> dispatch = {
        {"simulate-adaptive", kind_simulate}, {"rounds", kind_rounds},
        {"estimate-r", kind_estimate_r},      {"landscape", kind_landscape},
        {"estimate-acceptance", kind_acceptance}, {"sbox", kind_sbox},
        {"limit-sample", kind_limit_sample},  {"compare", kind_compare},
        {"oracle-check", kind_oracle_check},  {"diagnostics", kind_diagnostics}};
    dispatch.at(kind)(c);
    if (c.truncated) {
      b.exit_code = exit_interrupted;
      b.message = "interrupted; partial results flushed";
      std::ofstream(fs::path(b.dir) / "TRUNCATED") << "truncated\n";
      files.push_back("TRUNCATED");
    } else if (c.capped) {
      b.exit_code = exit_capped;
      b.message = "event cap reached in at least one run";
    }
    meta["truncated"] = c.truncated;
    meta["capped"] = c.capped;
  } catch (const ValidationError& e) {
    b.exit_code = exit_validation;
    b.message = e.what();
  } catch (const DomainError& e) {
    b.exit_code = exit_validation;
    b.message = e.what();
  } catch (const json::exception& e) {
    b.exit_code = exit_validation;
    b.message = e.what();
  } catch (const EstimationError& e) {
    b.exit_code = exit_estimation;
    b.message = e.what();
  } catch (const StateCapExceeded& e) {
    b.exit_code = exit_validation;
    b.message = e.what();
  }
  meta["resolved"] = resolved;
  meta["exit_code"] = b.exit_code;
  meta["message"] = b.message;
  meta["files"] = files;
  meta["finished_at"] = timestamp();
  b.files = files;
  b.metadata = meta;
  if (!b.dir.empty() && fs::exists(b.dir)) {
    std::ofstream(fs::path(b.dir) / "metadata.json") << meta.dump(2) << '\n';
  }
  return b;
}

}  // namespace acp
