#include <cmath>
#include <numeric>

#include "acp/errors.hpp"
#include "acp/graphical.hpp"
#include "acp/observables.hpp"
#include "acp/oracle.hpp"
#include "doctest.h"

using namespace acp;

namespace {

// window code on a ring, computed directly: bit i is the site at offset i - ell
std::uint64_t ring_code(const std::vector<std::uint8_t>& occ, int u, int ell) {
  int N = static_cast<int>(occ.size());
  std::uint64_t c = 0;
  for (int i = 0; i <= 2 * ell; ++i)
    if (occ[((u + i - ell) % N + N) % N]) c |= std::uint64_t{1} << i;
  return c;
}

double ring_q(const std::vector<std::uint8_t>& occ, int u) {
  int N = static_cast<int>(occ.size());
  if (occ[u]) return 0.0;
  return occ[(u + 1) % N] + occ[(u + N - 1) % N];
}

double brute_jump_sum(const Trajectory& t, const LocalFunction& f) {
  std::vector<std::uint8_t> occ(t.initial.begin(), t.initial.end());
  double s = 0;
  for (const auto& e : t.events) {
    if (e.new_value != 0) s += f(ring_code(occ, e.site, f.ell()));
    occ[e.site] = e.new_value != 0;
  }
  return s;
}

double brute_compensator(const Trajectory& t, const LocalFunction& f, double lambda) {
  std::vector<std::uint8_t> occ(t.initial.begin(), t.initial.end());
  int N = static_cast<int>(occ.size());
  double s = 0, prev = 0;
  auto rate = [&] {
    double r = 0;
    for (int u = 0; u < N; ++u) r += ring_q(occ, u) * f(ring_code(occ, u, f.ell()));
    return r;
  };
  for (const auto& e : t.events) {
    s += rate() * (e.time - prev);
    prev = e.time;
    occ[e.site] = e.new_value != 0;
  }
  s += rate() * (t.final_time - prev);
  return lambda * s;
}

}  // namespace

TEST_CASE("R estimate matches the exact flux on a ring of three") {
  auto lat = Lattice::torus({1, 3});
  double lambda = 1.0, warm = 0.5, win = 1.0;
  ExactOracle o(FiniteModel::one_type(lat, lambda));
  auto flux = o.time_integral(o.point_mass({1, 1, 1}), warm, warm + win, [&](const std::vector<int>& l) {
    std::vector<std::uint8_t> occ(l.begin(), l.end());
    double r = 0;
    for (int u = 0; u < 3; ++u) r += ring_q(occ, u);
    return lambda * r;
  });
  double exact = flux / (3 * win);
  EstimateROptions opt;
  opt.condition_on_survival = false;
  auto e = estimate_R(lambda, {1, 3}, warm, win, 40000, 1, opt);
  CHECK(std::abs(e.estimate - exact) <= 3 * e.se);
  CHECK(e.diagnostics.at("censored") > 0);
}

TEST_CASE("R estimate: bound and window stationarity") {
  auto a = estimate_R(2.5, {1, 100}, 30, 20, 30, 2);
  auto b = estimate_R(2.5, {1, 100}, 30, 40, 30, 3);
  CHECK(a.estimate - 1 <= 3 * a.se);
  CHECK(std::abs(a.estimate - b.estimate) <= 3 * std::hypot(a.se, b.se));
  CHECK_THROWS_AS(estimate_R(0.2, {1, 3}, 50, 10, 5, 1), EstimationError);
}

TEST_CASE("jump sums and compensators against direct recomputation") {
  auto lat = Lattice::torus({1, 15});
  Rng rng(3);
  auto g = LocalFunction::random_table(1, 2, rng);
  auto q = LocalFunction::q(1);
  auto one = LocalFunction::constant(1, 1.0), zero = LocalFunction::constant(1, 0.0);
  std::vector<std::uint8_t> full(15, 1);
  for (int rep = 0; rep < 10; ++rep) {
    auto t = run_one_type(lat, 2.0, full, 5.0, seed_for(4, rep));
    std::int64_t births = 0;
    for (const auto& e : t.events) births += e.new_value != 0;
    CHECK(jump_sum(t, one) == static_cast<double>(births));
    CHECK(jump_sum(t, zero) == 0.0);
    CHECK(compensator_integral(t, zero, 2.0) == 0.0);
    for (const auto* f : {&g, &q, &one}) {
      CHECK(jump_sum(t, *f) == doctest::Approx(brute_jump_sum(t, *f)).epsilon(1e-12));
      CHECK(compensator_integral(t, *f, 2.0) == doctest::Approx(brute_compensator(t, *f, 2.0)).epsilon(1e-9));
    }
  }
  auto small = run_one_type(Lattice::torus({1, 4}), 1.0, std::vector<std::uint8_t>(4, 1), 1.0, 1);
  CHECK_THROWS_AS(jump_sum(small, LocalFunction::constant(1, 1.0).table(1, 2, std::vector<double>(32, 0.0))),
                  ValidationError);
}

TEST_CASE("martingale centering at small scale") {
  auto lat = Lattice::torus({1, 20});
  auto q = LocalFunction::q(1);
  MeanAccumulator acc;
  std::vector<std::uint8_t> full(20, 1);
  for (int rep = 0; rep < 200; ++rep) {
    auto t = run_one_type(lat, 2.0, full, 5.0, seed_for(5, rep));
    acc.add(jump_sum(t, q) - compensator_integral(t, q, 2.0));
  }
  CHECK(std::abs(acc.mean()) <= 3 * acc.se());
}

TEST_CASE("landscapes at birth") {
  auto s = sample_landscape_at_birth(2.0, {1, 40}, 2, 5.0, 2000, 6);
  CHECK(s.total == 2000);
  for (auto [code, n] : s.counts) {
    LocalLandscape l{1, 2, code};
    CHECK(l.has_occupied_neighbour());
  }
  double mass = 0;
  for (auto [c, f] : s.frequencies()) mass += f;
  CHECK(mass == doctest::Approx(1.0));
  auto zero = sample_landscape_at_birth(2.0, {1, 40}, 0, 5.0, 200, 6);
  CHECK(zero.counts.size() == 1);
  CHECK(zero.counts.begin()->first == 0);
  CHECK_THROWS_AS(sample_landscape_at_birth(2.0, {1, 10}, 5, 1.0, 10, 1), ValidationError);
}

TEST_CASE("past-truncated sampler") {
  auto lat = Lattice::torus({1, 30});
  auto eta = past_truncated_configuration(2.0, lat, 1e-9, 1);
  CHECK(std::accumulate(eta.begin(), eta.end(), 0) == 30);
  // duality: eta at lookback L has the law of the forward process from full occupancy at time L
  double L = std::pow(100.0, 0.25);
  auto pt = sample_stationary_past_truncated(2.0, {1, 100}, L, 400, 7);
  auto lat100 = Lattice::torus({1, 100});
  MeanAccumulator fwd;
  std::vector<std::uint8_t> full(100, 1);
  for (int i = 0; i < 400; ++i) {
    auto st = run_one_type(lat100, 2.0, full, L, seed_for(8, i)).state_at(L);
    fwd.add(std::count_if(st.begin(), st.end(), [](double v) { return v != 0; }) / 100.0);
  }
  CHECK(std::abs(pt.density.estimate - fwd.mean()) <= 3 * std::hypot(pt.density.se, fwd.se()));
  double prev = 1.0;
  for (double lb : {2.0, 5.0, 10.0}) {
    double d = sample_stationary_past_truncated(1.0, {1, 100}, lb, 200, 9).density.estimate;
    CHECK(d < prev);
    prev = d;
  }
}

TEST_CASE("box survival") {
  auto lat = Lattice::box(1, 2);
  ExactOracle o(FiniteModel::two_type(lat, 1.0, 4.0));
  auto p = o.transient(o.point_mass({1, 1, 2, 1, 1}), std::sqrt(2.0));
  double exact = o.expectation(p, [](const std::vector<int>& l) {
    return std::find(l.begin(), l.end(), 2) != l.end() ? 1.0 : 0.0;
  });
  std::vector<std::vector<int>> B{{-2}, {-1}, {1}, {2}};
  auto e = estimate_Sbox(1.0, 4.0, B, 1, 2, 20000, 10);
  CHECK(std::abs(e.estimate - exact) <= 3 * std::sqrt(exact * (1 - exact) / 20000));
  CHECK(e.diagnostics.at("horizon") == doctest::Approx(std::sqrt(2.0)));
  SboxOptions w;
  w.method = SboxOptions::Method::window;
  auto ew = estimate_Sbox(1.0, 4.0, B, 1, 2, 20000, 11, w);
  CHECK(std::abs(ew.estimate - exact) <= 3 * std::sqrt(exact * (1 - exact) / 20000));
  // nested B on shared windows: more type 1 never helps type 2
  auto none = estimate_Sbox(1.0, 3.0, {}, 1, 8, 3000, 12, w);
  auto some = estimate_Sbox(1.0, 3.0, {{-1}, {2}}, 1, 8, 3000, 12, w);
  auto many = estimate_Sbox(1.0, 3.0, {{-1}, {1}, {2}, {-3}}, 1, 8, 3000, 12, w);
  CHECK(none.estimate >= some.estimate);
  CHECK(some.estimate >= many.estimate);
  CHECK(none.estimate <= 1.0);
  CHECK_THROWS_AS(estimate_Sbox(2.0, 1.0, {}, 1, 2, 10, 1), ValidationError);
  CHECK_THROWS_AS(estimate_Sbox(1.0, 2.0, {{0}}, 1, 2, 10, 1), ValidationError);
}

TEST_CASE("acceptance estimates") {
  auto below = estimate_acceptance(2.0, 1.5, {1, 40}, 3, 2, 5, 5, 1);
  CHECK(below.estimate == 0.0);
  CHECK(below.se == 0.0);
  CHECK_THROWS_AS(estimate_acceptance(2.0, 2.0, {1, 40}, 3, 2, 5, 5, 1), ValidationError);
  auto up = estimate_acceptance(2.0, 3.0, {1, 40}, 4, 2, 20, 20, 2);
  CHECK(up.estimate >= 0.0);
  CHECK(up.estimate <= 1.0);
  CHECK(up.se > 0.0);
}

TEST_CASE("rejection mass") {
  auto down = MutationKernel::two_point(1.0, 0.5, 0.0);
  auto s = [](double, double) { return EstimatorResult{0.7, 0.01, 100, {}}; };
  CHECK(rejection_mass(2.0, down, s).estimate == 1.0);
  auto two = MutationKernel::two_point(1.0, 0.5, 0.4);
  auto r = rejection_mass(2.0, two, s);
  CHECK(r.estimate == doctest::Approx(0.6 + 0.4 * 0.3));
  // normalization: rejection mass plus accepted mass is one
  CHECK(r.estimate + 0.4 * 0.7 == doctest::Approx(1.0));
  auto gauss = MutationKernel::gaussian_increment(0.5);
  double up = 1 - gauss.cdf(1.0, 1.0);
  auto cont = rejection_mass(1.0, gauss,
                             [](double l, double lp) { return EstimatorResult{lp > l ? 0.5 : 0.0, 0, 1, {}}; }, 20000, 3);
  CHECK(std::abs(cont.estimate - (1 - 0.5 * up)) <= 3 * cont.se);
}

TEST_CASE("good boxes") {
  TorusSpec spec{1, 30};
  std::vector<std::uint8_t> xi(30, 2);
  TorusBox box{Site{{10}}, 6};
  CHECK(detect_good_box(spec, xi, box));
  xi[12] = 1;
  CHECK_FALSE(detect_good_box(spec, xi, box));
  std::vector<std::uint8_t> even(30, 0);
  for (int i = 0; i < 30; i += 2) even[i] = 2;
  CHECK(detect_good_box(spec, even, box, 1));
  std::vector<std::uint8_t> gap = even;
  gap[8] = gap[10] = 0;
  CHECK_FALSE(detect_good_box(spec, gap, box, 1));
  CHECK_FALSE(detect_good_box(spec, gap, box, 2));
  CHECK(detect_good_box(spec, gap, box, 3));
  CHECK(default_sub_radius(100) == 1);
}

TEST_CASE("extinction times") {
  auto pure = estimate_extinction_time(0.0, 1, 2, 20000, 1);
  double h5 = 1 + 1.0 / 2 + 1.0 / 3 + 1.0 / 4 + 1.0 / 5;
  REQUIRE(pure.has_estimate);
  CHECK(std::abs(pure.tau.estimate - h5) <= 3 * pure.tau.se);
  auto r5 = estimate_extinction_time(2.0, 1, 5, 400, 2);
  REQUIRE(r5.has_estimate);
  for (const auto& c : r5.checks) CHECK(c.pass);
  auto r4 = estimate_extinction_time(2.0, 1, 4, 300, 3);
  auto r8 = estimate_extinction_time(2.0, 1, 8, 300, 4);
  CHECK(r8.tau.estimate - r4.tau.estimate > 3 * std::hypot(r8.tau.se, r4.tau.se));
}

TEST_CASE("density and coupling diagnostics") {
  TorusSpec spec{1, 100};
  auto lat = Lattice::torus(spec);
  auto full = std::vector<std::uint8_t>(100, 1);
  auto r = density_and_coupling_diagnostics(2.0, spec, 5.0, 1, 1, full);
  CHECK(r.coupled);
  CHECK(r.coupling_time == 0.0);
  CHECK(in_density_class(*lat, sparse_density_start(*lat, 2), 2));
  auto zero = density_and_coupling_diagnostics(2.0, spec, 0.0, 1);
  CHECK(zero.density_fraction == 1.0);
  std::vector<double> freq;
  for (double h : {5.0, 20.0, 80.0}) {
    int c = 0;
    for (int i = 0; i < 30; ++i) c += density_and_coupling_diagnostics(2.0, spec, h, seed_for(20, static_cast<int>(h), i)).coupled;
    freq.push_back(c / 30.0);
  }
  CHECK(freq[0] <= freq[1] + 0.2);
  CHECK(freq[1] <= freq[2] + 0.2);
  CHECK(freq[2] > freq[0]);
}

TEST_CASE("survival sweep is monotone in lambda") {
  auto s = survival_sweep({0.5, 1.5, 3.0}, {1, 50}, 20.0, 400, 1);
  CHECK(s[0].estimate <= s[1].estimate + 3 * std::hypot(s[0].se, s[1].se));
  CHECK(s[1].estimate <= s[2].estimate + 3 * std::hypot(s[1].se, s[2].se));
  CHECK(s[2].estimate > s[0].estimate);
}
