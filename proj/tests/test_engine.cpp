#include <cmath>
#include <set>
#include <sstream>

#include "acp/engine.hpp"
#include "acp/oracle.hpp"
#include "acp/stats.hpp"
#include "doctest.h"

using namespace acp;

namespace {
constexpr double kRing3Occupied = 0.5848842903575087;  // see test_oracle
}

TEST_CASE("empty configuration is absorbing") {
  auto lat = Lattice::torus({1, 10});
  AdaptiveParams p;
  p.delta = 0.01;
  StopSpec stop;
  stop.horizon = 100;
  auto t = run_adaptive(lat, p, std::vector<double>(10, 0.0), stop, 1);
  CHECK(t.events.empty());
  CHECK(t.stop == StopReason::absorbed);
  std::vector<std::uint8_t> none(10, 0);
  CHECK(run_one_type(lat, 2.0, none, 10.0, 1).events.empty());
}

TEST_CASE("two-clock race on N = 2") {
  auto lat = Lattice::torus({1, 2});
  AdaptiveParams p;
  std::int64_t births = 0, n = 100000;
  for (std::int64_t i = 0; i < n; ++i) {
    Engine e(lat, {2.0, 0.0}, adaptive_rates(p), seed_for(5, "race", i));
    auto ev = e.step(1e9);
    births += ev->cause == Cause::birth;
  }
  double expect = 2.0 / 3.0;
  CHECK(std::abs(static_cast<double>(births) / n - expect) <= 3 * std::sqrt(expect * (1 - expect) / n));
}

TEST_CASE("one-type and delta-0 adaptive engines match the oracle") {
  auto lat = Lattice::torus({1, 3});
  std::vector<std::uint8_t> full(3, 1);
  std::int64_t n = 20000, a = 0, b = 0;
  AdaptiveParams p;
  StopSpec stop;
  stop.horizon = 1.0;
  for (std::int64_t i = 0; i < n; ++i) {
    a += run_one_type(lat, 1.0, full, 1.0, seed_for(1, "one", i)).state_at(1.0)[0] != 0;
    b += run_adaptive(lat, p, {1.0, 1.0, 1.0}, stop, seed_for(1, "adaptive", i)).state_at(1.0)[0] != 0;
  }
  double sd = std::sqrt(kRing3Occupied * (1 - kRing3Occupied) / n);
  CHECK(std::abs(static_cast<double>(a) / n - kRing3Occupied) <= 3 * sd);
  CHECK(std::abs(static_cast<double>(b) / n - kRing3Occupied) <= 3 * sd);
}

TEST_CASE("rate audit, conservation and mutation bookkeeping") {
  auto lat = Lattice::torus({1, 30});
  AdaptiveParams p;
  p.delta = 0.05;
  p.K = MutationKernel::two_point(1.0, 0.5, 0.5);
  Engine e(lat, std::vector<double>(30, 2.0), adaptive_rates(p), 17);
  auto config = e.values();
  int occupied = 30;
  std::int64_t births = 0, mutants = 0;
  double prev = 0.0;
  for (int k = 0; k < 20000; ++k) {
    auto audit = audit_rates(*lat, config, p.delta, p.b);
    REQUIRE(audit.total() == doctest::Approx(e.total_rate()).epsilon(1e-9));
    auto ev = e.step(1e9);
    if (!ev) break;
    REQUIRE(ev->time > prev);
    prev = ev->time;
    REQUIRE(transition_rate(*lat, config, *ev, p.delta, p.b) > 0);
    REQUIRE(config[ev->site] == ev->old_value);
    if (ev->cause == Cause::death) {
      REQUIRE(ev->new_value == 0);
      --occupied;
    } else {
      REQUIRE(ev->old_value == 0);
      ++occupied;
      ++births;
      double parent = config[ev->parent];
      if (ev->cause == Cause::mutant_birth) {
        ++mutants;
        REQUIRE(ev->new_value != parent);
      } else {
        REQUIRE(ev->new_value == parent);
      }
    }
    config[ev->site] = ev->new_value;
    REQUIRE(occupied == e.occupied());
  }
  // each birth is a mutant birth with probability delta b = 0.05
  double f = static_cast<double>(mutants) / births;
  CHECK(std::abs(f - 0.05) <= 3 * std::sqrt(0.05 * 0.95 / births));
}

TEST_CASE("skeleton chain balance") {
  auto lat = Lattice::torus({1, 20});
  AdaptiveParams p;
  MeanAccumulator acc;
  for (int run = 0; run < 200; ++run) {
    Engine e(lat, std::vector<double>(20, 2.0), adaptive_rates(p), seed_for(3, "skeleton", run));
    double centered = 0.0;
    for (int k = 0; k < 500 && !e.absorbed(); ++k) {
      double frac = e.death_rate() / e.total_rate();
      auto ev = e.step(1e18);
      centered += (ev->cause == Cause::death ? 1.0 : 0.0) - frac;
    }
    acc.add(centered);
  }
  CHECK(std::abs(acc.mean()) <= 3 * acc.se());
}

TEST_CASE("two-type engine") {
  auto lat = Lattice::box(1, 5);
  std::vector<std::uint8_t> init(11, 1);
  init[5] = 2;
  auto t = run_two_type(lat, 1.0, 3.0, init, 50.0, true, 9);
  auto x = t.initial;
  for (const auto& ev : t.events) {
    REQUIRE((ev.old_value == 0 || ev.new_value == 0));
    x[ev.site] = ev.new_value;
    for (double v : x) REQUIRE((v == 0 || v == 1 || v == 2));
  }
  std::set<double> left(x.begin(), x.end());
  left.erase(0.0);
  if (t.stop == StopReason::predicate) CHECK(left.size() <= 1);
}

TEST_CASE("type 2 alone follows the one-type law at lambda'") {
  auto lat = Lattice::torus({1, 3});
  ExactOracle o(FiniteModel::one_type(lat, 1.5));
  double exact = o.occupied_probability(o.transient(o.point_mass({1, 0, 0}), 1.0), 1);
  std::vector<std::uint8_t> init{2, 0, 0};
  std::int64_t n = 20000, k = 0;
  for (std::int64_t i = 0; i < n; ++i)
    k += run_two_type(lat, 0.7, 1.5, init, 1.0, false, seed_for(2, "t2", i)).state_at(1.0)[1] != 0;
  CHECK(std::abs(static_cast<double>(k) / n - exact) <= 3 * std::sqrt(exact * (1 - exact) / n));
}

TEST_CASE("event cap is reported") {
  auto lat = Lattice::torus({1, 50});
  AdaptiveParams p;
  StopSpec stop;
  stop.horizon = 1e6;
  stop.event_cap = 100;
  auto t = run_adaptive(lat, p, std::vector<double>(50, 3.0), stop, 4);
  CHECK(t.capped());
  CHECK(t.event_count == 100);
}

TEST_CASE("stop predicates") {
  auto lat = Lattice::torus({1, 40});
  AdaptiveParams p;
  p.delta = 0.01;
  StopSpec stop;
  stop.first_mutation = true;
  auto t = run_adaptive(lat, p, std::vector<double>(40, 2.0), stop, 8);
  REQUIRE(t.stop == StopReason::predicate);
  CHECK(t.events.back().cause == Cause::mutant_birth);
  for (std::size_t i = 0; i + 1 < t.events.size(); ++i) CHECK(t.events[i].cause != Cause::mutant_birth);
}

TEST_CASE("determinism and CSV export") {
  auto lat = Lattice::torus({1, 20});
  AdaptiveParams p;
  p.delta = 0.01;
  StopSpec stop;
  stop.horizon = 5;
  auto a = run_adaptive(lat, p, std::vector<double>(20, 2.0), stop, 77);
  auto b = run_adaptive(lat, p, std::vector<double>(20, 2.0), stop, 77);
  std::ostringstream sa, sb;
  write_trajectory_csv(a, sa);
  write_trajectory_csv(b, sb);
  CHECK(sa.str() == sb.str());
  CHECK(sa.str().rfind("time,site_index,old,new,cause,parent_site\n", 0) == 0);
}
