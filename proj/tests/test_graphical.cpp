#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <sstream>

#include "acp/errors.hpp"
#include "acp/graphical.hpp"
#include "acp/stats.hpp"
#include "doctest.h"

using namespace acp;

namespace {

// Depth-first enumeration of infection paths on the event DAG, straight from the definition.
bool brute_reaches(const EventWindow& w, const PathQuery& q) {
  const auto& lat = w.lattice();
  const auto& ch = w.channels();
  auto allowed = [&](int x) {
    return !q.restriction || std::find(q.restriction->begin(), q.restriction->end(), x) != q.restriction->end();
  };
  std::function<bool(int, double)> dfs = [&](int x, double tau) -> bool {
    double death = std::numeric_limits<double>::infinity();
    for (double d : ch.death[x])
      if (d > tau && d <= q.t) {
        death = d;
        break;
      }
    if (death == std::numeric_limits<double>::infinity() &&
        std::find(q.to_set.begin(), q.to_set.end(), x) != q.to_set.end())
      return true;
    for (int e = lat.edge_begin(x); e < lat.edge_begin(x) + lat.degree(x); ++e) {
      int y = lat.edge_target(e);
      if (!allowed(y)) continue;
      auto try_channel = [&](const std::vector<double>& times) {
        for (double a : times)
          if (a > tau && a < death && a <= q.t && dfs(y, a)) return true;
        return false;
      };
      if (try_channel(ch.basic[e])) return true;
      if (q.arrows == ArrowClasses::basic_and_extra && try_channel(ch.extra[e])) return true;
    }
    return false;
  };
  for (int x : q.from_set)
    if (allowed(x) && dfs(x, q.s)) return true;
  return false;
}

EventWindow random_small_window(LatticePtr lat, Rng& rng, double t_max, int deaths, int arrows, int extras) {
  EventWindow::Channels ch;
  ch.death.resize(lat->size());
  ch.basic.resize(lat->edge_count());
  ch.extra.resize(lat->edge_count());
  auto t = [&] { return uniform01(rng) * t_max; };
  for (int k = 0; k < deaths; ++k) ch.death[uniform_index(rng, lat->size())].push_back(t());
  for (int k = 0; k < arrows; ++k) ch.basic[uniform_index(rng, lat->edge_count())].push_back(t());
  for (int k = 0; k < extras; ++k) ch.extra[uniform_index(rng, lat->edge_count())].push_back(t());
  for (auto* c : {&ch.death, &ch.basic, &ch.extra})
    for (auto& v : *c) std::sort(v.begin(), v.end());
  return EventWindow(lat, t_max, 1.0, 2.0, 0.0, 0, ch);
}

std::vector<int> set_of(const std::vector<std::uint8_t>& f) {
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(f.size()); ++i)
    if (f[i]) out.push_back(i);
  return out;
}

}  // namespace

TEST_CASE("empty window and channel counts") {
  auto lat = Lattice::torus({1, 10});
  auto w = generate_window(lat, 1.0, std::nullopt, 0.0, 0.0, 1);
  CHECK(w.event_count() == 0);
  MeanAccumulator deaths;
  for (int i = 0; i < 200; ++i) {
    auto v = generate_window(lat, 1.0, std::nullopt, 0.0, 100.0, seed_for(1, "w", i));
    for (const auto& c : v.channels().death) deaths.add(static_cast<double>(c.size()));
    for (const auto& m : v.channels().basic_marks)
      for (auto b : m) REQUIRE(b == 0);
    for (const auto& c : v.channels().extra) REQUIRE(c.empty());
  }
  CHECK(std::abs(deaths.mean() - 100.0) <= 3 * deaths.se());
  CHECK_THROWS_AS(generate_window(lat, 1.0, std::nullopt, 1.5, 1.0, 1), ValidationError);
}

TEST_CASE("extra arrows appear at rate lambda' - lambda") {
  auto lat = Lattice::torus({1, 10});
  MeanAccumulator basic, extra, marks;
  for (int i = 0; i < 100; ++i) {
    auto w = generate_window(lat, 1.0, 3.0, 0.25, 50.0, seed_for(2, "w", i));
    for (std::size_t e = 0; e < w.channels().basic.size(); ++e) {
      basic.add(static_cast<double>(w.channels().basic[e].size()));
      extra.add(static_cast<double>(w.channels().extra[e].size()));
      for (auto m : w.channels().basic_marks[e]) marks.add(m);
    }
  }
  CHECK(std::abs(basic.mean() - 50.0) <= 3 * basic.se());
  CHECK(std::abs(extra.mean() - 100.0) <= 3 * extra.se());
  CHECK(std::abs(marks.mean() - 0.25) <= 3 * marks.se());
}

TEST_CASE("merged order is strict and deterministic") {
  auto lat = Lattice::torus({2, 5});
  auto a = generate_window(lat, 2.0, 3.0, 0.5, 5.0, 99);
  auto b = generate_window(lat, 2.0, 3.0, 0.5, 5.0, 99);
  CHECK(a == b);
  auto ev = a.events();
  for (std::size_t i = 1; i < ev.size(); ++i) REQUIRE(ev[i - 1].time < ev[i].time);
  CHECK_FALSE(a == generate_window(lat, 2.0, 3.0, 0.5, 5.0, 100));
}

TEST_CASE("ties are broken deterministically by channel order") {
  auto lat = Lattice::torus({1, 3});
  EventWindow::Channels ch;
  ch.death = {{1.0}, {}, {}};
  ch.basic.assign(lat->edge_count(), {});
  ch.basic[0] = {1.0};
  EventWindow w(lat, 2.0, 1.0, std::nullopt, 0.0, 0, ch);
  REQUIRE(w.event_count() == 2);
  CHECK(w.events()[0].channel == Channel::death);
  CHECK(w.events()[0].time < w.events()[1].time);
}

TEST_CASE("reaches: trivial cases") {
  auto lat = Lattice::torus({1, 6});
  auto w = generate_window(lat, 1.5, std::nullopt, 0.0, 2.0, 3);
  CHECK_FALSE(reaches(w, {{}, 0.0, {0, 1, 2}, 2.0}));
  CHECK(reaches(w, {{2}, 0.5, {2}, 0.5}));
}

TEST_CASE("reaches agrees with brute-force path enumeration") {
  Rng rng(12);
  auto ring = Lattice::torus({1, 3});
  // hand-built: arrow 0->1 at 0.2, arrow 1->2 at 0.6, death at 1 at 0.4
  EventWindow::Channels ch;
  ch.death = {{}, {0.4}, {}};
  ch.basic.assign(ring->edge_count(), {});
  auto edge = [&](int x, int y) {
    for (int e = ring->edge_begin(x); e < ring->edge_begin(x) + ring->degree(x); ++e)
      if (ring->edge_target(e) == y) return e;
    return -1;
  };
  ch.basic[edge(0, 1)] = {0.2};
  ch.basic[edge(1, 2)] = {0.6};
  EventWindow hand(ring, 1.0, 1.0, std::nullopt, 0.0, 0, ch);
  CHECK_FALSE(reaches(hand, {{0}, 0.0, {2}, 1.0}));
  CHECK(reaches(hand, {{0}, 0.0, {1}, 0.3}));
  CHECK_FALSE(reaches(hand, {{0}, 0.0, {1}, 1.0}));
  CHECK(reaches(hand, {{1}, 0.5, {2}, 1.0}));
  CHECK(brute_reaches(hand, {{0}, 0.0, {2}, 1.0}) == false);

  for (int rep = 0; rep < 400; ++rep) {
    auto lat = rep % 2 ? Lattice::torus({1, 5}) : Lattice::box(2, 1);
    auto w = random_small_window(lat, rng, 1.0, 4, 10, 4);
    PathQuery q;
    q.from_set = {static_cast<int>(uniform_index(rng, lat->size()))};
    q.to_set = {static_cast<int>(uniform_index(rng, lat->size())), static_cast<int>(uniform_index(rng, lat->size()))};
    q.s = 0.2 * uniform01(rng);
    q.t = 0.5 + 0.5 * uniform01(rng);
    q.arrows = rep % 3 ? ArrowClasses::basic : ArrowClasses::basic_and_extra;
    if (rep % 5 == 0) {
      std::vector<int> r;
      for (int x = 0; x < lat->size(); ++x)
        if (uniform01(rng) < 0.7) r.push_back(x);
      q.restriction = r;
    }
    REQUIRE(reaches(w, q) == brute_reaches(w, q));
  }
}

TEST_CASE("reaches is monotone") {
  Rng rng(13);
  auto lat = Lattice::torus({1, 8});
  for (int rep = 0; rep < 200; ++rep) {
    auto w = generate_window(lat, 1.5, 2.5, 0.0, 2.0, seed_for(13, rep));
    PathQuery q{{0}, 0.0, {4}, 2.0};
    bool base = reaches(w, q);
    PathQuery bigger = q;
    bigger.from_set.push_back(1);
    bigger.to_set.push_back(5);
    PathQuery extra = q;
    extra.arrows = ArrowClasses::basic_and_extra;
    PathQuery tight = q;
    tight.restriction = std::vector<int>{0, 1, 2, 3, 4};
    if (base) {
      CHECK(reaches(w, bigger));
      CHECK(reaches(w, extra));
    }
    if (reaches(w, tight)) CHECK(base);
  }
}

TEST_CASE("one-type trajectories from windows") {
  auto lat = Lattice::torus({1, 12});
  for (int rep = 0; rep < 50; ++rep) {
    auto w = generate_window(lat, 1.8, std::nullopt, 0.0, 3.0, seed_for(14, rep));
    std::vector<int> A{0, 5}, B{0, 3, 5, 9}, all;
    for (int i = 0; i < 12; ++i) all.push_back(i);
    auto ta = one_type_from_window(w, A), tb = one_type_from_window(w, B), tf = one_type_from_window(w, all);
    for (double t : {0.5, 1.0, 2.0, 3.0}) {
      auto za = ta.state_at(t), zb = tb.state_at(t), zf = tf.state_at(t);
      auto direct = reachable_at(w, {A, 0.0, all, t});
      for (int x = 0; x < 12; ++x) {
        REQUIRE((za[x] != 0) == (direct[x] != 0));
        REQUIRE((za[x] <= zb[x]));
        REQUIRE((zb[x] <= zf[x]));
      }
    }
  }
  auto w = generate_window(lat, 1.8, std::nullopt, 0.0, 3.0, 1);
  CHECK(one_type_from_window(w, std::vector<int>{}).events.empty());
  auto quiet = EventWindow(lat, 3.0, 1.0, std::nullopt, 0.0, 0, {});
  CHECK(one_type_from_window(quiet, std::vector<int>{1, 2}).events.empty());
}

TEST_CASE("two-type update rules") {
  auto lat = Lattice::torus({1, 3});
  std::vector<std::uint8_t> xi{1, 2, 0};
  WindowEvent basic{0.1, Channel::basic, 0, 1, false};
  apply_two_type(xi, basic);
  CHECK(xi == std::vector<std::uint8_t>{1, 2, 0});
  WindowEvent extra_from_1{0.2, Channel::extra, 0, 2, false};
  apply_two_type(xi, extra_from_1);
  CHECK(xi[2] == 0);
  WindowEvent extra_from_2{0.3, Channel::extra, 1, 2, false};
  apply_two_type(xi, extra_from_2);
  CHECK(xi[2] == 2);
  WindowEvent death{0.4, Channel::death, 2, 2, false};
  apply_two_type(xi, death);
  CHECK(xi[2] == 0);
}

TEST_CASE("type 2 alone on windows without extra arrows follows the one-type replay") {
  auto lat = Lattice::torus({1, 10});
  for (int rep = 0; rep < 30; ++rep) {
    auto w = generate_window(lat, 1.5, std::nullopt, 0.0, 4.0, seed_for(15, rep));
    std::vector<std::uint8_t> xi(10, 0);
    xi[3] = xi[4] = 2;
    auto two = two_type_from_window(w, xi);
    auto one = one_type_from_window(w, std::vector<int>{3, 4});
    for (double t : {1.0, 2.0, 4.0}) {
      auto a = two.state_at(t), b = one.state_at(t);
      for (int x = 0; x < 10; ++x) REQUIRE((a[x] != 0) == (b[x] != 0));
    }
  }
}

TEST_CASE("insulation") {
  auto box = Lattice::box(1, 20);
  EventWindow quiet(box, 1.0, 1.0, std::nullopt, 0.0, 0, {});
  CHECK(is_insulated(quiet, 1.0));
  // a chain of arrows from -3 to +2 spans width 5 > 2 floor(20/10) = 4
  EventWindow::Channels ch;
  ch.basic.assign(box->edge_count(), {});
  auto edge = [&](int x, int y) {
    int a = box->index(std::vector<int>{x}), b = box->index(std::vector<int>{y});
    for (int e = box->edge_begin(a); e < box->edge_begin(a) + box->degree(a); ++e)
      if (box->edge_target(e) == b) return e;
    return -1;
  };
  for (int x = -3; x < 2; ++x) ch.basic[edge(x, x + 1)] = {0.1 + 0.1 * (x + 3)};
  EventWindow chain(box, 1.0, 1.0, std::nullopt, 0.0, 0, ch);
  CHECK_FALSE(is_insulated(chain, 1.0));
  CHECK(is_insulated(chain, 0.45));
  // a death mark in the middle cuts the chain into two short pieces
  ch.death.assign(box->size(), {});
  ch.death[box->index(std::vector<int>{-1})] = {0.25};
  EventWindow cut(box, 1.0, 1.0, std::nullopt, 0.0, 0, ch);
  CHECK(is_insulated(cut, 1.0));
  CHECK_THROWS_AS(is_insulated(generate_window(Lattice::torus({1, 5}), 1, std::nullopt, 0, 1, 1), 1.0),
                  ValidationError);
}

TEST_CASE("restriction to a box keeps interior marks only") {
  auto lat = Lattice::torus({1, 30});
  auto w = generate_window(lat, 2.0, 3.0, 0.0, 2.0, 5);
  auto r = w.restrict_to_box(10, 4);
  CHECK(r.lattice().size() == 9);
  std::size_t inside = 0;
  for (const auto& ev : w.events()) {
    auto in = [](int x) { return x >= 6 && x <= 14; };
    inside += in(ev.from) && in(ev.to);
  }
  CHECK(r.event_count() == inside);
}

TEST_CASE("binary dump round trip is bit exact") {
  auto w = generate_window(Lattice::box(2, 3), 1.5, 2.5, 0.3, 4.0, 321);
  std::stringstream ss;
  save_window(w, ss);
  auto back = load_window(ss);
  CHECK(back == w);
  std::stringstream again;
  save_window(back, again);
  std::stringstream first;
  save_window(w, first);
  CHECK(first.str() == again.str());
  std::stringstream junk("not a window");
  CHECK_THROWS(load_window(junk));
}

TEST_CASE("self-duality at moderate sample size") {
  auto lat = Lattice::torus({1, 6});
  std::int64_t n = 20000, ab = 0, ba = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    auto w = generate_window(lat, 1.5, std::nullopt, 0.0, 2.0, seed_for(16, i));
    ab += reaches(w, {{0}, 0.0, {2, 3}, 2.0});
    ba += reaches(w, {{2, 3}, 0.0, {0}, 2.0});
  }
  double p = (ab + ba) / (2.0 * n);
  double se = std::sqrt(2 * p * (1 - p) / n);
  CHECK(std::abs(static_cast<double>(ab - ba) / n) <= 3 * se);
}

TEST_CASE("insulation frequency at horizon sqrt(r)") {
  // r = 50 is too small for the sub-box radius r/10 to contain the spread (see the decisions ledger)
  int r = 300, n = 300, ok = 0;
  auto box = Lattice::box(1, r);
  double t = std::sqrt(static_cast<double>(r));
  for (int i = 0; i < n; ++i) ok += is_insulated(generate_window(box, 2.0, std::nullopt, 0.0, t, seed_for(17, i)), t);
  CHECK(static_cast<double>(ok) / n >= 0.99);
}
