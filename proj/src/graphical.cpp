#include "acp/graphical.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>

#include "acp/errors.hpp"

namespace acp {

namespace {

void check_times(const std::vector<double>& ts, double t_max, const char* what) {
  for (std::size_t i = 0; i < ts.size(); ++i) {
    require(ts[i] >= 0 && ts[i] <= t_max, std::string(what) + ": time outside [0, t_max]");
    if (i > 0) require(ts[i] > ts[i - 1], std::string(what) + ": times must be strictly increasing");
  }
}

void fit_marks(std::vector<std::vector<std::uint8_t>>& marks, const std::vector<std::vector<double>>& times) {
  if (marks.empty()) marks.resize(times.size());
  require(marks.size() == times.size(), "EventWindow: mark channel count mismatch");
  for (std::size_t e = 0; e < times.size(); ++e) {
    if (marks[e].empty()) marks[e].assign(times[e].size(), 0);
    require(marks[e].size() == times[e].size(), "EventWindow: mark count mismatch");
  }
}

}  // namespace

EventWindow::EventWindow(LatticePtr lattice, double t_max, double lambda, std::optional<double> lambda_prime,
                         double mark_prob, std::uint64_t seed, Channels channels)
    : lat_(std::move(lattice)), t_max_(t_max), lambda_(lambda), lambda_prime_(lambda_prime),
      mark_prob_(mark_prob), seed_(seed), ch_(std::move(channels)) {
  require(t_max_ >= 0 && std::isfinite(t_max_), "EventWindow: t_max must be finite and >= 0");
  require(mark_prob_ >= 0 && mark_prob_ <= 1, "EventWindow: mark_prob must lie in [0,1]");
  std::size_t n = lat_->size(), E = lat_->edge_count();
  if (ch_.death.empty()) ch_.death.resize(n);
  if (ch_.basic.empty()) ch_.basic.resize(E);
  if (ch_.extra.empty()) ch_.extra.resize(E);
  require(ch_.death.size() == n, "EventWindow: death channel count must equal site count");
  require(ch_.basic.size() == E && ch_.extra.size() == E, "EventWindow: arrow channel count must equal edge count");
  fit_marks(ch_.basic_marks, ch_.basic);
  fit_marks(ch_.extra_marks, ch_.extra);
  for (const auto& c : ch_.death) check_times(c, t_max_, "death marks");
  for (const auto& c : ch_.basic) check_times(c, t_max_, "basic arrows");
  for (const auto& c : ch_.extra) check_times(c, t_max_, "extra arrows");
  build_merged();
}

void EventWindow::build_merged() {
  struct Ref {
    WindowEvent ev;
    int index;
    std::size_t pos;
  };
  std::vector<Ref> refs;
  for (int x = 0; x < lat_->size(); ++x)
    for (std::size_t k = 0; k < ch_.death[x].size(); ++k)
      refs.push_back({{ch_.death[x][k], Channel::death, x, x, false}, x, k});
  for (int e = 0; e < lat_->edge_count(); ++e) {
    int a = lat_->edge_source(e), b = lat_->edge_target(e);
    for (std::size_t k = 0; k < ch_.basic[e].size(); ++k)
      refs.push_back({{ch_.basic[e][k], Channel::basic, a, b, ch_.basic_marks[e][k] != 0}, e, k});
    for (std::size_t k = 0; k < ch_.extra[e].size(); ++k)
      refs.push_back({{ch_.extra[e][k], Channel::extra, a, b, ch_.extra_marks[e][k] != 0}, e, k});
  }
  std::sort(refs.begin(), refs.end(), [](const Ref& p, const Ref& q) {
    if (p.ev.time != q.ev.time) return p.ev.time < q.ev.time;
    if (p.ev.channel != q.ev.channel) return p.ev.channel < q.ev.channel;
    return p.index < q.index;
  });
  // exact collisions: push the later event (in channel/index order) up by one ulp
  for (std::size_t i = 1; i < refs.size(); ++i) {
    double prev = refs[i - 1].ev.time;
    if (refs[i].ev.time <= prev) {
      double t = std::nextafter(prev, INFINITY);
      refs[i].ev.time = t;
      auto& r = refs[i];
      if (r.ev.channel == Channel::death) ch_.death[r.index][r.pos] = t;
      else if (r.ev.channel == Channel::basic) ch_.basic[r.index][r.pos] = t;
      else ch_.extra[r.index][r.pos] = t;
    }
  }
  merged_.clear();
  merged_.reserve(refs.size());
  for (const auto& r : refs) merged_.push_back(r.ev);
}

bool EventWindow::operator==(const EventWindow& o) const {
  return *lat_ == *o.lat_ && t_max_ == o.t_max_ && lambda_ == o.lambda_ && lambda_prime_ == o.lambda_prime_ &&
         mark_prob_ == o.mark_prob_ && seed_ == o.seed_ && ch_.death == o.ch_.death && ch_.basic == o.ch_.basic &&
         ch_.extra == o.ch_.extra && ch_.basic_marks == o.ch_.basic_marks && ch_.extra_marks == o.ch_.extra_marks;
}

EventWindow generate_window(LatticePtr lattice, double lambda, std::optional<double> lambda_prime, double mark_prob,
                            double t_max, std::uint64_t seed) {
  require(lambda > 0 && std::isfinite(lambda), "generate_window: lambda must be positive");
  require(mark_prob >= 0 && mark_prob <= 1, "generate_window: mark_prob must lie in [0,1]");
  require(t_max >= 0 && std::isfinite(t_max), "generate_window: t_max must be finite and >= 0");
  if (lambda_prime) require(*lambda_prime >= 0, "generate_window: lambda' must be >= 0");
  Rng rng(seed);
  EventWindow::Channels ch;
  auto poisson_times = [&](double rate, std::vector<double>& out) {
    if (rate <= 0) return;
    double t = 0.0;
    for (;;) {
      t += exponential(rng, rate);
      if (t > t_max) break;
      out.push_back(t);
    }
  };
  auto draw_marks = [&](std::size_t n, std::vector<std::uint8_t>& out) {
    out.assign(n, mark_prob >= 1 ? 1 : 0);
    if (mark_prob > 0 && mark_prob < 1)
      for (auto& m : out) m = uniform01(rng) < mark_prob;
  };
  int n = lattice->size(), E = lattice->edge_count();
  ch.death.resize(n);
  ch.basic.resize(E);
  ch.extra.resize(E);
  ch.basic_marks.resize(E);
  ch.extra_marks.resize(E);
  for (int x = 0; x < n; ++x) poisson_times(1.0, ch.death[x]);
  for (int e = 0; e < E; ++e) {
    poisson_times(lambda, ch.basic[e]);
    draw_marks(ch.basic[e].size(), ch.basic_marks[e]);
  }
  double extra_rate = lambda_prime && *lambda_prime > lambda ? *lambda_prime - lambda : 0.0;
  for (int e = 0; e < E; ++e) {
    poisson_times(extra_rate, ch.extra[e]);
    draw_marks(ch.extra[e].size(), ch.extra_marks[e]);
  }
  return EventWindow(std::move(lattice), t_max, lambda, lambda_prime, mark_prob, seed, std::move(ch));
}

EventWindow EventWindow::restrict_to_box(int center, int r) const {
  require(center >= 0 && center < lat_->size(), "restrict_to_box: center out of range");
  require(r >= 0, "restrict_to_box: radius must be nonnegative");
  if (lat_->is_torus() && 2 * r + 1 > lat_->side()) throw DomainError("restrict_to_box: radius must be < N/2");
  auto box = Lattice::box(lat_->dim(), r);
  std::vector<int> to_outer(box->size(), -1);
  for (int j = 0; j < box->size(); ++j) {
    auto c = box->coords(j);
    auto s = lat_->offset(center, c);
    if (s) to_outer[j] = *s;
  }
  Channels ch;
  ch.death.resize(box->size());
  ch.basic.resize(box->edge_count());
  ch.extra.resize(box->edge_count());
  ch.basic_marks.resize(box->edge_count());
  ch.extra_marks.resize(box->edge_count());
  for (int j = 0; j < box->size(); ++j) {
    int x = to_outer[j];
    if (x < 0) continue;
    ch.death[j] = ch_.death[x];
    for (int e = box->edge_begin(j); e < box->edge_begin(j) + box->degree(j); ++e) {
      int y = to_outer[box->edge_target(e)];
      if (y < 0) continue;
      for (int f = lat_->edge_begin(x); f < lat_->edge_begin(x) + lat_->degree(x); ++f) {
        if (lat_->edge_target(f) != y) continue;
        ch.basic[e] = ch_.basic[f];
        ch.extra[e] = ch_.extra[f];
        ch.basic_marks[e] = ch_.basic_marks[f];
        ch.extra_marks[e] = ch_.extra_marks[f];
      }
    }
  }
  return EventWindow(box, t_max_, lambda_, lambda_prime_, mark_prob_, seed_, std::move(ch));
}

// ---- reachability ----

static bool arrow_allowed(Channel c, ArrowClasses a) {
  return c == Channel::basic || (c == Channel::extra && a == ArrowClasses::basic_and_extra);
}

std::vector<std::uint8_t> reachable_at(const EventWindow& w, const PathQuery& q) {
  require(q.s >= 0 && q.s <= q.t && q.t <= w.t_max(), "PathQuery: need 0 <= s <= t <= t_max");
  int n = w.lattice().size();
  std::vector<std::uint8_t> allowed(n, 1);
  if (q.restriction) {
    std::fill(allowed.begin(), allowed.end(), 0);
    for (int x : *q.restriction) allowed.at(x) = 1;
  }
  std::vector<std::uint8_t> reach(n, 0);
  for (int x : q.from_set) {
    require(x >= 0 && x < n, "PathQuery: site out of range");
    if (allowed[x]) reach[x] = 1;
  }
  for (const auto& ev : w.events()) {
    if (ev.time <= q.s) continue;
    if (ev.time > q.t) break;
    if (ev.channel == Channel::death) {
      reach[ev.from] = 0;
    } else if (arrow_allowed(ev.channel, q.arrows) && reach[ev.from] && allowed[ev.to]) {
      reach[ev.to] = 1;
    }
  }
  return reach;
}

bool reaches(const EventWindow& w, const PathQuery& q) {
  if (q.from_set.empty() || q.to_set.empty()) return false;
  auto reach = reachable_at(w, q);
  for (int y : q.to_set) {
    require(y >= 0 && y < static_cast<int>(reach.size()), "PathQuery: site out of range");
    if (reach[y]) return true;
  }
  return false;
}

void apply_one_type(std::vector<std::uint8_t>& z, const WindowEvent& ev, ArrowClasses arrows) {
  if (ev.channel == Channel::death) z[ev.from] = 0;
  else if (arrow_allowed(ev.channel, arrows) && z[ev.from]) z[ev.to] = 1;
}

void apply_two_type(std::vector<std::uint8_t>& xi, const WindowEvent& ev) {
  if (ev.channel == Channel::death) {
    xi[ev.from] = 0;
  } else if (xi[ev.to] == 0) {
    if (ev.channel == Channel::basic && xi[ev.from] != 0) xi[ev.to] = xi[ev.from];
    else if (ev.channel == Channel::extra && xi[ev.from] == 2) xi[ev.to] = 2;
  }
}

template <class Apply>
static Trajectory replay(const EventWindow& w, std::vector<std::uint8_t> state, Apply apply) {
  Trajectory tr;
  tr.lattice = w.lattice_ptr();
  tr.initial.assign(state.begin(), state.end());
  tr.seed = w.seed();
  for (const auto& ev : w.events()) {
    int site = ev.channel == Channel::death ? ev.from : ev.to;
    std::uint8_t before = state[site];
    apply(state, ev);
    if (state[site] == before) continue;
    if (ev.channel == Channel::death)
      tr.events.push_back({ev.time, site, double(before), 0.0, Cause::death, -1, false});
    else
      tr.events.push_back({ev.time, site, 0.0, double(state[site]), Cause::birth, ev.from, ev.mark});
  }
  tr.final_time = w.t_max();
  tr.stop = StopReason::horizon;
  tr.event_count = static_cast<std::int64_t>(tr.events.size());
  return tr;
}

Trajectory one_type_from_window(const EventWindow& w, std::span<const int> initial, ArrowClasses arrows) {
  std::vector<std::uint8_t> z(w.lattice().size(), 0);
  for (int x : initial) {
    require(x >= 0 && x < w.lattice().size(), "one_type_from_window: site out of range");
    z[x] = 1;
  }
  return replay(w, std::move(z), [arrows](auto& s, const WindowEvent& ev) { apply_one_type(s, ev, arrows); });
}

Trajectory two_type_from_window(const EventWindow& w, std::span<const std::uint8_t> initial) {
  require(static_cast<int>(initial.size()) == w.lattice().size(), "two_type_from_window: wrong configuration size");
  for (auto v : initial) require(v <= 2, "two_type_from_window: values must be 0, 1 or 2");
  return replay(w, std::vector<std::uint8_t>(initial.begin(), initial.end()),
                [](auto& s, const WindowEvent& ev) { apply_two_type(s, ev); });
}

bool is_insulated(const EventWindow& w, double t) {
  const Lattice& lat = w.lattice();
  require(!lat.is_torus(), "is_insulated: restrict the window to a box first");
  require(t >= 0 && t <= w.t_max(), "is_insulated: t outside [0, t_max]");
  int d = lat.dim(), n = lat.size();
  int limit = 2 * (lat.size_param() / 10);
  // per site and axis: coordinate range of the starting points of paths ending here
  std::vector<int> lo(static_cast<std::size_t>(n) * d), hi(lo.size()), pos(lo.size());
  for (int x = 0; x < n; ++x)
    for (int a = 0; a < d; ++a) lo[x * d + a] = hi[x * d + a] = pos[x * d + a] = lat.coord(x, a);
  for (const auto& ev : w.events()) {
    if (ev.time > t) break;
    if (ev.channel == Channel::death) {
      for (int a = 0; a < d; ++a) lo[ev.from * d + a] = hi[ev.from * d + a] = pos[ev.from * d + a];
      continue;
    }
    for (int a = 0; a < d; ++a) {
      int y = ev.to * d + a, x = ev.from * d + a;
      lo[y] = std::min(lo[y], lo[x]);
      hi[y] = std::max(hi[y], hi[x]);
      if (pos[y] - lo[y] > limit || hi[y] - pos[y] > limit) return false;
    }
  }
  return true;
}

// ---- binary dump ----

namespace {

constexpr char kMagic[8] = {'A', 'C', 'P', 'W', 'I', 'N', 'D', 'W'};
constexpr std::uint32_t kVersion = 1;

void put_u64(std::ostream& o, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  o.write(reinterpret_cast<const char*>(b), 8);
}
void put_u32(std::ostream& o, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  o.write(reinterpret_cast<const char*>(b), 4);
}
void put_f64(std::ostream& o, double x) { put_u64(o, std::bit_cast<std::uint64_t>(x)); }

std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  require(static_cast<bool>(in), "load_window: truncated stream");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}
std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  require(static_cast<bool>(in), "load_window: truncated stream");
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}
double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

void put_times(std::ostream& o, const std::vector<double>& ts) {
  put_u64(o, ts.size());
  for (double t : ts) put_f64(o, t);
}
void put_marks(std::ostream& o, const std::vector<std::uint8_t>& ms) {
  put_u64(o, ms.size());
  o.write(reinterpret_cast<const char*>(ms.data()), static_cast<std::streamsize>(ms.size()));
}
std::vector<double> get_times(std::istream& in) {
  std::uint64_t n = get_u64(in);
  require(n < (1ULL << 40), "load_window: implausible channel length");
  std::vector<double> ts(n);
  for (auto& t : ts) t = get_f64(in);
  return ts;
}
std::vector<std::uint8_t> get_marks(std::istream& in) {
  std::uint64_t n = get_u64(in);
  require(n < (1ULL << 40), "load_window: implausible channel length");
  std::vector<std::uint8_t> ms(n);
  in.read(reinterpret_cast<char*>(ms.data()), static_cast<std::streamsize>(n));
  require(static_cast<bool>(in), "load_window: truncated stream");
  return ms;
}

}  // namespace

void save_window(const EventWindow& w, std::ostream& o) {
  o.write(kMagic, 8);
  put_u32(o, kVersion);
  const Lattice& lat = w.lattice();
  o.put(static_cast<char>(lat.kind()));
  put_u32(o, static_cast<std::uint32_t>(lat.dim()));
  put_u32(o, static_cast<std::uint32_t>(lat.size_param()));
  put_f64(o, w.lambda());
  o.put(w.lambda_prime() ? 1 : 0);
  put_f64(o, w.lambda_prime().value_or(0.0));
  put_f64(o, w.mark_prob());
  put_f64(o, w.t_max());
  put_u64(o, w.seed());
  const auto& ch = w.channels();
  for (const auto& c : ch.death) put_times(o, c);
  for (std::size_t e = 0; e < ch.basic.size(); ++e) {
    put_times(o, ch.basic[e]);
    put_marks(o, ch.basic_marks[e]);
  }
  for (std::size_t e = 0; e < ch.extra.size(); ++e) {
    put_times(o, ch.extra[e]);
    put_marks(o, ch.extra_marks[e]);
  }
}

EventWindow load_window(std::istream& in) {
  char magic[8];
  in.read(magic, 8);
  require(static_cast<bool>(in) && std::memcmp(magic, kMagic, 8) == 0, "load_window: bad magic");
  require(get_u32(in) == kVersion, "load_window: unsupported version");
  int kind = in.get();
  int d = static_cast<int>(get_u32(in));
  int p = static_cast<int>(get_u32(in));
  LatticePtr lat;
  if (kind == 0) lat = Lattice::torus({d, p});
  else if (kind == 1) lat = Lattice::box(d, p);
  else throw ValidationError("load_window: unknown lattice kind");
  double lambda = get_f64(in);
  bool has_lp = in.get() == 1;
  double lp = get_f64(in);
  double mark_prob = get_f64(in);
  double t_max = get_f64(in);
  std::uint64_t seed = get_u64(in);
  EventWindow::Channels ch;
  ch.death.resize(lat->size());
  for (auto& c : ch.death) c = get_times(in);
  int E = lat->edge_count();
  ch.basic.resize(E);
  ch.basic_marks.resize(E);
  ch.extra.resize(E);
  ch.extra_marks.resize(E);
  for (int e = 0; e < E; ++e) {
    ch.basic[e] = get_times(in);
    ch.basic_marks[e] = get_marks(in);
  }
  for (int e = 0; e < E; ++e) {
    ch.extra[e] = get_times(in);
    ch.extra_marks[e] = get_marks(in);
  }
  return EventWindow(lat, t_max, lambda, has_lp ? std::optional<double>(lp) : std::nullopt, mark_prob, seed,
                     std::move(ch));
}

}  // namespace acp
