#include "acp/torus.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "acp/errors.hpp"

namespace acp {

std::int64_t TorusSpec::site_count() const {
  std::int64_t n = 1;
  for (int i = 0; i < d; ++i) n *= N;
  return n;
}

void TorusSpec::validate() const {
  require(d >= 1, "TorusSpec: d must be positive");
  require(N >= 2, "TorusSpec: N must be at least 2");
  double sites = std::pow(static_cast<double>(N), d);
  require(sites < 2e9, "TorusSpec: too many sites");
}

static void check_site(const TorusSpec& spec, const Site& u) {
  require(static_cast<int>(u.coords.size()) == spec.d, "site has wrong dimension");
  for (int c : u.coords) require(c >= 0 && c < spec.N, "site coordinate outside [0, N)");
}

static int mod(int a, int n) {
  int r = a % n;
  return r < 0 ? r + n : r;
}

std::vector<Site> neighbors(const TorusSpec& spec, const Site& u) {
  spec.validate();
  check_site(spec, u);
  std::vector<Site> out;
  for (int i = 0; i < spec.d; ++i) {
    for (int s : {1, -1}) {
      Site v = u;
      v.coords[i] = mod(v.coords[i] + s, spec.N);
      if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
    }
  }
  return out;
}

Site shift(const TorusSpec& spec, const Site& u, const Site& v) {
  spec.validate();
  check_site(spec, u);
  check_site(spec, v);
  Site w = v;
  for (int i = 0; i < spec.d; ++i) w.coords[i] = mod(v.coords[i] - u.coords[i], spec.N);
  return w;
}

static std::pair<int, int> embed_range(int N) {
  if (N % 2 == 1) return {-(N / 2), N / 2};
  return {-(N / 2), N / 2 - 1};
}

Site embed(const TorusSpec& spec, const std::vector<int>& x) {
  spec.validate();
  require(static_cast<int>(x.size()) == spec.d, "embed: wrong dimension");
  auto [lo, hi] = embed_range(spec.N);
  Site u;
  for (int c : x) {
    require(c >= lo && c <= hi, "embed: coordinate " + std::to_string(c) + " outside the embedding domain");
    u.coords.push_back(mod(c, spec.N));
  }
  return u;
}

std::vector<int> unembed(const TorusSpec& spec, const Site& u) {
  spec.validate();
  check_site(spec, u);
  auto [lo, hi] = embed_range(spec.N);
  (void)lo;
  std::vector<int> x;
  for (int c : u.coords) x.push_back(c > hi ? c - spec.N : c);
  return x;
}

std::vector<std::vector<int>> box_offsets(int d, int r) {
  std::vector<std::vector<int>> out;
  std::vector<int> x(d, -r);
  for (;;) {
    out.push_back(x);
    int i = d - 1;
    while (i >= 0 && x[i] == r) {
      x[i] = -r;
      --i;
    }
    if (i < 0) break;
    ++x[i];
  }
  return out;
}

std::vector<Site> box_sites(const TorusSpec& spec, const TorusBox& b) {
  spec.validate();
  check_site(spec, b.center);
  require(b.radius >= 0, "box radius must be nonnegative");
  if (2 * b.radius + 1 > spec.N) throw DomainError("box radius must be < N/2");
  std::vector<Site> out;
  for (const auto& x : box_offsets(spec.d, b.radius)) {
    Site v = b.center;
    for (int i = 0; i < spec.d; ++i) v.coords[i] = mod(v.coords[i] + x[i], spec.N);
    out.push_back(v);
  }
  return out;
}

std::int64_t site_index(const TorusSpec& spec, const Site& u) {
  check_site(spec, u);
  std::int64_t idx = 0;
  for (int i = spec.d - 1; i >= 0; --i) idx = idx * spec.N + u.coords[i];
  return idx;
}

Site site_at(const TorusSpec& spec, std::int64_t index) {
  require(index >= 0 && index < spec.site_count(), "site index out of range");
  Site u;
  for (int i = 0; i < spec.d; ++i) {
    u.coords.push_back(static_cast<int>(index % spec.N));
    index /= spec.N;
  }
  return u;
}

int default_density_radius(int N) {
  return std::max(1, static_cast<int>(std::floor(std::pow(static_cast<double>(N), 1.0 / 288.0))));
}

bool in_density_class(const TorusSpec& spec, const std::vector<Site>& occupied, int window_radius) {
  spec.validate();
  auto lat = Lattice::torus(spec);
  std::vector<std::uint8_t> occ(lat->size(), 0);
  for (const auto& s : occupied) occ[site_index(spec, s)] = 1;
  return in_density_class(*lat, occ, window_radius);
}

// ---- Lattice ----

Lattice::Lattice(Kind kind, int d, int side) : kind_(kind), d_(d), side_(side) {
  double sites = std::pow(static_cast<double>(side), d);
  require(sites < 2e9, "Lattice: too many sites");
  n_ = static_cast<int>(sites + 0.5);
  off_.assign(n_ + 1, 0);
  std::vector<int> c(d);
  for (int i = 0; i < n_; ++i) {
    off_[i] = static_cast<int>(adj_.size());
    int rem = i;
    for (int a = 0; a < d; ++a) {
      c[a] = rem % side;
      rem /= side;
    }
    int stride = 1;
    for (int a = 0; a < d; ++a) {
      for (int s : {1, -1}) {
        int ca = c[a] + s;
        if (kind == Kind::torus) {
          ca = mod(ca, side);
        } else if (ca < 0 || ca >= side) {
          continue;
        }
        int j = i + (ca - c[a]) * stride;
        if (std::find(adj_.begin() + off_[i], adj_.end(), j) == adj_.end() && j != i) {
          adj_.push_back(j);
          src_.push_back(i);
        }
      }
      stride *= side;
    }
  }
  off_[n_] = static_cast<int>(adj_.size());
}

std::shared_ptr<const Lattice> Lattice::torus(const TorusSpec& spec) {
  spec.validate();
  return std::shared_ptr<const Lattice>(new Lattice(Kind::torus, spec.d, spec.N));
}

std::shared_ptr<const Lattice> Lattice::box(int d, int r) {
  require(d >= 1, "box lattice: d must be positive");
  require(r >= 0, "box lattice: radius must be nonnegative");
  return std::shared_ptr<const Lattice>(new Lattice(Kind::box, d, 2 * r + 1));
}

TorusSpec Lattice::torus_spec() const {
  require(is_torus(), "lattice is not a torus");
  return {d_, side_};
}

int Lattice::coord(int i, int axis) const {
  int c = i;
  for (int a = 0; a < axis; ++a) c /= side_;
  c %= side_;
  return is_torus() ? c : c - size_param();
}

std::vector<int> Lattice::coords(int i) const {
  std::vector<int> c(d_);
  int shiftv = is_torus() ? 0 : size_param();
  for (int a = 0; a < d_; ++a) {
    c[a] = i % side_ - shiftv;
    i /= side_;
  }
  return c;
}

int Lattice::index(std::span<const int> c) const {
  require(static_cast<int>(c.size()) == d_, "Lattice::index: wrong dimension");
  int shiftv = is_torus() ? 0 : size_param();
  int idx = 0;
  for (int a = d_ - 1; a >= 0; --a) {
    int v = c[a] + shiftv;
    require(v >= 0 && v < side_, "Lattice::index: coordinate out of range");
    idx = idx * side_ + v;
  }
  return idx;
}

int Lattice::origin() const {
  std::vector<int> o(d_, 0);
  return index(o);
}

std::optional<int> Lattice::offset(int i, std::span<const int> x) const {
  int idx = 0, stride = 1;
  for (int a = 0; a < d_; ++a) {
    int c = i % side_;
    i /= side_;
    int v = c + x[a];
    if (is_torus()) {
      v = mod(v, side_);
    } else if (v < 0 || v >= side_) {
      return std::nullopt;
    }
    idx += v * stride;
    stride *= side_;
  }
  return idx;
}

// ---- density class ----

bool in_density_class(const Lattice& lat, std::span<const std::uint8_t> occ, int w) {
  require(w >= 1, "density window radius must be positive");
  if (2 * w + 1 > lat.side()) throw DomainError("density window radius must be < N/2");
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
    if (!hit) return false;
  }
  return true;
}

DensityTracker::DensityTracker(LatticePtr lattice, int w, std::span<const std::uint8_t> occupied)
    : lat_(std::move(lattice)), window_(box_offsets(lat_->dim(), w)), cover_(lat_->size(), 0),
      occ_(occupied.begin(), occupied.end()) {
  require(lat_->is_torus(), "DensityTracker: torus lattice required");
  require(w >= 1, "density window radius must be positive");
  if (2 * w + 1 > lat_->side()) throw DomainError("density window radius must be < N/2");
  for (int v = 0; v < lat_->size(); ++v)
    if (occ_[v])
      for (const auto& o : window_) ++cover_[*lat_->offset(v, o)];
  for (int c : cover_) uncovered_ += (c == 0);
}

void DensityTracker::set(int site, bool occupied) {
  if (static_cast<bool>(occ_[site]) == occupied) return;
  occ_[site] = occupied;
  int delta = occupied ? 1 : -1;
  for (const auto& o : window_) {
    int x = *lat_->offset(site, o);
    if (cover_[x] == 0) --uncovered_;
    cover_[x] += delta;
    if (cover_[x] == 0) ++uncovered_;
  }
}

}  // namespace acp
