#include "acp/local.hpp"

#include <bit>
#include <cmath>
#include <cstdlib>

#include "acp/errors.hpp"

namespace acp {

static int cell_count(int d, int ell) {
  double c = std::pow(2.0 * ell + 1.0, d);
  require(c <= 64, "local window Q(o, ell) has more than 64 cells");
  return static_cast<int>(c);
}

PatternMap::PatternMap(LatticePtr lattice, int ell) : lat_(std::move(lattice)), ell_(ell) {
  require(ell >= 0, "PatternMap: ell must be >= 0");
  if (lat_->is_torus()) require(2 * ell + 1 <= lat_->side(), "local window radius must be < N/2");
  cells_ = cell_count(lat_->dim(), ell);
  offsets_ = box_offsets(lat_->dim(), ell);
  map_.resize(static_cast<std::size_t>(lat_->size()) * cells_);
  for (int u = 0; u < lat_->size(); ++u)
    for (int i = 0; i < cells_; ++i) {
      auto s = lat_->offset(u, offsets_[i]);
      map_[static_cast<std::size_t>(u) * cells_ + i] = s ? *s : -1;
    }
}

std::uint64_t PatternMap::code(std::span<const std::uint8_t> occ, int u) const {
  std::uint64_t c = 0;
  const int* m = &map_[static_cast<std::size_t>(u) * cells_];
  for (int i = 0; i < cells_; ++i)
    if (m[i] >= 0 && occ[m[i]]) c |= std::uint64_t{1} << i;
  return c;
}

std::uint64_t PatternMap::landscape_code(std::span<const std::uint8_t> occ, int u) const {
  std::uint64_t c = code(occ, u);
  int o = origin_cell();
  std::uint64_t low = c & ((std::uint64_t{1} << o) - 1);
  std::uint64_t high = o + 1 < 64 ? c >> (o + 1) : 0;
  return low | (high << o);
}

int LocalLandscape::bits() const { return cell_count(d, ell) - 1; }

bool LocalLandscape::occupied(std::span<const int> x) const {
  require(static_cast<int>(x.size()) == d, "LocalLandscape: offset has wrong dimension");
  int idx = 0;
  bool origin = true;
  for (int a = 0; a < d; ++a) {
    require(std::abs(x[a]) <= ell, "LocalLandscape: offset outside the window");
    idx = idx * (2 * ell + 1) + (x[a] + ell);
    origin = origin && x[a] == 0;
  }
  require(!origin, "LocalLandscape: the origin is not part of the landscape");
  int o = (bits() + 1) / 2;
  if (idx > o) --idx;
  return (code >> idx) & 1;
}

int LocalLandscape::occupied_count() const { return std::popcount(code); }

bool LocalLandscape::has_occupied_neighbour() const {
  if (ell < 1) return false;
  for (int a = 0; a < d; ++a)
    for (int s : {-1, 1}) {
      std::vector<int> x(d, 0);
      x[a] = s;
      if (occupied(x)) return true;
    }
  return false;
}

LocalFunction::LocalFunction(int d, int ell, Rule rule) : d_(d), ell_(ell), rule_(std::move(rule)) {
  require(d >= 1 && ell >= 0, "LocalFunction: bad window");
  cell_count(d, ell);
}

int LocalFunction::cells() const { return cell_count(d_, ell_); }

LocalFunction LocalFunction::constant(int d, double c) {
  return LocalFunction(d, 0, [c](std::uint64_t) { return c; });
}

LocalFunction LocalFunction::q(int d) {
  auto offs = box_offsets(d, 1);
  int origin = static_cast<int>(offs.size()) / 2;
  std::uint64_t nbr_mask = 0;
  for (std::size_t i = 0; i < offs.size(); ++i) {
    int l1 = 0;
    for (int c : offs[i]) l1 += std::abs(c);
    if (l1 == 1) nbr_mask |= std::uint64_t{1} << i;
  }
  return LocalFunction(d, 1, [origin, nbr_mask](std::uint64_t code) {
    if ((code >> origin) & 1) return 0.0;
    return static_cast<double>(std::popcount(code & nbr_mask));
  });
}

LocalFunction LocalFunction::table(int d, int ell, std::vector<double> values) {
  int cells = cell_count(d, ell);
  require(cells <= 24, "LocalFunction::table: window too large for a table");
  require(values.size() == (std::size_t{1} << cells), "LocalFunction::table: need 2^cells entries");
  return LocalFunction(d, ell, [v = std::move(values)](std::uint64_t code) { return v[code]; });
}

LocalFunction LocalFunction::random_table(int d, int ell, Rng& rng) {
  int cells = cell_count(d, ell);
  require(cells <= 24, "LocalFunction::random_table: window too large for a table");
  std::vector<double> v(std::size_t{1} << cells);
  for (auto& x : v) x = uniform01(rng);
  return table(d, ell, std::move(v));
}

LocalFunction LocalFunction::indicator(int d, int ell, std::uint64_t pattern) {
  return LocalFunction(d, ell, [pattern](std::uint64_t code) { return code == pattern ? 1.0 : 0.0; });
}

double LocalFunction::at(const PatternMap& map, std::span<const std::uint8_t> occ, int u) const {
  require(map.ell() == ell_, "LocalFunction::at: pattern map radius mismatch");
  return rule_(map.code(occ, u));
}

}  // namespace acp
