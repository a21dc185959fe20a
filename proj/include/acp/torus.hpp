#pragma once

#include <compare>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace acp {

struct TorusSpec {
  int d = 1;
  int N = 2;
  std::int64_t site_count() const;
  void validate() const;
  bool operator==(const TorusSpec&) const = default;
};

struct Site {
  std::vector<int> coords;
  auto operator<=>(const Site&) const = default;
};

struct TorusBox {
  Site center;
  int radius = 0;
};

std::vector<Site> neighbors(const TorusSpec& spec, const Site& u);
// theta_u(v) = v - u mod N
Site shift(const TorusSpec& spec, const Site& u, const Site& v);
Site embed(const TorusSpec& spec, const std::vector<int>& x);
std::vector<int> unembed(const TorusSpec& spec, const Site& u);
std::vector<Site> box_sites(const TorusSpec& spec, const TorusBox& b);
bool in_density_class(const TorusSpec& spec, const std::vector<Site>& occupied, int window_radius);
// max(1, floor(N^(1/288)))
int default_density_radius(int N);

std::int64_t site_index(const TorusSpec& spec, const Site& u);
Site site_at(const TorusSpec& spec, std::int64_t index);

// Finite graph on which the engines run: either the torus, or a box of Z^d
// with absorbing complement (no edges leave the box).
class Lattice {
 public:
  enum class Kind : std::uint8_t { torus = 0, box = 1 };

  static std::shared_ptr<const Lattice> torus(const TorusSpec& spec);
  static std::shared_ptr<const Lattice> box(int d, int r);

  Kind kind() const { return kind_; }
  bool is_torus() const { return kind_ == Kind::torus; }
  int dim() const { return d_; }
  // N for a torus, 2r+1 for a box
  int side() const { return side_; }
  // N for a torus, r for a box
  int size_param() const { return kind_ == Kind::torus ? side_ : (side_ - 1) / 2; }
  int size() const { return n_; }
  TorusSpec torus_spec() const;

  std::span<const int> neighbors(int i) const {
    return {adj_.data() + off_[i], static_cast<std::size_t>(off_[i + 1] - off_[i])};
  }
  int degree(int i) const { return off_[i + 1] - off_[i]; }
  // directed edge ids are positions in the adjacency array
  int edge_count() const { return static_cast<int>(adj_.size()); }
  int edge_begin(int i) const { return off_[i]; }
  int edge_target(int e) const { return adj_[e]; }
  int edge_source(int e) const { return src_[e]; }

  // torus: coordinates in [0,N); box: coordinates in [-r, r]
  std::vector<int> coords(int i) const;
  int coord(int i, int axis) const;
  int index(std::span<const int> c) const;
  int origin() const;

  // Site reached from i by the displacement x. On the torus x wraps; on a box
  // the result is nullopt when it falls outside.
  std::optional<int> offset(int i, std::span<const int> x) const;

  bool operator==(const Lattice& o) const { return kind_ == o.kind_ && d_ == o.d_ && side_ == o.side_; }

 private:
  Lattice(Kind kind, int d, int side);
  Kind kind_;
  int d_;
  int side_;
  int n_;
  std::vector<int> off_;
  std::vector<int> adj_;
  std::vector<int> src_;
};

using LatticePtr = std::shared_ptr<const Lattice>;

// All displacements of Q(o, r) in lexicographic order (last axis fastest).
std::vector<std::vector<int>> box_offsets(int d, int r);

// Tracks whether an occupied set meets every box of radius w on a torus,
// updated in O((2w+1)^d) per occupancy change.
class DensityTracker {
 public:
  DensityTracker(LatticePtr lattice, int window_radius, std::span<const std::uint8_t> occupied);
  void set(int site, bool occupied);
  bool in_class() const { return uncovered_ == 0; }

 private:
  LatticePtr lat_;
  std::vector<std::vector<int>> window_;
  std::vector<int> cover_;
  std::vector<std::uint8_t> occ_;
  std::int64_t uncovered_ = 0;
};

bool in_density_class(const Lattice& lattice, std::span<const std::uint8_t> occupied, int window_radius);

}  // namespace acp
