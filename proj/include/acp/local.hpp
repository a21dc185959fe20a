#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "acp/rng.hpp"
#include "acp/torus.hpp"

namespace acp {

// Site lookup table for the cells of Q(u, ell) around every site u, pulled
// back through psi_N. Cell i corresponds to box_offsets(d, ell)[i].
class PatternMap {
 public:
  PatternMap(LatticePtr lattice, int ell);
  int ell() const { return ell_; }
  int cells() const { return cells_; }
  int origin_cell() const { return cells_ / 2; }
  const std::vector<std::vector<int>>& offsets() const { return offsets_; }
  int site(int u, int cell) const { return map_[static_cast<std::size_t>(u) * cells_ + cell]; }
  // bit i set iff cell i is occupied; requires cells() <= 64
  std::uint64_t code(std::span<const std::uint8_t> occ, int u) const;
  // same with the origin cell removed and later cells shifted down
  std::uint64_t landscape_code(std::span<const std::uint8_t> occ, int u) const;

 private:
  LatticePtr lat_;
  int ell_;
  int cells_;
  std::vector<std::vector<int>> offsets_;
  std::vector<int> map_;
};

// Occupancy pattern on Q(o, ell) \ {o}; bit i is the i-th offset in
// box_offsets(d, ell) order with the origin skipped.
struct LocalLandscape {
  int d = 1;
  int ell = 0;
  std::uint64_t code = 0;
  int bits() const;
  bool occupied(std::span<const int> offset) const;
  int occupied_count() const;
  bool has_occupied_neighbour() const;
  bool operator<(const LocalLandscape& o) const { return code < o.code; }
  bool operator==(const LocalLandscape& o) const = default;
};

// Real function of the pattern on Q(o, ell), origin included.
class LocalFunction {
 public:
  using Rule = std::function<double(std::uint64_t code)>;
  LocalFunction(int d, int ell, Rule rule);

  static LocalFunction constant(int d, double c);
  // q(zeta) = 1{zeta(o)=0} #{occupied neighbours of o}
  static LocalFunction q(int d);
  static LocalFunction table(int d, int ell, std::vector<double> values);
  static LocalFunction random_table(int d, int ell, Rng& rng);
  // 1{zeta restricted to Q(o,ell) equals the pattern}
  static LocalFunction indicator(int d, int ell, std::uint64_t pattern);

  int d() const { return d_; }
  int ell() const { return ell_; }
  int cells() const;
  double operator()(std::uint64_t code) const { return rule_(code); }
  double at(const PatternMap& map, std::span<const std::uint8_t> occ, int u) const;

 private:
  int d_;
  int ell_;
  Rule rule_;
};

}  // namespace acp
