#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "acp/engine.hpp"
#include "acp/torus.hpp"

namespace acp {

enum class Channel : std::uint8_t { death = 0, basic = 1, extra = 2 };

struct WindowEvent {
  double time;
  Channel channel;
  int from;  // site of a death mark, source of an arrow
  int to;    // equal to from for death marks
  bool mark;
};

// Realized Poisson marks on lattice x [0, t_max].
class EventWindow {
 public:
  struct Channels {
    std::vector<std::vector<double>> death;  // per site
    std::vector<std::vector<double>> basic;  // per directed edge
    std::vector<std::vector<double>> extra;  // per directed edge
    std::vector<std::vector<std::uint8_t>> basic_marks;
    std::vector<std::vector<std::uint8_t>> extra_marks;
  };

  // Hand-built window; ties are broken as in generate_window.
  EventWindow(LatticePtr lattice, double t_max, double lambda, std::optional<double> lambda_prime,
              double mark_prob, std::uint64_t seed, Channels channels);

  const Lattice& lattice() const { return *lat_; }
  LatticePtr lattice_ptr() const { return lat_; }
  double t_max() const { return t_max_; }
  double lambda() const { return lambda_; }
  std::optional<double> lambda_prime() const { return lambda_prime_; }
  double mark_prob() const { return mark_prob_; }
  std::uint64_t seed() const { return seed_; }
  const Channels& channels() const { return ch_; }
  std::span<const WindowEvent> events() const { return merged_; }
  std::size_t event_count() const { return merged_.size(); }

  // Keep the marks and arrows whose endpoints all lie in Q(center, r); the
  // result lives on a box lattice with unwrapped coordinates.
  EventWindow restrict_to_box(int center, int r) const;

  bool operator==(const EventWindow& o) const;

 private:
  void build_merged();
  LatticePtr lat_;
  double t_max_;
  double lambda_;
  std::optional<double> lambda_prime_;
  double mark_prob_;
  std::uint64_t seed_;
  Channels ch_;
  std::vector<WindowEvent> merged_;
};

EventWindow generate_window(LatticePtr lattice, double lambda, std::optional<double> lambda_prime,
                            double mark_prob, double t_max, std::uint64_t seed);

enum class ArrowClasses : std::uint8_t { basic = 1, basic_and_extra = 3 };

struct PathQuery {
  std::vector<int> from_set;
  double s = 0.0;
  std::vector<int> to_set;
  double t = 0.0;
  ArrowClasses arrows = ArrowClasses::basic;
  std::optional<std::vector<int>> restriction;
};

bool reaches(const EventWindow& window, const PathQuery& q);
// Sites x with from_set x {s} ~> (x, t).
std::vector<std::uint8_t> reachable_at(const EventWindow& window, const PathQuery& q);

// Single-step updates shared by the window replays.
void apply_one_type(std::vector<std::uint8_t>& zeta, const WindowEvent& ev, ArrowClasses arrows);
void apply_two_type(std::vector<std::uint8_t>& xi, const WindowEvent& ev);

Trajectory one_type_from_window(const EventWindow& window, std::span<const int> initial,
                                ArrowClasses arrows = ArrowClasses::basic);
Trajectory two_type_from_window(const EventWindow& window, std::span<const std::uint8_t> initial);

// Every infection path within [0, t] fits in a sub-box of radius floor(r/10).
// The window must live on a box lattice.
bool is_insulated(const EventWindow& window, double t);

void save_window(const EventWindow& window, std::ostream& out);
EventWindow load_window(std::istream& in);

}  // namespace acp
