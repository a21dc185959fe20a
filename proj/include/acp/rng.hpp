#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace acp {

using Rng = std::mt19937_64;

// uniform on [0,1) with 53 random bits
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double exponential(Rng& rng, double rate) {
  return -std::log1p(-uniform01(rng)) / rate;
}

inline bool bernoulli(Rng& rng, double p) { return uniform01(rng) < p; }

// uniform integer in [0, n)
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(rng);
}

double standard_normal(Rng& rng);

std::uint64_t splitmix64(std::uint64_t x);

// Stream seed for a label path under a master seed.
//
// h0 = splitmix64(master ^ 0x6a09e667f3bcc909), then for every label
// h = splitmix64(h ^ fnv1a64(label)) followed by h = splitmix64(h + length(label)).
// The length step keeps ("ab","c") and ("a","bc") apart.
std::uint64_t derive_seed(std::uint64_t master, const std::vector<std::string>& labels);

namespace detail {
inline std::string seed_label(std::string_view s) { return std::string(s); }
inline std::string seed_label(const char* s) { return std::string(s); }
inline std::string seed_label(const std::string& s) { return s; }
template <class I>
  requires std::is_integral_v<I>
std::string seed_label(I v) {
  return std::to_string(v);
}
}  // namespace detail

template <class... Labels>
std::uint64_t seed_for(std::uint64_t master, const Labels&... labels) {
  return derive_seed(master, std::vector<std::string>{detail::seed_label(labels)...});
}

}  // namespace acp
