#include "acp/rng.hpp"

#include "acp/errors.hpp"

namespace acp {

double standard_normal(Rng& rng) {
  // Marsaglia polar method; stays within our own uniform01 so draws are
  // reproducible across standard library implementations.
  for (;;) {
    double u = 2.0 * uniform01(rng) - 1.0;
    double v = 2.0 * uniform01(rng) - 1.0;
    double s = u * u + v * v;
    if (s > 0.0 && s < 1.0) return u * std::sqrt(-2.0 * std::log(s) / s);
  }
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

static std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t master, const std::vector<std::string>& labels) {
  require(!labels.empty(), "derive_seed: label path must be nonempty");
  std::uint64_t h = splitmix64(master ^ 0x6a09e667f3bcc909ULL);
  for (const auto& l : labels) {
    h = splitmix64(h ^ fnv1a64(l));
    h = splitmix64(h + l.size());
  }
  return h;
}

}  // namespace acp
