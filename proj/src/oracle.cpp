#include "acp/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "acp/errors.hpp"

namespace acp {

FiniteModel FiniteModel::one_type(LatticePtr lattice, double lambda) {
  require(lambda >= 0, "oracle: lambda must be >= 0");
  return {std::move(lattice), {0.0, 1.0}, {0.0, lambda}, {{1.0, 0.0}, {0.0, 1.0}}};
}

FiniteModel FiniteModel::two_type(LatticePtr lattice, double lambda, double lambda_prime) {
  require(lambda >= 0 && lambda_prime >= 0, "oracle: rates must be >= 0");
  return {std::move(lattice),
          {0.0, 1.0, 2.0},
          {0.0, lambda, lambda_prime},
          {{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}}};
}

FiniteModel FiniteModel::adaptive(LatticePtr lattice, const AdaptiveParams& p, std::vector<double> types) {
  require(p.delta >= 0 && p.delta < 1, "oracle: delta must lie in [0,1)");
  std::sort(types.begin(), types.end());
  types.erase(std::unique(types.begin(), types.end()), types.end());
  for (double v : types) require(v > 0, "oracle: declared types must be positive");
  FiniteModel m;
  m.lattice = std::move(lattice);
  m.values.push_back(0.0);
  for (double v : types) m.values.push_back(v);
  std::size_t L = m.values.size();
  m.birth_rate.assign(L, 0.0);
  m.child_law.assign(L, std::vector<double>(L, 0.0));
  m.child_law[0][0] = 1.0;
  for (std::size_t l = 1; l < L; ++l) {
    double v = m.values[l];
    m.birth_rate[l] = v;
    auto [keep, mut] = birth_split(p.delta, p.b, v);
    m.child_law[l][l] += keep;
    if (mut > 0) {
      if (!p.K.discrete())
        throw DomainError("oracle: a continuous kernel has no finite reachable type set");
      for (auto [w, prob] : p.K.support(v)) {
        int target = m.label_of(w);
        if (target < 0) throw DomainError("oracle: kernel leaves the declared type set at " + std::to_string(w));
        m.child_law[l][target] += mut * prob;
      }
    }
  }
  return m;
}

int FiniteModel::label_of(double value) const {
  for (std::size_t l = 0; l < values.size(); ++l)
    if (values[l] == value) return static_cast<int>(l);
  return -1;
}

ExactOracle::ExactOracle(FiniteModel model, std::size_t cap) : model_(std::move(model)) {
  m_ = static_cast<int>(model_.values.size());
  int n = model_.lattice->size();
  double count = std::pow(static_cast<double>(m_), n);
  if (count > static_cast<double>(cap))
    throw StateCapExceeded("exact oracle: " + std::to_string(m_) + "^" + std::to_string(n) +
                           " states exceed the cap of " + std::to_string(cap));
  states_ = static_cast<std::size_t>(count + 0.5);
  off_.assign(states_ + 1, 0);
  exit_.assign(states_, 0.0);
  const Lattice& lat = *model_.lattice;
  for (std::size_t s = 0; s < states_; ++s) {
    off_[s] = target_.size();
    auto x = decode(s);
    std::map<std::size_t, double> out;
    for (int u = 0; u < n; ++u) {
      if (x[u] == 0) continue;
      auto y = x;
      y[u] = 0;
      out[encode(y)] += 1.0;
      double br = model_.birth_rate[x[u]];
      if (br <= 0) continue;
      for (int v : lat.neighbors(u)) {
        if (x[v] != 0) continue;
        for (int c = 1; c < m_; ++c) {
          double w = model_.child_law[x[u]][c];
          if (w <= 0) continue;
          auto z = x;
          z[v] = c;
          out[encode(z)] += br * w;
        }
      }
    }
    for (auto [t, r] : out) {
      target_.push_back(t);
      rate_.push_back(r);
      exit_[s] += r;
    }
  }
  off_[states_] = target_.size();
}

std::vector<int> ExactOracle::decode(std::size_t s) const {
  std::vector<int> x(model_.lattice->size());
  for (auto& v : x) {
    v = static_cast<int>(s % m_);
    s /= m_;
  }
  return x;
}

std::size_t ExactOracle::encode(const std::vector<int>& x) const {
  std::size_t s = 0;
  for (std::size_t i = x.size(); i-- > 0;) s = s * m_ + x[i];
  return s;
}

std::vector<double> ExactOracle::point_mass(const std::vector<double>& config) const {
  require(static_cast<int>(config.size()) == model_.lattice->size(), "oracle: configuration has wrong size");
  std::vector<int> x(config.size());
  for (std::size_t i = 0; i < config.size(); ++i) {
    x[i] = model_.label_of(config[i]);
    require(x[i] >= 0, "oracle: value " + std::to_string(config[i]) + " is not a declared type");
  }
  std::vector<double> p(states_, 0.0);
  p[encode(x)] = 1.0;
  return p;
}

std::vector<double> ExactOracle::transient(const std::vector<double>& p0, double t, double tol) const {
  require(p0.size() == states_, "oracle: distribution has wrong size");
  require(t >= 0, "oracle: t must be >= 0");
  double Lam = *std::max_element(exit_.begin(), exit_.end());
  if (t == 0 || Lam == 0) return p0;
  double lt = Lam * t;
  std::vector<double> v = p0, nv(states_), out(states_, 0.0);
  double cum = 0.0;
  for (int k = 0;; ++k) {
    double w = std::exp(-lt + k * std::log(lt) - std::lgamma(k + 1.0));
    for (std::size_t s = 0; s < states_; ++s) out[s] += w * v[s];
    cum += w;
    if (1.0 - cum < tol && k > lt) break;
    if (k > 100000 + 10 * lt) throw DomainError("oracle: uniformization failed to converge");
    for (std::size_t s = 0; s < states_; ++s) nv[s] = v[s] * (1.0 - exit_[s] / Lam);
    for (std::size_t s = 0; s < states_; ++s) {
      if (v[s] == 0) continue;
      for (std::size_t e = off_[s]; e < off_[s + 1]; ++e) nv[target_[e]] += v[s] * rate_[e] / Lam;
    }
    std::swap(v, nv);
  }
  return out;
}

std::vector<double> ExactOracle::transient_series(const std::vector<double>& p0, double t) const {
  require(p0.size() == states_, "oracle: distribution has wrong size");
  std::size_t S = states_;
  std::vector<double> Q(S * S, 0.0);
  for (std::size_t s = 0; s < S; ++s) {
    Q[s * S + s] -= exit_[s];
    for (std::size_t e = off_[s]; e < off_[s + 1]; ++e) Q[s * S + target_[e]] += rate_[e];
  }
  double norm = 0.0;
  for (std::size_t s = 0; s < S; ++s) norm = std::max(norm, 2.0 * exit_[s]);
  int steps = std::max(1, static_cast<int>(std::ceil(norm * t / 0.5)));
  double h = t / steps;
  std::vector<double> v = p0, term(S), next(S);
  for (int st = 0; st < steps; ++st) {
    term = v;
    std::vector<double> acc = v;
    for (int k = 1; k <= 40; ++k) {
      std::fill(next.begin(), next.end(), 0.0);
      for (std::size_t i = 0; i < S; ++i) {
        if (term[i] == 0) continue;
        const double* row = &Q[i * S];
        for (std::size_t j = 0; j < S; ++j) next[j] += term[i] * row[j];
      }
      double mx = 0.0;
      for (std::size_t j = 0; j < S; ++j) {
        term[j] = next[j] * h / k;
        acc[j] += term[j];
        mx = std::max(mx, std::abs(term[j]));
      }
      if (mx < 1e-18) break;
    }
    v = acc;
  }
  return v;
}

double ExactOracle::expectation(const std::vector<double>& dist,
                                const std::function<double(const std::vector<int>&)>& f) const {
  double e = 0.0;
  for (std::size_t s = 0; s < states_; ++s)
    if (dist[s] != 0) e += dist[s] * f(decode(s));
  return e;
}

double ExactOracle::occupied_probability(const std::vector<double>& dist, int site) const {
  return expectation(dist, [site](const std::vector<int>& x) { return x[site] != 0 ? 1.0 : 0.0; });
}

double ExactOracle::time_integral(const std::vector<double>& p0, double a, double b,
                                  const std::function<double(const std::vector<int>&)>& f, int intervals) const {
  require(b >= a && a >= 0, "oracle: need 0 <= a <= b");
  if (intervals % 2) ++intervals;
  double h = (b - a) / intervals;
  std::vector<double> fv(states_);
  for (std::size_t s = 0; s < states_; ++s) fv[s] = f(decode(s));
  auto p = transient(p0, a, 1e-13);
  double total = 0.0;
  for (int i = 0; i <= intervals; ++i) {
    if (i > 0) p = transient(p, h, 1e-13);
    double e = 0.0;
    for (std::size_t s = 0; s < states_; ++s) e += p[s] * fv[s];
    double w = (i == 0 || i == intervals) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    total += w * e;
  }
  return total * h / 3.0;
}

}  // namespace acp
