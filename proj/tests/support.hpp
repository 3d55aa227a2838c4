#pragma once

// Test-only helpers: small fixture populations and an exhaustive-enumeration
// oracle that counts inclusion frequencies directly instead of using the
// design module's closed forms.

#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <vector>

#include "madi/population.hpp"

namespace testing_support {

inline madi::Population make_population(const std::vector<double>& y, const std::vector<std::vector<double>>& x) {
  std::vector<madi::Unit> units;
  for (std::size_t i = 0; i < y.size(); ++i)
    units.push_back(madi::Unit{static_cast<std::int64_t>(i + 1), y[i], x.empty() ? std::vector<double>{0.0, 0.0} : x[i]});
  return madi::Population(std::move(units));
}

/// y with a two-column x = (i, (i * 7) % 5) for distinct nondegenerate rows.
inline madi::Population make_population(const std::vector<double>& y) {
  std::vector<std::vector<double>> x;
  for (std::size_t i = 0; i < y.size(); ++i)
    x.push_back({static_cast<double>(i + 1), static_cast<double>((i * 7) % 5)});
  return make_population(y, x);
}

inline madi::Partition make_partition(std::initializer_list<int> delta) {
  std::vector<bool> d;
  for (int v : delta) d.push_back(v != 0);
  return madi::Partition(std::move(d));
}

/// Every size-n subset of `frame`, via bitmask enumeration (frames up to 20 units).
inline std::vector<std::vector<std::size_t>> subsets(const std::vector<std::size_t>& frame, std::size_t n) {
  std::vector<std::vector<std::size_t>> out;
  const std::size_t m = frame.size();
  for (unsigned long mask = 0; mask < (1ul << m); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcountl(mask)) != n) continue;
    std::vector<std::size_t> s;
    for (std::size_t k = 0; k < m; ++k)
      if (mask & (1ul << k)) s.push_back(frame[k]);
    out.push_back(std::move(s));
  }
  return out;
}

/// Inclusion probabilities obtained by counting over all equally likely subsets.
struct CountedDesign {
  std::vector<std::size_t> frame;
  std::vector<std::vector<std::size_t>> samples;
  std::vector<double> pi;               // indexed by position in `frame`
  std::vector<std::vector<double>> pi2; // pi2[a][b], diagonal = pi

  CountedDesign(std::vector<std::size_t> f, std::size_t n) : frame(std::move(f)), samples(subsets(frame, n)) {
    const std::size_t m = frame.size();
    pi.assign(m, 0.0);
    pi2.assign(m, std::vector<double>(m, 0.0));
    std::vector<std::size_t> pos_of(*std::max_element(frame.begin(), frame.end()) + 1, 0);
    for (std::size_t a = 0; a < m; ++a) pos_of[frame[a]] = a;
    for (const auto& s : samples)
      for (std::size_t i : s)
        for (std::size_t j : s) pi2[pos_of[i]][pos_of[j]] += 1.0;
    const double count = static_cast<double>(samples.size());
    for (std::size_t a = 0; a < m; ++a) {
      for (std::size_t b = 0; b < m; ++b) pi2[a][b] /= count;
      pi[a] = pi2[a][a];
    }
  }

  /// Mean of f over all samples (each has probability 1 / count).
  double expectation(const std::function<double(const std::vector<std::size_t>&)>& f) const {
    long double acc = 0.0L;
    for (const auto& s : samples) acc += static_cast<long double>(f(s));
    return static_cast<double>(acc / static_cast<long double>(samples.size()));
  }

  /// sum_a sum_b (pi2 - pi pi) (d_a / pi_a)(d_b / pi_b) over the frame, d in frame order.
  double true_variance(const std::vector<double>& d) const {
    long double acc = 0.0L;
    for (std::size_t a = 0; a < frame.size(); ++a)
      for (std::size_t b = 0; b < frame.size(); ++b) {
        const long double delta = pi2[a][b] - static_cast<long double>(pi[a]) * pi[b];
        acc += delta * (d[a] / pi[a]) * (d[b] / pi[b]);
      }
    return static_cast<double>(acc);
  }

  /// Variance over samples of f, computed from the enumerated distribution.
  double variance_of(const std::function<double(const std::vector<std::size_t>&)>& f) const {
    const double mean = expectation(f);
    return expectation([&](const auto& s) { const double v = f(s) - mean; return v * v; });
  }
};

inline bool close_rel(double a, double b, double rel) {
  const double scale = std::max({std::fabs(a), std::fabs(b), 1.0});
  return std::fabs(a - b) <= rel * scale;
}

}  // namespace testing_support
