#include "madi/npd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "madi/error.hpp"

namespace madi {

namespace {

// Frame positions ordered by (y, id) ascending.
std::vector<std::size_t> rank_order(const Population& pop) {
  std::vector<std::size_t> order(pop.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (pop.y(a) != pop.y(b)) return pop.y(a) < pop.y(b);
    return pop.unit(a).id < pop.unit(b).id;
  });
  return order;
}

std::vector<std::size_t> ranks(const Population& pop) {
  const auto order = rank_order(pop);
  std::vector<std::size_t> r(pop.size());
  for (std::size_t k = 0; k < order.size(); ++k) r[order[k]] = k;
  return r;
}

Propensity monotone_deciles(const Population& pop, CounterRng& rng) {
  const std::size_t n = pop.size();
  if (n < 10) throw DomainError("decile caps need N >= 10");
  const auto r = ranks(pop);
  Propensity out;
  out.theta.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t decile = r[i] * 10 / n + 1;
    out.theta[i] = 0.1 * static_cast<double>(decile) * rng.uniform01();
  }
  return out;
}

double median(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return lower + (upper - lower) / 2.0;
}

constexpr double kVCeiling = 0.95;
constexpr double kVFloor = 0.01;
constexpr double kVNoise = 0.05;
constexpr double kForcedZeroShare = 0.05;

Propensity v_shape(const Population& pop, CounterRng& rng) {
  const std::size_t n = pop.size();
  const double med = median(pop.y_values());
  double spread = 0.0;
  for (double y : pop.y_values()) spread = std::max(spread, std::fabs(y - med));
  Propensity out;
  out.theta.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double z = spread > 0.0 ? std::fabs(pop.y(i) - med) / spread : 0.0;
    const double eps = rng.uniform(-kVNoise, kVNoise);
    out.theta[i] = std::clamp(std::fabs(kVCeiling * z + eps), kVFloor, kVCeiling);
  }
  // Uniform draw without replacement of the MNAR units.
  const auto n_zero = static_cast<std::size_t>(std::llround(kForcedZeroShare * static_cast<double>(n)));
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t k = 0; k < n_zero; ++k) {
    const std::size_t j = k + static_cast<std::size_t>(rng.below(n - k));
    std::swap(idx[k], idx[j]);
  }
  out.forced_zero.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_zero));
  std::sort(out.forced_zero.begin(), out.forced_zero.end());
  for (std::size_t i : out.forced_zero) out.theta[i] = 0.0;
  return out;
}

Propensity shrinking_spread(const Population& pop, CounterRng& rng) {
  const std::size_t n = pop.size();
  const auto r = ranks(pop);
  Propensity out;
  out.theta.resize(n);
  const double denom = n > 1 ? static_cast<double>(n - 1) : 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double cap = kVCeiling * (1.0 - static_cast<double>(r[i]) / denom);
    out.theta[i] = cap * rng.uniform01();
  }
  return out;
}

Propensity complement(Propensity p) {
  std::vector<bool> forced(p.theta.size(), false);
  for (std::size_t i : p.forced_zero) forced[i] = true;
  for (std::size_t i = 0; i < p.theta.size(); ++i) p.theta[i] = forced[i] ? 0.0 : 1.0 - p.theta[i];
  return p;
}

}  // namespace

const char* to_string(Scenario s) noexcept {
  switch (s) {
    case Scenario::sim1: return "sim1";
    case Scenario::k1: return "k1";
    case Scenario::k2: return "k2";
    case Scenario::k3: return "k3";
    case Scenario::k4: return "k4";
    case Scenario::k5: return "k5";
    case Scenario::k6: return "k6";
    case Scenario::k7: return "k7";
    case Scenario::k8: return "k8";
  }
  return "unknown";
}

Scenario parse_scenario(std::string_view text) {
  if (text == "sim1") return Scenario::sim1;
  if (text.size() == 2 && text[0] == 'k' && text[1] >= '1' && text[1] <= '8')
    return static_cast<Scenario>(static_cast<int>(Scenario::k1) + (text[1] - '1'));
  throw DomainError("unknown scenario '" + std::string(text) + "' (expected sim1 or k1..k8)");
}

bool is_cutoff(Scenario s) noexcept { return s == Scenario::k1 || s == Scenario::k2; }

Propensity theta_sim1(const Population& pop, CounterRng& rng) {
  Propensity p = monotone_deciles(pop, rng);
  p.scenario = Scenario::sim1;
  return p;
}

Propensity theta_scenario(const Population& pop, int k, CounterRng& rng) {
  if (k < 3 || k > 8) throw DomainError("propensity scenarios are k = 3..8, got " + std::to_string(k));
  Propensity p;
  switch (k) {
    case 3: p = monotone_deciles(pop, rng); break;
    case 4: p = complement(monotone_deciles(pop, rng)); break;
    case 5: p = v_shape(pop, rng); break;
    case 6: p = complement(v_shape(pop, rng)); break;
    case 7: p = shrinking_spread(pop, rng); break;
    default: p = complement(shrinking_spread(pop, rng)); break;
  }
  p.scenario = static_cast<Scenario>(static_cast<int>(Scenario::k1) + k - 1);
  return p;
}

Propensity theta_scenario(const Population& pop, Scenario s, CounterRng& rng) {
  if (s == Scenario::sim1) return theta_sim1(pop, rng);
  return theta_scenario(pop, static_cast<int>(s) - static_cast<int>(Scenario::k1) + 1, rng);
}

std::size_t target_size(std::size_t n_units, double fraction) {
  return static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n_units)));
}

Partition cutoff_partition_count(const Population& pop, std::size_t n_a, CutoffDirection direction) {
  if (n_a > pop.size()) throw DomainError("|A| exceeds N");
  std::vector<std::size_t> order(pop.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const bool top = direction == CutoffDirection::top;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (pop.y(a) != pop.y(b)) return top ? pop.y(a) > pop.y(b) : pop.y(a) < pop.y(b);
    return pop.unit(a).id < pop.unit(b).id;
  });
  std::vector<bool> delta(pop.size(), false);
  for (std::size_t k = 0; k < n_a; ++k) delta[order[k]] = true;
  return Partition(std::move(delta));
}

Partition cutoff_partition(const Population& pop, int l, CutoffDirection direction) {
  if (l < 1 || l > 9) throw DomainError("cutoff level l must lie in 1..9");
  // round(0.1 l N) in integers, halves rounded up.
  const std::size_t n_a = (static_cast<std::size_t>(l) * pop.size() * 2 + 10) / 20;
  return cutoff_partition_count(pop, n_a, direction);
}

Partition allocate_npd(const Population& pop, const Propensity& theta, double fraction, CounterRng& rng) {
  const std::size_t n = pop.size();
  if (theta.theta.size() != n) throw DimensionError("propensity does not cover the population");
  if (!(fraction > 0.0 && fraction < 1.0)) throw DomainError("fraction must lie in (0, 1)");
  const std::size_t target = target_size(n, fraction);
  const auto eligible = static_cast<std::size_t>(
      std::count_if(theta.theta.begin(), theta.theta.end(), [](double t) { return t > 0.0; }));
  if (eligible < target)
    throw InfeasibleAllocation("only " + std::to_string(eligible) + " units have theta > 0; |A| = " +
                               std::to_string(target) + " is unreachable");

  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  std::vector<bool> delta(n, false);
  const double max_attempts = 1e6 * static_cast<double>(n);
  double attempts = 0.0;
  std::size_t admitted = 0;
  while (admitted < target) {
    if (++attempts > max_attempts)
      throw InfeasibleAllocation("allocation stalled after " + std::to_string(static_cast<long long>(max_attempts)) +
                                 " attempts with |A| = " + std::to_string(admitted));
    const auto j = static_cast<std::size_t>(rng.below(pool.size()));
    const std::size_t unit = pool[j];
    if (rng.uniform01() < theta.theta[unit]) {
      delta[unit] = true;
      ++admitted;
      pool[j] = pool.back();
      pool.pop_back();
    }
  }
  return Partition(std::move(delta));
}

NpdScenario generate_npd(const Population& pop, Scenario scenario, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw DomainError("fraction must lie in (0, 1)");
  if (is_cutoff(scenario)) {
    const auto dir = scenario == Scenario::k1 ? CutoffDirection::top : CutoffDirection::bottom;
    return NpdScenario{cutoff_partition_count(pop, target_size(pop.size(), fraction), dir), std::nullopt};
  }
  CounterRng theta_rng = derive_stream(seed, {0x7468657461ull});
  CounterRng alloc_rng = derive_stream(seed, {0x616C6C6F63ull});
  Propensity theta = theta_scenario(pop, scenario, theta_rng);
  Partition part = allocate_npd(pop, theta, fraction, alloc_rng);
  return NpdScenario{std::move(part), std::move(theta)};
}

NpdSummary summarize(const Population& pop, const Partition& part) {
  NpdSummary s;
  s.n_a = part.n_a();
  s.n_b = part.n_b();
  if (s.n_a) s.mean_y_a = total_over(pop, part.a_units()) / static_cast<double>(s.n_a);
  if (s.n_b) s.mean_y_b = total_over(pop, part.b_units()) / static_cast<double>(s.n_b);
  return s;
}

void write_propensity_csv(std::ostream& out, const Population& pop, const Propensity& theta) {
  out << "id,theta\n";
  for (std::size_t i = 0; i < pop.size(); ++i) out << pop.unit(i).id << ',' << format_real(theta.theta[i]) << '\n';
}

}  // namespace madi
