#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "madi/error.hpp"
#include "madi/npd.hpp"
#include "madi/population.hpp"
#include "support.hpp"

using namespace madi;

namespace {

const Population& synthetic() {
  static const Population pop = generate_synthetic(1, 10000, 12);
  return pop;
}

std::vector<std::size_t> y_order(const Population& pop) {
  std::vector<std::size_t> idx(pop.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return pop.y(a) != pop.y(b) ? pop.y(a) < pop.y(b) : pop.unit(a).id < pop.unit(b).id;
  });
  return idx;
}

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) ma += a[i], mb += b[i];
  ma /= a.size();
  mb /= b.size();
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

TEST_CASE("scenario names") {
  CHECK(parse_scenario("sim1") == Scenario::sim1);
  CHECK(parse_scenario("k7") == Scenario::k7);
  CHECK_THROWS_AS(parse_scenario("k9"), DomainError);
  CHECK(is_cutoff(Scenario::k1));
  CHECK_FALSE(is_cutoff(Scenario::k3));
}

TEST_CASE("sim1 propensities") {
  const Population& pop = synthetic();
  std::vector<double> decile_mean(10, 0.0);
  const auto order = y_order(pop);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    CounterRng rng(seed);
    const Propensity p = theta_sim1(pop, rng);
    for (double t : p.theta) {
      CHECK(t >= 0.0);
      CHECK(t <= 1.0);
    }
    for (std::size_t r = 0; r < order.size(); ++r) decile_mean[r * 10 / order.size()] += p.theta[order[r]];
    if (seed == 0) CHECK(correlation(pop.y_values(), p.theta) > 0.4);
    // caps: decile d never exceeds 0.1 d
    for (std::size_t r = 0; r < order.size(); ++r) CHECK(p.theta[order[r]] <= 0.1 * (r * 10 / order.size() + 1) + 1e-12);
  }
  for (std::size_t d = 1; d < 10; ++d) CHECK(decile_mean[d] >= decile_mean[d - 1]);
  for (std::size_t d = 0; d < 10; ++d)
    CHECK(decile_mean[d] / (20.0 * 1000) == doctest::Approx(0.05 * (d + 1)).epsilon(0.05));
  const Population small = testing_support::make_population({1, 2, 3});
  CounterRng rng(1);
  CHECK_THROWS_AS(theta_sim1(small, rng), DomainError);
}

TEST_CASE("paired scenarios are complements") {
  const Population& pop = synthetic();
  for (int k : {3, 5, 7}) {
    CounterRng r1(17), r2(17);
    const Propensity a = theta_scenario(pop, k, r1);
    const Propensity b = theta_scenario(pop, k + 1, r2);
    const std::set<std::size_t> forced(a.forced_zero.begin(), a.forced_zero.end());
    CHECK(a.forced_zero == b.forced_zero);
    for (std::size_t i = 0; i < pop.size(); ++i) {
      CHECK(a.theta[i] >= 0.0);
      CHECK(a.theta[i] <= 1.0);
      if (forced.count(i)) CHECK(b.theta[i] == 0.0);
      else CHECK(b.theta[i] == 1.0 - a.theta[i]);
    }
  }
  CounterRng rng(1);
  CHECK_THROWS_AS(theta_scenario(pop, 2, rng), DomainError);
  CHECK_THROWS_AS(theta_scenario(pop, 9, rng), DomainError);
}

TEST_CASE("k5 forced zeros") {
  const Population& pop = synthetic();
  const std::size_t expected = static_cast<std::size_t>(std::llround(0.05 * pop.size()));
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    CounterRng rng(seed);
    const Propensity p = theta_scenario(pop, 5, rng);
    CHECK(p.forced_zero.size() == expected);
    CHECK(static_cast<std::size_t>(std::count(p.theta.begin(), p.theta.end(), 0.0)) == expected);
    for (double t : p.theta) CHECK(t <= 0.95);
  }
}

TEST_CASE("k7 spread shrinks with y") {
  const Population& pop = synthetic();
  CounterRng rng(4);
  const Propensity p = theta_scenario(pop, 7, rng);
  const auto order = y_order(pop);
  for (std::size_t r = 0; r < order.size(); ++r)
    CHECK(p.theta[order[r]] <= 0.95 * (1.0 - static_cast<double>(r) / (order.size() - 1)) + 1e-12);
}

TEST_CASE("cutoff partitions") {
  const Population& pop = synthetic();
  SUBCASE("top l = 9 separates A above B") {
    const Partition part = cutoff_partition(pop, 9, CutoffDirection::top);
    CHECK(part.n_a() == 9000);
    double min_a = 1e300, max_b = -1e300;
    for (std::size_t i : part.a_units()) min_a = std::min(min_a, pop.y(i));
    for (std::size_t i : part.b_units()) max_b = std::max(max_b, pop.y(i));
    CHECK(min_a >= max_b);
  }
  SUBCASE("sizes are round(0.1 l N)") {
    const Population p37 = generate_synthetic(2, 37, 3);
    for (int l = 1; l <= 9; ++l)
      for (auto dir : {CutoffDirection::top, CutoffDirection::bottom})
        CHECK(cutoff_partition(p37, l, dir).n_a() == static_cast<std::size_t>(std::llround(0.1 * l * 37)));
  }
  SUBCASE("top l is the B of bottom 10 - l") {
    const Population p100 = generate_synthetic(3, 100, 4);
    for (int l = 1; l <= 9; ++l) {
      const Partition top = cutoff_partition(p100, l, CutoffDirection::top);
      const Partition bottom = cutoff_partition(p100, 10 - l, CutoffDirection::bottom);
      CHECK(top.a_units() == bottom.b_units());
    }
  }
  SUBCASE("ties broken by id") {
    const Population ties = testing_support::make_population({5, 5, 5, 5, 1, 9, 5, 5, 5, 5});
    const Partition part = cutoff_partition(ties, 3, CutoffDirection::bottom);
    CHECK(part.a_units() == std::vector<std::size_t>{0, 1, 4});
  }
  CHECK_THROWS_AS(cutoff_partition(pop, 0, CutoffDirection::top), DomainError);
  CHECK_THROWS_AS(cutoff_partition(pop, 10, CutoffDirection::top), DomainError);
}

TEST_CASE("allocation") {
  const Population& pop = synthetic();
  SUBCASE("theta = 1 admits every pick") {
    Propensity ones;
    ones.theta.assign(pop.size(), 1.0);
    CounterRng rng(3);
    CHECK(allocate_npd(pop, ones, 0.5, rng).n_a() == 5000);
  }
  SUBCASE("infeasible allocation detected up front") {
    Propensity sparse;
    sparse.theta.assign(pop.size(), 0.0);
    for (std::size_t i = 0; i < 100; ++i) sparse.theta[i] = 0.5;
    CounterRng rng(3);
    CHECK_THROWS_AS(allocate_npd(pop, sparse, 0.5, rng), InfeasibleAllocation);
  }
  SUBCASE("fraction outside (0, 1)") {
    Propensity ones;
    ones.theta.assign(pop.size(), 1.0);
    CounterRng rng(3);
    CHECK_THROWS_AS(allocate_npd(pop, ones, 1.0, rng), DomainError);
  }
  SUBCASE("forced zeros never enter A") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      for (Scenario sc : {Scenario::k5, Scenario::k6}) {
        const NpdScenario npd = generate_npd(pop, sc, 0.7, seed);
        CHECK(npd.partition.n_a() == 7000);
        for (std::size_t i : npd.propensity->forced_zero) CHECK_FALSE(npd.partition.in_a(i));
      }
    }
  }
  SUBCASE("sim1: A is richer than B") {
    const NpdScenario npd = generate_npd(pop, Scenario::sim1, 0.7, 1);
    const NpdSummary s = summarize(pop, npd.partition);
    CHECK(s.n_a == 7000);
    CHECK(s.mean_y_a > s.mean_y_b);
  }
  SUBCASE("reproducible") {
    const NpdScenario a = generate_npd(pop, Scenario::k7, 0.4, 9);
    const NpdScenario b = generate_npd(pop, Scenario::k7, 0.4, 9);
    CHECK(a.partition.delta() == b.partition.delta());
  }
}

TEST_CASE("monotone scenarios order the stratum means") {
  const Population& pop = synthetic();
  for (Scenario sc : {Scenario::sim1, Scenario::k3, Scenario::k4, Scenario::k7, Scenario::k8}) {
    const bool increasing = sc == Scenario::sim1 || sc == Scenario::k3 || sc == Scenario::k8;
    int agree = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const NpdSummary s = summarize(pop, generate_npd(pop, sc, 0.5, seed).partition);
      agree += increasing ? s.mean_y_a > s.mean_y_b : s.mean_y_a < s.mean_y_b;
    }
    INFO("scenario " << to_string(sc));
    CHECK(agree >= 19);
  }
}
