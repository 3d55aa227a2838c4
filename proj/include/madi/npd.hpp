#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

#include "madi/population.hpp"
#include "madi/random.hpp"

namespace madi {

/// How the nonprobability set A is generated. sim1 is the single-scenario
/// setup; k1/k2 are deterministic cutoffs on y (top / bottom); k3..k8 draw a
/// propensity theta and allocate by rejection.
enum class Scenario { sim1, k1, k2, k3, k4, k5, k6, k7, k8 };

const char* to_string(Scenario s) noexcept;
/// Accepts "sim1", "k1".."k8". Throws DomainError otherwise.
Scenario parse_scenario(std::string_view text);
bool is_cutoff(Scenario s) noexcept;

struct Propensity {
  Scenario scenario = Scenario::sim1;
  std::vector<double> theta;  // per unit, frame order
  /// Units forced to theta = 0 (k5/k6), ascending frame position.
  std::vector<std::size_t> forced_zero;
};

/// theta_i ~ Uniform(0, 0.1 d) where d in 1..10 is the equal-count decile of
/// y_i (ranked by y, ties by id). Requires N >= 10.
Propensity theta_sim1(const Population& pop, CounterRng& rng);

/// Scenario propensities for k in 3..8. Pairs (3,4), (5,6), (7,8) consume the
/// stream identically, so the second member is the complement of the first
/// for the same rng state (forced zeros excepted).
///   k3: as sim1.
///   k5: z = |y - median| / max |y - median|; theta = clamp(|0.95 z + eps|,
///       0.01, 0.95), eps ~ U(-0.05, 0.05); then round(0.05 N) units drawn
///       uniformly without replacement are set to 0.
///   k7: r = rank(y) / (N - 1); theta ~ Uniform(0, 0.95 (1 - r)).
///   k4, k6, k8: 1 - theta of k3, k5, k7; forced zeros stay 0.
Propensity theta_scenario(const Population& pop, int k, CounterRng& rng);
Propensity theta_scenario(const Population& pop, Scenario s, CounterRng& rng);

enum class CutoffDirection { top, bottom };

/// A = the round(0.1 l N) largest (top) or smallest (bottom) y units, ties
/// broken by id ascending. l in 1..9.
Partition cutoff_partition(const Population& pop, int l, CutoffDirection direction);
/// Same rule with an explicit |A|.
Partition cutoff_partition_count(const Population& pop, std::size_t n_a, CutoffDirection direction);

/// Rejection allocation: repeatedly pick a uniformly random unit not yet in A
/// and admit it when u < theta_i, until |A| = round(fraction N). Units with
/// theta = 0 never enter A. Throws InfeasibleAllocation up front when too few
/// units have theta > 0, and when 10^6 N attempts pass without finishing.
Partition allocate_npd(const Population& pop, const Propensity& theta, double fraction, CounterRng& rng);

/// round(fraction * N), the target |A|.
std::size_t target_size(std::size_t n_units, double fraction);

struct NpdScenario {
  Partition partition;
  std::optional<Propensity> propensity;
};

/// Builds a scenario end to end. Propensity and allocation draw from
/// independent streams derived from `seed`.
NpdScenario generate_npd(const Population& pop, Scenario scenario, double fraction, std::uint64_t seed);

struct NpdSummary {
  std::size_t n_a = 0;
  std::size_t n_b = 0;
  double mean_y_a = 0.0;
  double mean_y_b = 0.0;
};

NpdSummary summarize(const Population& pop, const Partition& part);

/// Audit file `id,theta`.
void write_propensity_csv(std::ostream& out, const Population& pop, const Propensity& theta);

}  // namespace madi
