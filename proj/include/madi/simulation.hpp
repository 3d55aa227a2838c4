#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "madi/design.hpp"
#include "madi/estimators.hpp"
#include "madi/models.hpp"
#include "madi/npd.hpp"
#include "madi/population.hpp"

namespace madi {

/// A design paired with an estimator. srs_u_* sample from U, srs_b_* from B.
enum class Strategy {
  srs_u_ht,
  srs_u_greg,
  srs_u_rf,
  srs_b_di_ht,
  srs_b_di_greg,
  srs_b_di_rf,
  srs_b_madi_ols,
  srs_b_madi_rf,
};

inline constexpr Strategy kAllStrategies[] = {
    Strategy::srs_u_ht,    Strategy::srs_u_greg,    Strategy::srs_u_rf,       Strategy::srs_b_di_ht,
    Strategy::srs_b_di_greg, Strategy::srs_b_di_rf, Strategy::srs_b_madi_ols, Strategy::srs_b_madi_rf,
};

const char* to_string(Strategy s) noexcept;
/// Accepts the snake_case names above. Throws DomainError otherwise.
Strategy parse_strategy(std::string_view text);
FrameKind design_of(Strategy s) noexcept;
bool needs_partition(Strategy s) noexcept;
/// False for the naive forest strategies, which are excluded from coverage.
bool has_variance_estimator(Strategy s) noexcept;

/// One strategy's estimator with its fixed parts (frame totals, A-trained
/// model) built once, then applied to any number of samples from its frame.
class StrategyEvaluator {
public:
  /// `partition` is required for srs_b_* strategies. `forest` configures
  /// the A-trained forest of srs_b_madi_rf.
  StrategyEvaluator(Strategy strategy, const Population& pop, const Partition* partition,
                    const ForestParams& forest = {});

  Strategy strategy() const noexcept { return strategy_; }
  const FrameRef& frame() const noexcept { return frame_; }
  /// Null for strategies without a fixed A-trained model, or when the
  /// A-trained OLS fit was singular.
  const FittedModel* model() const noexcept { return model_ ? &*model_ : nullptr; }

  /// `sample_forest` configures the forest fitted on the sample itself by
  /// the naive strategies; its seed should vary per replicate.
  EstimateResult operator()(const Sample& sample, const ForestParams& sample_forest = {}) const;

private:
  Strategy strategy_;
  const Population* pop_;
  const Partition* partition_;
  FrameRef frame_;
  std::optional<GregContext> greg_;
  std::optional<FittedModel> model_;
  std::optional<MadiProxy> proxy_;
  bool model_singular_ = false;
  double t_a_ = 0.0;
};

struct PopulationSource {
  std::optional<std::filesystem::path> file;
  std::uint64_t synthetic_seed = 1;
  std::size_t synthetic_n = 10000;
  std::size_t synthetic_p = 12;
};

struct NpdSource {
  std::optional<std::filesystem::path> partition_file;
  std::optional<Scenario> scenario;
  double fraction = 0.7;
  std::uint64_t seed = 1;
};

struct SimulationConfig {
  PopulationSource population;
  NpdSource npd;
  std::vector<Strategy> strategies;
  std::vector<std::size_t> grid;
  std::size_t replicates = 1000;
  std::uint64_t master_seed = 1;
  double level = 0.95;
  /// Replace random replicates by every possible sample, weighted by its
  /// design probability.
  bool enumerate = false;
  std::uint64_t enumeration_cap = SampleEnumeration::kDefaultCap;
  unsigned threads = 1;
  ForestParams forest;
  bool keep_replicates = false;

  /// Throws DomainError naming the offending field.
  void validate() const;
};

struct SimulationInputs {
  Population population;
  std::optional<Partition> partition;
  std::optional<Propensity> propensity;
};

/// Loads or generates the population and builds the partition the config asks for.
SimulationInputs prepare_inputs(const SimulationConfig& config);

struct ReplicateRecord {
  Strategy strategy;
  std::size_t n;
  std::size_t replicate;
  double weight;
  EstimateResult result;
  std::optional<Interval> interval;
};

/// Aggregates for one (strategy, n) cell. Metrics are over successful
/// replicates; `replicates == successes + na_count`.
struct CellReport {
  Strategy strategy;
  std::size_t n = 0;
  std::size_t replicates = 0;
  std::size_t na_count = 0;
  std::size_t successes = 0;
  std::optional<double> bias;
  std::optional<double> mse;
  std::optional<double> rmse;
  std::optional<double> coverage;
  std::optional<double> mean_var_est;
};

struct SimulationReport {
  double t_y = 0.0;
  std::vector<CellReport> cells;
  std::vector<ReplicateRecord> records;  // filled when keep_replicates

  const CellReport& cell(Strategy s, std::size_t n) const;
};

/// Steps 1-5 of the Monte Carlo protocol for every (strategy, n). Replicate m
/// of design d at size n draws from stream (master_seed, d, n, m), so all
/// strategies sharing a design see the same samples and results are
/// independent of thread count. Estimator failures become NA counts.
SimulationReport run_grid(const SimulationConfig& config, const Population& pop, const Partition* partition);
SimulationReport run_grid(const SimulationConfig& config);

// --- metrics ------------------------------------------------------------------

double bias_metric(std::span<const double> estimates, double t_y);
double mse_metric(std::span<const double> estimates, double t_y);
inline double rmse_metric(std::span<const double> estimates, double t_y) {
  return std::sqrt(mse_metric(estimates, t_y));
}
double coverage_metric(std::span<const Interval> intervals, double t_y);

// --- planning -----------------------------------------------------------------

/// Design variance of the SRS expansion total: N^2 (1 - n/N) S^2 / n.
double srs_total_variance(std::size_t frame_size, std::size_t n, double s2);
/// sqrt(variance) / total. Throws DomainError for a zero total.
double theoretical_cv(double variance, double total);

struct SampleSizeInputs {
  std::size_t frame_size = 0;  // N, or N_B for MADI
  double s2 = 0.0;             // planning variance
  double total = 0.0;          // Y, or Y_B for MADI
  double cv_target = 0.01;
};

/// ceil(N^2 S^2 / ((Y cv)^2 + N S^2)) clamped to [2, N]; the smallest n whose
/// SRS coefficient of variation does not exceed the target.
std::size_t required_sample_size(const SampleSizeInputs& in);
inline std::size_t sample_size_ht(const SampleSizeInputs& in) { return required_sample_size(in); }
inline std::size_t sample_size_greg(const SampleSizeInputs& in) { return required_sample_size(in); }
inline std::size_t sample_size_madi(const SampleSizeInputs& in) { return required_sample_size(in); }

/// Which total the MADI coefficient of variation divides by.
enum class CvDenominator { stratum_total, population_total };

struct PlanningVariances {
  double s2_y = 0.0;
  double s2_greg = 0.0;
  std::optional<double> s2_di;
};

/// S_y^2 over U; S^2 of residuals from a census-level OLS fit of y on x
/// (with intercept); and, when a partition and A-trained model are given,
/// S^2 over B of y - mu(x, A). Throws SingularFitError for a singular
/// census fit and ContractViolation for a model trained outside A.
PlanningVariances planning_variances(const Population& pop, const Partition* partition, const FittedModel* model);

struct SampleSizeRow {
  std::string strategy;
  std::string scenario;
  std::optional<int> l;
  std::size_t required_n = 0;
};

// --- output -------------------------------------------------------------------

void write_report_csv(std::ostream& out, const SimulationReport& report);
void write_replicates_csv(std::ostream& out, const SimulationReport& report);

enum class Metric { bias, rmse, coverage };
/// Long-format plot data `strategy,n,value`.
void write_metric_csv(std::ostream& out, const SimulationReport& report, Metric metric);

void write_sample_size_csv(std::ostream& out, std::span<const SampleSizeRow> rows);

// --- config file ----------------------------------------------------------------

/// Flat `key = value` format, `#` starts a comment. Unknown keys and bad
/// values raise ParseError naming the key and line.
SimulationConfig read_config(std::istream& in);
SimulationConfig load_config(const std::filesystem::path& path);
/// Applies one setting; used for both file lines and command-line overrides.
/// Throws DomainError naming the key.
void apply_setting(SimulationConfig& config, std::string_view key, std::string_view value);
/// Canonical echo of a config in the same format.
void write_config(std::ostream& out, const SimulationConfig& config);

/// "25,50,100" or "first:last[:step]" (step defaults to 1).
std::vector<std::size_t> parse_grid(std::string_view text);

}  // namespace madi
