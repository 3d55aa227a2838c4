#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "madi/design.hpp"
#include "madi/models.hpp"
#include "madi/population.hpp"

namespace madi {

enum class EstimateStatus { ok, singular_model, insufficient_sample };

const char* to_string(EstimateStatus status) noexcept;

/// Outcome of one estimator on one sample. A singular working model leaves
/// no point value (the NA case); estimators without a valid variance
/// estimator (naive model-assisted, post-stratified DI) leave the variance
/// empty.
struct EstimateResult {
  std::optional<double> point;
  std::optional<double> variance_estimate;
  EstimateStatus status = EstimateStatus::ok;

  bool ok() const noexcept { return status == EstimateStatus::ok; }
  static EstimateResult failed(EstimateStatus s) { return EstimateResult{std::nullopt, std::nullopt, s}; }
};

/// How double-sum variance expressions are evaluated. Under SRS the two are
/// algebraically identical; the literal O(n^2) sum is kept for oracle checks.
enum class VarianceForm { closed_form, double_sum };

/// Number of double-sum variance estimates in [-1e-9 * scale, 0) that were
/// clamped to zero since program start.
std::size_t negative_variance_clamps() noexcept;

/// sum_s y_i / pi_i. `y_s` is aligned with sample.units().
double ht_point(const Sample& sample, std::span<const double> y_s);

/// sum_frame y0_i + sum_s (y_i - y0_i) / pi_i, with `proxy` holding y0 for
/// every population unit (indexed by frame position in U). For a sample of U
/// the first sum runs over U.
double difference_point(const Sample& sample, const Population& pop, std::span<const double> proxy);

/// Design variance of the difference estimator, with `d_frame` the residuals
/// y - y0 for the design's frame members (in frame order). Requires n >= 2
/// unless the design is a census.
double difference_variance_true(const SrsDesign& design, std::span<const double> d_frame,
                                VarianceForm form = VarianceForm::closed_form);

/// Unbiased estimate of the above from the sampled residuals.
double difference_variance_estimate(const Sample& sample, std::span<const double> d_s,
                                    VarianceForm form = VarianceForm::closed_form);

// --- GREG -------------------------------------------------------------------

/// Working model of the GREG estimator: linear in the chosen auxiliary
/// columns (all when unset), unit heteroskedasticity constants, with an
/// intercept by default.
struct GregSpec {
  bool intercept = true;
  std::optional<std::vector<std::size_t>> columns;
};

/// Frame totals of the working-model regressors, computed once per frame.
class GregContext {
public:
  GregContext(const Population& pop, const FrameRef& frame, GregSpec spec = {});
  const GregSpec& spec() const noexcept { return spec_; }
  const FrameRef& frame() const noexcept { return frame_; }
  const Eigen::VectorXd& frame_totals() const noexcept { return totals_; }
  std::vector<std::size_t> columns(const Population& pop) const;

private:
  GregSpec spec_;
  FrameRef frame_;
  Eigen::VectorXd totals_;
};

struct GregFit {
  EstimateStatus status = EstimateStatus::ok;
  double point = 0.0;
  Eigen::VectorXd coefficients;
  std::vector<double> residuals;  // e_i = y_i - z_i' B, aligned with the sample
  std::vector<double> g_weights;  // calibration g-weights, aligned with the sample
};

GregFit fit_greg(const Sample& sample, const Population& pop, const GregContext& context);

enum class GWeights { calibrated, unit };

/// sum_s sum_s (Delta_ij / pi_ij) (g_i e_i / pi_i)(g_j e_j / pi_j). With
/// GWeights::unit this is the difference-estimator variance of e.
double greg_variance_estimate(const Sample& sample, const GregFit& fit, GWeights g = GWeights::calibrated,
                              VarianceForm form = VarianceForm::closed_form);

/// Point plus variance (when n >= 2); singular_model when the weighted
/// normal matrix is singular.
EstimateResult greg_point(const Sample& sample, const Population& pop, const GregContext& context);
EstimateResult greg_point(const Sample& sample, const Population& pop, const GregSpec& spec = {});

// --- naive model-assisted -----------------------------------------------------

/// GREG form with the forest fitted on the sample itself. Design-biased;
/// never carries a variance estimate.
EstimateResult naive_model_assisted_point(const Sample& sample, const Population& pop, const ForestParams& params);

// --- data integration ---------------------------------------------------------

/// Post-stratified DI estimator for a sample drawn from U. No variance
/// estimate. insufficient_sample when no sampled unit lies in B.
EstimateResult di_kt_point(const Sample& sample_u, const Partition& part, const Population& pop);

/// t_A + HT total of a sample drawn from B, with its variance estimate when
/// n_b >= 2 or the sample is a census of B.
EstimateResult di_ht_point(const Sample& sample_b, const Partition& part, const Population& pop);
/// The A = U edge: nothing to sample, returns t_A with variance 0.
EstimateResult di_ht_point(const Partition& part, const Population& pop);

double di_ht_variance_estimate(const Sample& sample_b, std::span<const double> y_s,
                               VarianceForm form = VarianceForm::closed_form);

// --- MADI -------------------------------------------------------------------

/// Model predictions over U for a model trained only on A, plus the fixed
/// terms of the MADI estimator. Construction enforces the train/evaluation
/// separation: a model whose training units include any B unit is rejected
/// with ContractViolation.
class MadiProxy {
public:
  MadiProxy(const Population& pop, const Partition& part, const FittedModel& model);

  const std::vector<double>& predictions() const noexcept { return predictions_; }
  double t_a() const noexcept { return t_a_; }
  /// Residuals e_i = y_i - mu(x_i, A) for the B units (frame order of B).
  const std::vector<double>& b_residuals() const noexcept { return b_residuals_; }

private:
  std::vector<double> predictions_;
  std::vector<double> b_residuals_;
  double t_a_ = 0.0;
};

EstimateResult madi_point(const Sample& sample_b, const Partition& part, const Population& pop, const MadiProxy& proxy);
EstimateResult madi_point(const Sample& sample_b, const Partition& part, const Population& pop,
                          const FittedModel& model);

double madi_variance_estimate(const Sample& sample_b, std::span<const double> e_s,
                              VarianceForm form = VarianceForm::closed_form);

// --- intervals --------------------------------------------------------------

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double v) const noexcept { return lo <= v && v <= hi; }
};

/// Quantile of Student's t with `df` degrees of freedom.
double t_quantile(double probability, double df);

/// point -/+ t_{n-1,(1+level)/2} sqrt(variance_estimate).
Interval confidence_interval(double point, double variance_estimate, std::size_t n, double level);

/// CSV row `strategy,n,point,var_est,status` (empty fields for absent values).
void write_estimate_header(std::ostream& out);
void write_estimate_row(std::ostream& out, std::string_view strategy, std::size_t n, const EstimateResult& r);

}  // namespace madi
