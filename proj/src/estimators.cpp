#include "madi/estimators.hpp"

#include <atomic>
#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>

#include "madi/error.hpp"
#include "madi/linear_model.hpp"
#include "madi/summation.hpp"

namespace madi {

namespace {

std::atomic<std::size_t> g_clamps{0};

constexpr double kClampTolerance = 1e-9;

double nonnegative(double value, double scale) {
  if (value >= 0.0) return value;
  if (value >= -kClampTolerance * scale) {
    g_clamps.fetch_add(1, std::memory_order_relaxed);
    return 0.0;
  }
  std::ostringstream msg;
  msg << "variance estimate " << value << " is negative beyond rounding (scale " << scale << ")";
  throw Error(msg.str());
}

void require_variance_sample(std::size_t n, bool census) {
  if (!census && n < 2)
    throw InsufficientSampleError("variance estimation needs n >= 2 (second-order inclusion probabilities vanish)");
}

// N^2 (1 - n/N) / n, the SRS factor shared by every closed form.
double srs_factor(const SrsDesign& d) {
  const double big = static_cast<double>(d.frame_size());
  const double n = static_cast<double>(d.n());
  return big * big * (1.0 - n / big) / n;
}

void require_sample_of_b(const Sample& sample, const Partition& part, const Population& pop) {
  if (part.size() != pop.size()) throw DomainError("partition size does not match population");
  if (sample.frame().size() != part.n_b()) throw DomainError("sample must be drawn from B");
  for (std::size_t i : sample.frame().members())
    if (part.in_a(i)) throw DomainError("sample frame contains a unit of A; expected B");
}

}  // namespace

std::size_t negative_variance_clamps() noexcept { return g_clamps.load(); }

const char* to_string(EstimateStatus status) noexcept {
  switch (status) {
    case EstimateStatus::ok: return "ok";
    case EstimateStatus::singular_model: return "singular-model";
    case EstimateStatus::insufficient_sample: return "insufficient-sample";
  }
  return "unknown";
}

double ht_point(const Sample& sample, std::span<const double> y_s) {
  if (y_s.size() != sample.n()) throw DimensionError("sample values do not match sample size");
  CompensatedSum acc;
  for (std::size_t k = 0; k < y_s.size(); ++k) acc += y_s[k] / sample.pi(sample.units()[k]);
  return acc.value();
}

double difference_point(const Sample& sample, const Population& pop, std::span<const double> proxy) {
  if (proxy.size() != pop.size()) throw DimensionError("proxy must cover every population unit");
  CompensatedSum proxy_total;
  for (std::size_t i : sample.frame().members()) proxy_total += proxy[i];
  CompensatedSum correction;
  for (std::size_t i : sample.units()) correction += (pop.y(i) - proxy[i]) / sample.pi(i);
  return proxy_total.value() + correction.value();
}

double difference_variance_true(const SrsDesign& design, std::span<const double> d_frame, VarianceForm form) {
  const auto& members = design.frame().members();
  if (d_frame.size() != members.size()) throw DimensionError("residuals must cover the frame");
  require_variance_sample(design.n(), design.is_census());
  if (design.is_census()) return 0.0;
  if (form == VarianceForm::closed_form) return srs_factor(design) * population_variance(d_frame);

  CompensatedSum acc;
  CompensatedSum scale;
  for (std::size_t a = 0; a < members.size(); ++a) {
    const double pi_a = design.pi(members[a]);
    for (std::size_t b = 0; b < members.size(); ++b) {
      const double pi_b = design.pi(members[b]);
      const double term = delta(pi_a, pi_b, design.pi2(members[a], members[b])) * (d_frame[a] / pi_a) * (d_frame[b] / pi_b);
      acc += term;
      scale += std::fabs(term);
    }
  }
  return nonnegative(acc.value(), scale.value());
}

double difference_variance_estimate(const Sample& sample, std::span<const double> d_s, VarianceForm form) {
  if (d_s.size() != sample.n()) throw DimensionError("residuals do not match sample size");
  const SrsDesign& design = sample.design();
  require_variance_sample(sample.n(), design.is_census());
  if (design.is_census()) return 0.0;
  if (form == VarianceForm::closed_form) return srs_factor(design) * population_variance(d_s);

  const auto& units = sample.units();
  CompensatedSum acc;
  CompensatedSum scale;
  for (std::size_t a = 0; a < units.size(); ++a) {
    const double pi_a = sample.pi(units[a]);
    for (std::size_t b = 0; b < units.size(); ++b) {
      const double pi_b = sample.pi(units[b]);
      const double pi_ab = sample.pi2(units[a], units[b]);
      const double term = delta(pi_a, pi_b, pi_ab) / pi_ab * (d_s[a] / pi_a) * (d_s[b] / pi_b);
      acc += term;
      scale += std::fabs(term);
    }
  }
  return nonnegative(acc.value(), scale.value());
}

// --- GREG -------------------------------------------------------------------

GregContext::GregContext(const Population& pop, const FrameRef& frame, GregSpec spec)
    : spec_(std::move(spec)), frame_(frame) {
  if (frame.population_size() != pop.size()) throw DomainError("frame does not belong to this population");
  const auto cols = columns(pop);
  const std::size_t q = cols.size() + (spec_.intercept ? 1 : 0);
  if (q == 0) throw DomainError("GREG working model has no regressors");
  std::vector<CompensatedSum> acc(q);
  for (std::size_t i : frame.members()) {
    std::size_t k = 0;
    if (spec_.intercept) acc[k++] += 1.0;
    for (std::size_t c : cols) acc[k++] += pop.x(i)[c];
  }
  totals_.resize(static_cast<Eigen::Index>(q));
  for (std::size_t k = 0; k < q; ++k) totals_(static_cast<Eigen::Index>(k)) = acc[k].value();
}

std::vector<std::size_t> GregContext::columns(const Population& pop) const {
  if (!spec_.columns) {
    std::vector<std::size_t> all(pop.aux_dim());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return all;
  }
  for (std::size_t c : *spec_.columns)
    if (c >= pop.aux_dim()) throw DomainError("GREG column " + std::to_string(c + 1) + " out of range");
  return *spec_.columns;
}

GregFit fit_greg(const Sample& sample, const Population& pop, const GregContext& context) {
  if (sample.frame().size() != context.frame().size())
    throw DomainError("GREG context was built for a different frame");
  const auto cols = context.columns(pop);
  const auto& units = sample.units();
  const std::size_t n = units.size();
  const std::size_t q = static_cast<std::size_t>(context.frame_totals().size());

  Eigen::MatrixXd z(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(q));
  std::vector<double> weights(n);
  std::vector<double> y(n);
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t i = units[r];
    std::size_t k = 0;
    if (context.spec().intercept) z(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k++)) = 1.0;
    for (std::size_t c : cols) z(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k++)) = pop.x(i)[c];
    weights[r] = 1.0 / sample.pi(i);
    y[r] = pop.y(i);
  }

  GregFit fit;
  const WeightedLeastSquares solver(z, weights);
  if (solver.singular()) {
    fit.status = EstimateStatus::singular_model;
    return fit;
  }
  fit.coefficients = solver.solve(y);

  Eigen::VectorXd estimated_totals = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(q));
  fit.residuals.resize(n);
  CompensatedSum correction;
  for (std::size_t r = 0; r < n; ++r) {
    const auto row = z.row(static_cast<Eigen::Index>(r));
    fit.residuals[r] = y[r] - row.dot(fit.coefficients);
    correction += fit.residuals[r] * weights[r];
    estimated_totals += row.transpose() * weights[r];
  }
  const Eigen::VectorXd lambda = solver.solve_normal(context.frame_totals() - estimated_totals);
  fit.g_weights.resize(n);
  for (std::size_t r = 0; r < n; ++r) fit.g_weights[r] = 1.0 + z.row(static_cast<Eigen::Index>(r)).dot(lambda);

  CompensatedSum fitted_total;
  for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(q); ++k)
    fitted_total += context.frame_totals()(k) * fit.coefficients(k);
  fit.point = fitted_total.value() + correction.value();
  return fit;
}

double greg_variance_estimate(const Sample& sample, const GregFit& fit, GWeights g, VarianceForm form) {
  if (fit.status != EstimateStatus::ok) throw DomainError("GREG variance needs a successful fit");
  std::vector<double> scaled(fit.residuals.size());
  for (std::size_t r = 0; r < scaled.size(); ++r)
    scaled[r] = g == GWeights::calibrated ? fit.g_weights[r] * fit.residuals[r] : fit.residuals[r];
  return difference_variance_estimate(sample, scaled, form);
}

EstimateResult greg_point(const Sample& sample, const Population& pop, const GregContext& context) {
  const GregFit fit = fit_greg(sample, pop, context);
  if (fit.status != EstimateStatus::ok) return EstimateResult::failed(fit.status);
  EstimateResult r;
  r.point = fit.point;
  if (sample.n() >= 2 || sample.design().is_census()) r.variance_estimate = greg_variance_estimate(sample, fit);
  return r;
}

EstimateResult greg_point(const Sample& sample, const Population& pop, const GregSpec& spec) {
  return greg_point(sample, pop, GregContext(pop, sample.frame(), spec));
}

// --- naive model-assisted -----------------------------------------------------

EstimateResult naive_model_assisted_point(const Sample& sample, const Population& pop, const ForestParams& params) {
  const FittedModel model = fit_forest(TrainingSet::from_units(pop, sample.units()), params);
  CompensatedSum predicted;
  for (std::size_t i : sample.frame().members()) predicted += model.predict(pop.x(i));
  CompensatedSum correction;
  for (std::size_t i : sample.units()) correction += (pop.y(i) - model.predict(pop.x(i))) / sample.pi(i);
  EstimateResult r;
  r.point = predicted.value() + correction.value();
  return r;
}

// --- data integration ---------------------------------------------------------

EstimateResult di_kt_point(const Sample& sample_u, const Partition& part, const Population& pop) {
  if (part.size() != pop.size()) throw DomainError("partition size does not match population");
  CompensatedSum numerator;
  CompensatedSum denominator;
  std::size_t in_b = 0;
  for (std::size_t i : sample_u.units()) {
    if (part.in_a(i)) continue;
    ++in_b;
    numerator += pop.y(i) / sample_u.pi(i);
    denominator += 1.0 / sample_u.pi(i);
  }
  if (in_b == 0) return EstimateResult::failed(EstimateStatus::insufficient_sample);
  EstimateResult r;
  r.point = total_over(pop, part.a_units()) +
            static_cast<double>(part.n_b()) * (numerator.value() / denominator.value());
  return r;
}

EstimateResult di_ht_point(const Sample& sample_b, const Partition& part, const Population& pop) {
  require_sample_of_b(sample_b, part, pop);
  const std::vector<double> y_s = sample_b.y_values(pop);
  EstimateResult r;
  r.point = total_over(pop, part.a_units()) + ht_point(sample_b, y_s);
  if (sample_b.n() >= 2 || sample_b.design().is_census()) r.variance_estimate = di_ht_variance_estimate(sample_b, y_s);
  return r;
}

EstimateResult di_ht_point(const Partition& part, const Population& pop) {
  if (part.size() != pop.size()) throw DomainError("partition size does not match population");
  if (part.n_b() != 0) throw DomainError("B is nonempty; a sample from B is required");
  return EstimateResult{total_over(pop, part.a_units()), 0.0, EstimateStatus::ok};
}

double di_ht_variance_estimate(const Sample& sample_b, std::span<const double> y_s, VarianceForm form) {
  return difference_variance_estimate(sample_b, y_s, form);
}

// --- MADI -------------------------------------------------------------------

MadiProxy::MadiProxy(const Population& pop, const Partition& part, const FittedModel& model) {
  if (part.size() != pop.size()) throw DomainError("partition size does not match population");
  for (std::size_t u : model.training_units())
    if (u >= part.size() || !part.in_a(u))
      throw ContractViolation("model was trained on unit id " +
                              (u < pop.size() ? std::to_string(pop.unit(u).id) : std::string("?")) +
                              " outside the nonprobability set A");
  predictions_ = predict_population(model, pop);
  t_a_ = total_over(pop, part.a_units());
  b_residuals_.reserve(part.n_b());
  for (std::size_t i : part.b_units()) b_residuals_.push_back(pop.y(i) - predictions_[i]);
}

EstimateResult madi_point(const Sample& sample_b, const Partition& part, const Population& pop, const MadiProxy& proxy) {
  require_sample_of_b(sample_b, part, pop);
  EstimateResult r;
  r.point = proxy.t_a() + difference_point(sample_b, pop, proxy.predictions());
  if (sample_b.n() >= 2 || sample_b.design().is_census()) {
    std::vector<double> e_s;
    e_s.reserve(sample_b.n());
    for (std::size_t i : sample_b.units()) e_s.push_back(pop.y(i) - proxy.predictions()[i]);
    r.variance_estimate = madi_variance_estimate(sample_b, e_s);
  }
  return r;
}

EstimateResult madi_point(const Sample& sample_b, const Partition& part, const Population& pop,
                          const FittedModel& model) {
  return madi_point(sample_b, part, pop, MadiProxy(pop, part, model));
}

double madi_variance_estimate(const Sample& sample_b, std::span<const double> e_s, VarianceForm form) {
  return difference_variance_estimate(sample_b, e_s, form);
}

// --- intervals --------------------------------------------------------------

double t_quantile(double probability, double df) {
  if (!(probability > 0.0 && probability < 1.0)) throw DomainError("quantile probability must lie in (0, 1)");
  if (!(df > 0.0)) throw DomainError("degrees of freedom must be positive");
  return boost::math::quantile(boost::math::students_t_distribution<double>(df), probability);
}

Interval confidence_interval(double point, double variance_estimate, std::size_t n, double level) {
  if (n < 2) throw InsufficientSampleError("confidence interval needs n >= 2");
  if (!(level > 0.0 && level < 1.0)) throw DomainError("confidence level must lie in (0, 1)");
  if (!(variance_estimate >= 0.0)) throw DomainError("variance estimate must be nonnegative");
  const double half = t_quantile((1.0 + level) / 2.0, static_cast<double>(n - 1)) * std::sqrt(variance_estimate);
  return Interval{point - half, point + half};
}

void write_estimate_header(std::ostream& out) { out << "strategy,n,point,var_est,status\n"; }

void write_estimate_row(std::ostream& out, std::string_view strategy, std::size_t n, const EstimateResult& r) {
  out << strategy << ',' << n << ',' << (r.point ? format_real(*r.point) : "") << ','
      << (r.variance_estimate ? format_real(*r.variance_estimate) : "") << ',' << to_string(r.status) << '\n';
}

}  // namespace madi
