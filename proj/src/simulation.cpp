#include "madi/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <thread>

#include "madi/error.hpp"
#include "madi/summation.hpp"

namespace madi {

const char* to_string(Strategy s) noexcept {
  switch (s) {
    case Strategy::srs_u_ht: return "srs_u_ht";
    case Strategy::srs_u_greg: return "srs_u_greg";
    case Strategy::srs_u_rf: return "srs_u_rf";
    case Strategy::srs_b_di_ht: return "srs_b_di_ht";
    case Strategy::srs_b_di_greg: return "srs_b_di_greg";
    case Strategy::srs_b_di_rf: return "srs_b_di_rf";
    case Strategy::srs_b_madi_ols: return "srs_b_madi_ols";
    case Strategy::srs_b_madi_rf: return "srs_b_madi_rf";
  }
  return "unknown";
}

Strategy parse_strategy(std::string_view text) {
  for (Strategy s : kAllStrategies)
    if (text == to_string(s)) return s;
  throw DomainError("unknown strategy '" + std::string(text) + "'");
}

FrameKind design_of(Strategy s) noexcept {
  switch (s) {
    case Strategy::srs_u_ht:
    case Strategy::srs_u_greg:
    case Strategy::srs_u_rf:
      return FrameKind::U;
    default:
      return FrameKind::B;
  }
}

bool needs_partition(Strategy s) noexcept { return design_of(s) == FrameKind::B; }

bool has_variance_estimator(Strategy s) noexcept {
  return s != Strategy::srs_u_rf && s != Strategy::srs_b_di_rf;
}

void SimulationConfig::validate() const {
  if (strategies.empty()) throw DomainError("strategies: at least one strategy is required");
  if (grid.empty()) throw DomainError("grid: at least one sample size is required");
  if (!enumerate && replicates < 1) throw DomainError("replicates: M must be >= 1");
  if (!(level > 0.0 && level < 1.0)) throw DomainError("level: must lie in (0, 1)");
  if (!(npd.fraction > 0.0 && npd.fraction < 1.0)) throw DomainError("fraction: must lie in (0, 1)");
  if (threads < 1) throw DomainError("threads: must be >= 1");
  if (forest.n_trees < 1) throw DomainError("forest_trees: must be >= 1");
  if (forest.min_leaf < 1) throw DomainError("forest_min_leaf: must be >= 1");
  const bool variance_bearing =
      std::any_of(strategies.begin(), strategies.end(), [](Strategy s) { return has_variance_estimator(s); });
  for (std::size_t n : grid) {
    if (n < 1) throw DomainError("grid: sample sizes must be >= 1");
    if (variance_bearing && n < 2) throw DomainError("grid: sample sizes must be >= 2 for variance-bearing strategies");
  }
}

const CellReport& SimulationReport::cell(Strategy s, std::size_t n) const {
  for (const auto& c : cells)
    if (c.strategy == s && c.n == n) return c;
  throw DomainError(std::string("no report cell for ") + to_string(s) + " at n = " + std::to_string(n));
}

StrategyEvaluator::StrategyEvaluator(Strategy strategy, const Population& pop, const Partition* partition,
                                     const ForestParams& forest)
    : strategy_(strategy),
      pop_(&pop),
      partition_(partition),
      frame_(FrameRef::whole(pop)) {
  if (needs_partition(strategy)) {
    if (!partition) throw DomainError(std::string(to_string(strategy)) + " needs a partition");
    if (partition->size() != pop.size()) throw DomainError("partition does not match population");
    frame_ = FrameRef::complement(*partition);
    t_a_ = total_over(pop, partition->a_units());
  }
  switch (strategy) {
    case Strategy::srs_u_greg:
    case Strategy::srs_b_di_greg:
      greg_.emplace(pop, frame_);
      break;
    case Strategy::srs_b_madi_ols:
      try {
        model_ = fit_ols(TrainingSet::from_units(pop, partition->a_units()));
      } catch (const SingularFitError&) {
        model_singular_ = true;
      }
      break;
    case Strategy::srs_b_madi_rf:
      model_ = fit_forest(TrainingSet::from_units(pop, partition->a_units()), forest);
      break;
    default:
      break;
  }
  if (model_) proxy_.emplace(pop, *partition, *model_);
}

EstimateResult StrategyEvaluator::operator()(const Sample& sample, const ForestParams& sample_forest) const {
  const Population& pop = *pop_;
  switch (strategy_) {
    case Strategy::srs_u_ht: {
      const auto y = sample.y_values(pop);
      EstimateResult r;
      r.point = ht_point(sample, y);
      if (sample.n() >= 2 || sample.design().is_census()) r.variance_estimate = difference_variance_estimate(sample, y);
      return r;
    }
    case Strategy::srs_u_greg:
      return greg_point(sample, pop, *greg_);
    case Strategy::srs_u_rf:
      return naive_model_assisted_point(sample, pop, sample_forest);
    case Strategy::srs_b_di_ht:
      return di_ht_point(sample, *partition_, pop);
    case Strategy::srs_b_di_greg: {
      EstimateResult r = greg_point(sample, pop, *greg_);
      if (r.point) *r.point += t_a_;
      return r;
    }
    case Strategy::srs_b_di_rf: {
      EstimateResult r = naive_model_assisted_point(sample, pop, sample_forest);
      *r.point += t_a_;
      return r;
    }
    case Strategy::srs_b_madi_ols:
    case Strategy::srs_b_madi_rf:
      if (model_singular_) return EstimateResult::failed(EstimateStatus::singular_model);
      return madi_point(sample, *partition_, pop, *proxy_);
  }
  return EstimateResult::failed(EstimateStatus::insufficient_sample);
}

SimulationInputs prepare_inputs(const SimulationConfig& config) {
  Population pop = config.population.file
                       ? load_csv(*config.population.file)
                       : generate_synthetic(config.population.synthetic_seed, config.population.synthetic_n,
                                            config.population.synthetic_p);
  SimulationInputs in{std::move(pop), std::nullopt, std::nullopt};
  if (config.npd.partition_file) {
    in.partition = load_partition(*config.npd.partition_file, in.population);
  } else if (config.npd.scenario) {
    NpdScenario sc = generate_npd(in.population, *config.npd.scenario, config.npd.fraction, config.npd.seed);
    in.partition = std::move(sc.partition);
    in.propensity = std::move(sc.propensity);
  }
  return in;
}

namespace {

std::uint64_t design_code(FrameKind k) { return k == FrameKind::U ? 0x55 : 0x42; }

CellReport aggregate(Strategy s, std::size_t n, std::span<const ReplicateRecord> recs, double t_y) {
  CellReport c;
  c.strategy = s;
  c.n = n;
  c.replicates = recs.size();
  CompensatedSum w_ok, w_bias, w_sq, w_int, w_cov, w_var;
  for (const auto& r : recs) {
    if (!r.result.point) {
      ++c.na_count;
      continue;
    }
    ++c.successes;
    const double err = *r.result.point - t_y;
    w_ok += r.weight;
    w_bias += r.weight * err;
    w_sq += r.weight * err * err;
    if (r.interval) {
      w_int += r.weight;
      if (r.interval->contains(t_y)) w_cov += r.weight;
    }
    if (r.result.variance_estimate) w_var += r.weight * *r.result.variance_estimate;
  }
  if (c.successes > 0) {
    c.bias = w_bias.value() / w_ok.value();
    c.mse = w_sq.value() / w_ok.value();
    c.rmse = std::sqrt(*c.mse);
    if (has_variance_estimator(s) && w_int.value() > 0.0) {
      c.coverage = w_cov.value() / w_int.value();
      c.mean_var_est = w_var.value() / w_int.value();
    }
  }
  return c;
}

}  // namespace

SimulationReport run_grid(const SimulationConfig& config, const Population& pop, const Partition* partition) {
  config.validate();
  const bool b_design = std::any_of(config.strategies.begin(), config.strategies.end(), needs_partition);
  if (b_design && !partition) throw DomainError("strategies sampling from B need a partition");
  if (partition && partition->size() != pop.size()) throw DomainError("partition does not match population");

  SimulationReport report;
  report.t_y = total(pop, Variable::study());

  const FrameRef frame_u = FrameRef::whole(pop);
  std::optional<FrameRef> frame_b;
  if (partition) frame_b = FrameRef::complement(*partition);

  for (std::size_t n : config.grid) {
    if (n > pop.size()) throw DomainError("grid: n = " + std::to_string(n) + " exceeds N");
    if (b_design && n > frame_b->size()) throw DomainError("grid: n = " + std::to_string(n) + " exceeds N_B");
  }

  ForestParams a_forest = config.forest;
  a_forest.threads = config.threads;
  std::vector<StrategyEvaluator> states;
  states.reserve(config.strategies.size());
  for (Strategy s : config.strategies) states.emplace_back(s, pop, partition, a_forest);

  for (std::size_t n : config.grid) {
    for (FrameKind kind : {FrameKind::U, FrameKind::B}) {
      std::vector<std::size_t> idx;
      for (std::size_t k = 0; k < states.size(); ++k)
        if (design_of(states[k].strategy()) == kind) idx.push_back(k);
      if (idx.empty()) continue;
      const FrameRef& frame = kind == FrameKind::U ? frame_u : *frame_b;

      std::vector<Sample> enumerated;
      std::size_t m_total = config.replicates;
      double weight = 1.0;
      if (config.enumerate) {
        SampleEnumeration en(frame, n, config.enumeration_cap);
        enumerated.reserve(static_cast<std::size_t>(en.count()));
        while (auto s = en.next()) enumerated.push_back(std::move(*s));
        m_total = enumerated.size();
        weight = en.probability();
      }

      std::vector<std::vector<ReplicateRecord>> slots(idx.size(), std::vector<ReplicateRecord>(m_total));
      auto work = [&](unsigned worker, unsigned n_workers) {
        SrsSampler sampler(frame);
        for (std::size_t m = worker; m < m_total; m += n_workers) {
          std::optional<Sample> drawn;
          if (!config.enumerate) {
            CounterRng rng = derive_stream(config.master_seed, {design_code(kind), n, m});
            drawn = sampler.draw(n, rng);
          }
          const Sample& sample = config.enumerate ? enumerated[m] : *drawn;
          for (std::size_t k = 0; k < idx.size(); ++k) {
            const StrategyEvaluator& st = states[idx[k]];
            ForestParams fp = config.forest;
            fp.threads = 1;
            fp.seed = derive_key(config.forest.seed ^ config.master_seed,
                                 {static_cast<std::uint64_t>(st.strategy()), n, m});
            ReplicateRecord rec{st.strategy(), n, m, weight, st(sample, fp), std::nullopt};
            if (rec.result.point && rec.result.variance_estimate && n >= 2)
              rec.interval = confidence_interval(*rec.result.point, *rec.result.variance_estimate, n, config.level);
            slots[k][m] = std::move(rec);
          }
        }
      };
      const unsigned workers = static_cast<unsigned>(std::max<std::size_t>(1, std::min<std::size_t>(config.threads, m_total)));
      if (workers == 1) {
        work(0, 1);
      } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w, workers);
      }

      for (std::size_t k = 0; k < idx.size(); ++k) {
        report.cells.push_back(aggregate(states[idx[k]].strategy(), n, slots[k], report.t_y));
        if (config.keep_replicates)
          report.records.insert(report.records.end(), slots[k].begin(), slots[k].end());
      }
    }
  }

  // Present cells in config order: strategy-major, then n.
  std::vector<CellReport> ordered;
  for (Strategy s : config.strategies)
    for (std::size_t n : config.grid) ordered.push_back(report.cell(s, n));
  report.cells = std::move(ordered);
  return report;
}

SimulationReport run_grid(const SimulationConfig& config) {
  config.validate();
  const bool b_design = std::any_of(config.strategies.begin(), config.strategies.end(), needs_partition);
  if (b_design && !config.npd.partition_file && !config.npd.scenario)
    throw DomainError("scenario: strategies sampling from B need a scenario or partition file");
  const SimulationInputs in = prepare_inputs(config);
  return run_grid(config, in.population, in.partition ? &*in.partition : nullptr);
}

double bias_metric(std::span<const double> estimates, double t_y) {
  if (estimates.empty()) throw DomainError("bias needs at least one estimate");
  CompensatedSum acc;
  for (double e : estimates) acc += e - t_y;
  return acc.value() / static_cast<double>(estimates.size());
}

double mse_metric(std::span<const double> estimates, double t_y) {
  if (estimates.empty()) throw DomainError("MSE needs at least one estimate");
  CompensatedSum acc;
  for (double e : estimates) acc += (e - t_y) * (e - t_y);
  return acc.value() / static_cast<double>(estimates.size());
}

double coverage_metric(std::span<const Interval> intervals, double t_y) {
  if (intervals.empty()) throw DomainError("coverage needs at least one interval");
  std::size_t hits = 0;
  for (const auto& ci : intervals) hits += ci.contains(t_y) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(intervals.size());
}

double srs_total_variance(std::size_t frame_size, std::size_t n, double s2) {
  if (n < 1 || n > frame_size) throw DomainError("sample size outside 1..N");
  const double big = static_cast<double>(frame_size);
  const double dn = static_cast<double>(n);
  return big * big * (1.0 - dn / big) * s2 / dn;
}

double theoretical_cv(double variance, double total) {
  if (total == 0.0) throw DomainError("coefficient of variation undefined for a zero total");
  if (!(variance >= 0.0)) throw DomainError("variance must be nonnegative");
  return std::sqrt(variance) / total;
}

std::size_t required_sample_size(const SampleSizeInputs& in) {
  if (in.frame_size < 1) throw DomainError("sample size planning needs N >= 1");
  if (!(in.cv_target > 0.0)) throw DomainError("target CV must be positive");
  if (!(in.total > 0.0)) throw DomainError("planning total must be positive");
  if (!(in.s2 >= 0.0)) throw DomainError("planning variance must be nonnegative");
  const std::size_t big_n = in.frame_size;
  const double bn = static_cast<double>(big_n);
  const double ycv = in.total * in.cv_target;
  const double raw = bn * bn * in.s2 / (ycv * ycv + bn * in.s2);
  const std::size_t floor_n = std::min<std::size_t>(2, big_n);
  std::size_t n = std::clamp<std::size_t>(static_cast<std::size_t>(std::ceil(raw)), floor_n, big_n);
  // The closed form can land one off after rounding; settle on the CV itself.
  auto cv_at = [&](std::size_t k) { return theoretical_cv(srs_total_variance(big_n, k, in.s2), in.total); };
  while (n > floor_n && cv_at(n - 1) <= in.cv_target) --n;
  while (n < big_n && cv_at(n) > in.cv_target) ++n;
  return n;
}

PlanningVariances planning_variances(const Population& pop, const Partition* partition, const FittedModel* model) {
  PlanningVariances out;
  out.s2_y = population_variance(pop.y_values());
  std::vector<std::size_t> all(pop.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const FittedModel census = fit_ols(TrainingSet::from_units(pop, all), true);
  std::vector<double> resid(pop.size());
  for (std::size_t i = 0; i < pop.size(); ++i) resid[i] = pop.y(i) - census.predict(pop.x(i));
  out.s2_greg = population_variance(resid);
  if (partition && model) {
    const MadiProxy proxy(pop, *partition, *model);
    out.s2_di = population_variance(proxy.b_residuals());
  }
  return out;
}

namespace {

void opt(std::ostream& out, const std::optional<double>& v) {
  if (v) out << format_real(*v);
}

}  // namespace

void write_report_csv(std::ostream& out, const SimulationReport& report) {
  out << "strategy,n,M,na_count,bias,mse,rmse,coverage,mean_var_est\n";
  for (const auto& c : report.cells) {
    out << to_string(c.strategy) << ',' << c.n << ',' << c.replicates << ',' << c.na_count << ',';
    opt(out, c.bias);
    out << ',';
    opt(out, c.mse);
    out << ',';
    opt(out, c.rmse);
    out << ',';
    opt(out, c.coverage);
    out << ',';
    opt(out, c.mean_var_est);
    out << '\n';
  }
}

void write_replicates_csv(std::ostream& out, const SimulationReport& report) {
  out << "strategy,n,replicate,weight,point,var_est,lo,hi,status\n";
  for (const auto& r : report.records) {
    out << to_string(r.strategy) << ',' << r.n << ',' << r.replicate << ',' << format_real(r.weight) << ',';
    opt(out, r.result.point);
    out << ',';
    opt(out, r.result.variance_estimate);
    out << ',';
    if (r.interval) out << format_real(r.interval->lo) << ',' << format_real(r.interval->hi);
    else out << ',';
    out << ',' << to_string(r.result.status) << '\n';
  }
}

void write_metric_csv(std::ostream& out, const SimulationReport& report, Metric metric) {
  out << "strategy,n,value\n";
  for (const auto& c : report.cells) {
    const std::optional<double>& v = metric == Metric::bias ? c.bias : metric == Metric::rmse ? c.rmse : c.coverage;
    if (metric == Metric::coverage && !has_variance_estimator(c.strategy)) continue;
    out << to_string(c.strategy) << ',' << c.n << ',';
    opt(out, v);
    out << '\n';
  }
}

void write_sample_size_csv(std::ostream& out, std::span<const SampleSizeRow> rows) {
  out << "strategy,scenario,l,required_n\n";
  for (const auto& r : rows) {
    out << r.strategy << ',' << r.scenario << ',';
    if (r.l) out << *r.l;
    out << ',' << r.required_n << '\n';
  }
}

}  // namespace madi
