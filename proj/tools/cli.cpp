#include "cli.hpp"

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iterator>
#include <ostream>
#include <sstream>

#include "madi/error.hpp"
#include "madi/simulation.hpp"

namespace madi::cli {

namespace fs = std::filesystem;

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 digest failed");
  std::string hex;
  hex.reserve(2 * len);
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

namespace {

/// Bad flag values detected after CLI11 parsing.
class UsageError : public Error {
public:
  using Error::Error;
};

struct Globals {
  std::uint64_t seed = 1;
  unsigned threads = 1;
  fs::path out_dir = ".";
  bool seed_given = false;
  bool threads_given = false;

  fs::path resolve(const fs::path& p) const { return p.is_absolute() ? p : out_dir / p; }
};

class Manifest {
public:
  Manifest(std::string command, const std::vector<std::string>& args)
      : command_(std::move(command)), args_(args), start_(std::chrono::steady_clock::now()) {}

  void set_seed(std::uint64_t seed) { seed_ = seed; }
  void set_config(std::string text) { config_ = std::move(text); }

  /// Reads a whole input file and records the digest of exactly those bytes.
  std::string read_input(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    inputs_.push_back({{"path", path.string()}, {"sha256", sha256_hex(bytes)}, {"bytes", bytes.size()}});
    return bytes;
  }

  void write_output(const fs::path& path, const std::function<void(std::ostream&)>& body) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    body(out);
    out.close();
    if (!out) throw Error("failed writing " + path.string());
    outputs_.push_back(path);
  }

  /// Writes the manifest and returns the listed outputs that are missing.
  std::vector<fs::path> finish(const fs::path& manifest_path) const {
    std::vector<fs::path> missing;
    nlohmann::json outs = nlohmann::json::array();
    for (const auto& p : outputs_) {
      outs.push_back(p.string());
      if (!fs::exists(p)) missing.push_back(p);
    }
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    nlohmann::json j = {{"command", command_},
                        {"arguments", args_},
                        {"master_seed", seed_},
                        {"version", kVersion},
                        {"inputs", inputs_},
                        {"outputs", outs},
                        {"wall_time_seconds", wall}};
    if (!config_.empty()) j["config"] = config_;
    std::ofstream out(manifest_path);
    out << j.dump(2) << '\n';
    if (!out) missing.push_back(manifest_path);
    return missing;
  }

private:
  std::string command_;
  std::vector<std::string> args_;
  std::chrono::steady_clock::time_point start_;
  std::uint64_t seed_ = 0;
  std::string config_;
  nlohmann::json inputs_ = nlohmann::json::array();
  std::vector<fs::path> outputs_;
};

int report_missing(const std::vector<fs::path>& missing, std::ostream& err) {
  if (missing.empty()) return kExitOk;
  err << "error: missing outputs:";
  for (const auto& p : missing) err << ' ' << p.string();
  err << '\n';
  return kExitError;
}

fs::path manifest_for(const fs::path& output) {
  fs::path m = output;
  m.replace_extension(".manifest.json");
  return m;
}

Population load_population(Manifest& manifest, const fs::path& path) {
  std::istringstream in(manifest.read_input(path));
  return read_population_csv(in);
}

Partition load_partition_file(Manifest& manifest, const fs::path& path, const Population& pop) {
  std::istringstream in(manifest.read_input(path));
  return read_partition_csv(in, pop);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) items.push_back(item);
  return items;
}

ForestParams forest_params(std::size_t trees, std::size_t min_leaf, std::uint64_t seed, unsigned threads) {
  ForestParams fp;
  fp.n_trees = trees;
  fp.min_leaf = min_leaf;
  fp.seed = seed;
  fp.threads = threads;
  return fp;
}

// --- gen-pop ----------------------------------------------------------------

struct GenPopArgs {
  std::size_t n = 10000;
  std::size_t p = 12;
  fs::path out = "population.csv";
};

int cmd_gen_pop(const GenPopArgs& a, const Globals& g, const std::vector<std::string>& args, std::ostream& out,
                std::ostream& err) {
  Manifest manifest("gen-pop", args);
  manifest.set_seed(g.seed);
  const Population pop = generate_synthetic(g.seed, a.n, a.p);
  const fs::path path = g.resolve(a.out);
  manifest.write_output(path, [&](std::ostream& o) { write_population_csv(o, pop); });
  out << "wrote " << path.string() << " (" << pop.size() << " units, " << pop.aux_dim() << " auxiliaries)\n";
  return report_missing(manifest.finish(manifest_for(path)), err);
}

// --- gen-npd ----------------------------------------------------------------

struct GenNpdArgs {
  fs::path pop;
  std::string scenario;
  double fraction = 0.7;
  std::string out_prefix = "npd";
};

int cmd_gen_npd(const GenNpdArgs& a, const Globals& g, const std::vector<std::string>& args, std::ostream& out,
                std::ostream& err) {
  Manifest manifest("gen-npd", args);
  manifest.set_seed(g.seed);
  const Scenario scenario = parse_scenario(a.scenario);
  const Population pop = load_population(manifest, a.pop);
  const NpdScenario npd = generate_npd(pop, scenario, a.fraction, g.seed);
  const fs::path prefix = g.resolve(a.out_prefix);
  const auto with_suffix = [&](const char* suffix) { return fs::path(prefix.string() + suffix); };

  manifest.write_output(with_suffix("_partition.csv"),
                        [&](std::ostream& o) { write_partition_csv(o, pop, npd.partition); });
  if (npd.propensity)
    manifest.write_output(with_suffix("_theta.csv"),
                          [&](std::ostream& o) { write_propensity_csv(o, pop, *npd.propensity); });
  const NpdSummary s = summarize(pop, npd.partition);
  manifest.write_output(with_suffix("_summary.csv"), [&](std::ostream& o) {
    o << "scenario,fraction,n_a,n_b,mean_y_a,mean_y_b\n"
      << to_string(scenario) << ',' << format_real(a.fraction) << ',' << s.n_a << ',' << s.n_b << ','
      << format_real(s.mean_y_a) << ',' << format_real(s.mean_y_b) << '\n';
  });
  out << "scenario=" << to_string(scenario) << " fraction=" << format_real(a.fraction) << " n_a=" << s.n_a
      << " n_b=" << s.n_b << " mean_y_a=" << format_real(s.mean_y_a) << " mean_y_b=" << format_real(s.mean_y_b)
      << '\n';
  return report_missing(manifest.finish(with_suffix(".manifest.json")), err);
}

// --- estimate ---------------------------------------------------------------

struct EstimateArgs {
  fs::path pop;
  std::optional<fs::path> partition;
  std::optional<fs::path> sample;
  std::optional<std::size_t> draw;
  std::string strategy;
  double level = 0.95;
  std::size_t trees = 100;
  std::size_t min_leaf = 5;
  fs::path out = "estimate.csv";
};

std::string failure_cause(Strategy s, EstimateStatus status, std::size_t n, const Population& pop) {
  if (status == EstimateStatus::singular_model) {
    if (s == Strategy::srs_b_madi_ols)
      return "the OLS working model fitted on A is singular";
    return "the working-model normal matrix is singular with n = " + std::to_string(n) + " sampled units for " +
           std::to_string(pop.aux_dim() + 1) + " regressors (intercept plus " + std::to_string(pop.aux_dim()) +
           " auxiliaries)";
  }
  return "the sample is too small for this estimator (n = " + std::to_string(n) + ")";
}

int cmd_estimate(const EstimateArgs& a, const Globals& g, const std::vector<std::string>& args, std::ostream& out,
                 std::ostream& err) {
  if (a.sample.has_value() == a.draw.has_value()) throw UsageError("exactly one of --sample or --draw is required");
  if (!(a.level > 0.0 && a.level < 1.0)) throw UsageError("--level must lie in (0, 1)");
  const Strategy strategy = parse_strategy(a.strategy);
  if (needs_partition(strategy) && !a.partition)
    throw UsageError(std::string(to_string(strategy)) + " needs --partition");

  Manifest manifest("estimate", args);
  manifest.set_seed(g.seed);
  const Population pop = load_population(manifest, a.pop);
  std::optional<Partition> part;
  if (a.partition) part = load_partition_file(manifest, *a.partition, pop);

  const ForestParams forest = forest_params(a.trees, a.min_leaf, g.seed, g.threads);
  const StrategyEvaluator evaluator(strategy, pop, part ? &*part : nullptr, forest);

  std::optional<Sample> sample;
  if (a.sample) {
    std::istringstream in(manifest.read_input(*a.sample));
    sample = read_sample_csv(in, pop, evaluator.frame());
  } else {
    if (*a.draw < 1 || *a.draw > evaluator.frame().size())
      throw UsageError("--draw must lie in 1.." + std::to_string(evaluator.frame().size()));
    CounterRng rng = derive_stream(g.seed, {0x64726177ull});
    sample = draw_srs(evaluator.frame(), *a.draw, rng);
    manifest.write_output(g.resolve("sample.csv"), [&](std::ostream& o) { write_sample_csv(o, pop, *sample); });
  }

  ForestParams sample_forest = forest;
  sample_forest.seed = derive_key(g.seed, {static_cast<std::uint64_t>(strategy)});
  const EstimateResult r = evaluator(*sample, sample_forest);
  const std::size_t n = sample->n();

  const fs::path path = g.resolve(a.out);
  manifest.write_output(path, [&](std::ostream& o) {
    write_estimate_header(o);
    write_estimate_row(o, to_string(strategy), n, r);
  });

  out << "strategy: " << to_string(strategy) << '\n' << "n: " << n << '\n';
  out << "point: " << (r.point ? format_real(*r.point) : "NA") << '\n';
  out << "variance_estimate: " << (r.variance_estimate ? format_real(*r.variance_estimate) : "NA") << '\n';
  if (r.point && r.variance_estimate) {
    std::optional<Interval> ci;
    if (n >= 2) ci = confidence_interval(*r.point, *r.variance_estimate, n, a.level);
    else if (sample->design().is_census()) ci = Interval{*r.point, *r.point};
    if (ci) out << "ci: [" << format_real(ci->lo) << ", " << format_real(ci->hi) << "]\n";
    else out << "ci: NA\n";
  } else {
    out << "ci: NA\n";
  }
  out << "status: " << to_string(r.status) << '\n';

  const int missing = report_missing(manifest.finish(manifest_for(path)), err);
  if (!r.ok()) {
    err << "error: " << to_string(r.status) << ": " << failure_cause(strategy, r.status, n, pop) << '\n';
    return r.status == EstimateStatus::singular_model ? kExitSingularModel : kExitInsufficientSample;
  }
  return missing;
}

// --- simulate ---------------------------------------------------------------

struct SimulateArgs {
  std::optional<fs::path> config;
  std::vector<std::string> settings;
  std::optional<std::string> population;
  std::optional<std::string> partition;
  std::optional<std::string> scenario;
  std::optional<std::string> fraction;
  std::optional<std::string> strategies;
  std::optional<std::string> grid;
  std::optional<std::string> replicates;
  std::optional<std::string> level;
  bool enumerate = false;
  bool dump_replicates = false;
};

int cmd_simulate(const SimulateArgs& a, const Globals& g, const std::vector<std::string>& args, std::ostream& out,
                 std::ostream& err) {
  Manifest manifest("simulate", args);
  SimulationConfig config;
  if (a.config) {
    std::istringstream in(manifest.read_input(*a.config));
    try {
      config = read_config(in);
    } catch (const ParseError& e) {
      throw ParseError(a.config->string() + ": " + e.what(), 0);
    }
  }
  const auto set = [&](const char* key, const std::optional<std::string>& v) {
    if (v) apply_setting(config, key, *v);
  };
  set("population", a.population);
  set("partition", a.partition);
  set("scenario", a.scenario);
  set("fraction", a.fraction);
  set("strategies", a.strategies);
  set("grid", a.grid);
  set("replicates", a.replicates);
  set("level", a.level);
  if (a.enumerate) config.enumerate = true;
  if (a.dump_replicates) config.keep_replicates = true;
  for (const auto& kv : a.settings) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + kv + "'");
    apply_setting(config, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (g.seed_given) config.master_seed = g.seed;
  if (g.threads_given) config.threads = g.threads;
  config.validate();
  const bool b_design = std::any_of(config.strategies.begin(), config.strategies.end(), needs_partition);
  if (b_design && !config.npd.partition_file && !config.npd.scenario)
    throw UsageError("strategies sampling from B need --scenario or --partition");

  manifest.set_seed(config.master_seed);
  std::ostringstream echo;
  write_config(echo, config);
  manifest.set_config(echo.str());

  // Inputs are parsed from the digested bytes rather than re-read.
  std::optional<Population> pop;
  if (config.population.file) pop = load_population(manifest, *config.population.file);
  else
    pop = generate_synthetic(config.population.synthetic_seed, config.population.synthetic_n,
                             config.population.synthetic_p);
  std::optional<Partition> part;
  std::optional<Propensity> theta;
  if (config.npd.partition_file) {
    part = load_partition_file(manifest, *config.npd.partition_file, *pop);
  } else if (config.npd.scenario) {
    NpdScenario npd = generate_npd(*pop, *config.npd.scenario, config.npd.fraction, config.npd.seed);
    part = std::move(npd.partition);
    theta = std::move(npd.propensity);
  }

  const SimulationReport report = run_grid(config, *pop, part ? &*part : nullptr);

  const auto path = [&](const char* name) { return g.resolve(name); };
  manifest.write_output(path("report.csv"), [&](std::ostream& o) { write_report_csv(o, report); });
  manifest.write_output(path("bias_vs_n.csv"), [&](std::ostream& o) { write_metric_csv(o, report, Metric::bias); });
  manifest.write_output(path("rmse_vs_n.csv"), [&](std::ostream& o) { write_metric_csv(o, report, Metric::rmse); });
  manifest.write_output(path("coverage_vs_n.csv"),
                        [&](std::ostream& o) { write_metric_csv(o, report, Metric::coverage); });
  if (theta) {
    manifest.write_output(path("y_theta.csv"), [&](std::ostream& o) {
      o << "id,y,theta,delta\n";
      for (std::size_t i = 0; i < pop->size(); ++i)
        o << pop->unit(i).id << ',' << format_real(pop->y(i)) << ',' << format_real(theta->theta[i]) << ','
          << (part->in_a(i) ? 1 : 0) << '\n';
    });
  }
  if (config.keep_replicates)
    manifest.write_output(path("replicates.csv"), [&](std::ostream& o) { write_replicates_csv(o, report); });
  manifest.write_output(path("config.txt"), [&](std::ostream& o) { o << echo.str(); });

  out << "t_y = " << format_real(report.t_y) << '\n';
  out << "wrote " << report.cells.size() << " report cells to " << path("report.csv").string() << '\n';
  return report_missing(manifest.finish(path("manifest.json")), err);
}

// --- sample-size ------------------------------------------------------------

struct SampleSizeArgs {
  fs::path pop;
  std::optional<fs::path> partition;
  std::optional<std::string> scenarios;
  std::string levels = "1:9";
  double cv = 0.01;
  std::string strategies = "srs_u_ht,srs_u_greg,srs_b_madi_rf";
  std::string cv_denominator = "yb";
  std::size_t trees = 100;
  std::size_t min_leaf = 5;
  fs::path out = "sample_size.csv";
};

int cmd_sample_size(const SampleSizeArgs& a, const Globals& g, const std::vector<std::string>& args,
                    std::ostream& out, std::ostream& err) {
  if (!(a.cv > 0.0)) throw UsageError("--cv must be positive");
  const CvDenominator denom = a.cv_denominator == "y" ? CvDenominator::population_total
                                                      : CvDenominator::stratum_total;
  std::vector<Strategy> strategies;
  for (const auto& s : split_list(a.strategies)) {
    const Strategy st = parse_strategy(s);
    if (st != Strategy::srs_u_ht && st != Strategy::srs_u_greg && st != Strategy::srs_b_madi_ols &&
        st != Strategy::srs_b_madi_rf)
      throw UsageError(std::string("no sample-size formula for ") + to_string(st));
    strategies.push_back(st);
  }
  const bool wants_madi = std::any_of(strategies.begin(), strategies.end(), needs_partition);
  if (wants_madi && !a.partition && !a.scenarios)
    throw UsageError("MADI strategies need --partition or --scenarios");

  Manifest manifest("sample-size", args);
  manifest.set_seed(g.seed);
  const Population pop = load_population(manifest, a.pop);
  const double t_y = total(pop, Variable::study());

  // Each entry is (scenario label, l, partition).
  struct Setting {
    std::string label;
    std::optional<int> l;
    Partition part;
  };
  std::vector<Setting> settings;
  if (wants_madi) {
    if (a.partition) {
      settings.push_back({"partition", std::nullopt, load_partition_file(manifest, *a.partition, pop)});
    } else {
      const auto levels = parse_grid(a.levels);
      for (const auto& name : split_list(*a.scenarios)) {
        const Scenario sc = parse_scenario(name);
        for (std::size_t l : levels) {
          if (l < 1 || l > 9) throw UsageError("--levels must lie in 1..9");
          NpdScenario npd = generate_npd(pop, sc, static_cast<double>(l) / 10.0, g.seed);
          settings.push_back({to_string(sc), static_cast<int>(l), std::move(npd.partition)});
        }
      }
    }
  }

  const PlanningVariances base = planning_variances(pop, nullptr, nullptr);
  std::vector<SampleSizeRow> rows;
  for (Strategy st : strategies) {
    if (!needs_partition(st)) {
      const double s2 = st == Strategy::srs_u_ht ? base.s2_y : base.s2_greg;
      rows.push_back({to_string(st), "-", std::nullopt,
                      required_sample_size(SampleSizeInputs{pop.size(), s2, t_y, a.cv})});
      continue;
    }
    for (const auto& s : settings) {
      const TrainingSet train = TrainingSet::from_units(pop, s.part.a_units());
      const FittedModel model = st == Strategy::srs_b_madi_ols
                                    ? fit_ols(train)
                                    : fit_forest(train, forest_params(a.trees, a.min_leaf, g.seed, g.threads));
      const MadiProxy proxy(pop, s.part, model);
      const double s2_di = s.part.n_b() >= 2 ? population_variance(proxy.b_residuals()) : 0.0;
      const double y_total = denom == CvDenominator::stratum_total ? total_over(pop, s.part.b_units()) : t_y;
      rows.push_back({to_string(st), s.label, s.l,
                      required_sample_size(SampleSizeInputs{s.part.n_b(), s2_di, y_total, a.cv})});
    }
  }

  const fs::path path = g.resolve(a.out);
  manifest.write_output(path, [&](std::ostream& o) { write_sample_size_csv(o, rows); });
  write_sample_size_csv(out, rows);
  return report_missing(manifest.finish(manifest_for(path)), err);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Survey estimation and data-integration simulation tool", "madi"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", kVersion);

  Globals g;
  app.add_option("--seed", g.seed, "Master seed");
  app.add_option("--threads", g.threads, "Worker threads (results do not depend on it)")->check(CLI::Range(1u, 1024u));
  app.add_option("--out-dir", g.out_dir, "Directory for relative output paths");

  GenPopArgs gp;
  auto* gen_pop = app.add_subcommand("gen-pop", "Generate a synthetic population CSV");
  gen_pop->add_option("--n", gp.n, "Population size")->check(CLI::Range(std::size_t{2}, std::size_t{100000000}));
  gen_pop->add_option("--p", gp.p, "Number of auxiliary columns (>= 2)")
      ->check(CLI::Range(std::size_t{2}, std::size_t{10000}));
  gen_pop->add_option("--out", gp.out, "Output CSV");

  GenNpdArgs gn;
  auto* gen_npd = app.add_subcommand("gen-npd", "Generate a nonprobability subset A for a scenario");
  gen_npd->add_option("--pop", gn.pop, "Population CSV")->required();
  gen_npd->add_option("--scenario", gn.scenario, "sim1 or k1..k8")->required();
  gen_npd->add_option("--fraction", gn.fraction, "Target share of U in A")->check(CLI::Range(0.0, 1.0));
  gen_npd->add_option("--out-prefix", gn.out_prefix, "Prefix for output files");

  EstimateArgs ea;
  auto* estimate = app.add_subcommand("estimate", "Estimate the total from one sample");
  estimate->add_option("--pop", ea.pop, "Population CSV")->required();
  estimate->add_option("--partition", ea.partition, "Partition CSV (id,delta)");
  estimate->add_option("--sample", ea.sample, "Sample CSV (id)");
  estimate->add_option("--draw", ea.draw, "Draw an SRS of this size from the strategy's frame");
  estimate->add_option("--strategy", ea.strategy, "Strategy name")->required();
  estimate->add_option("--level", ea.level, "Confidence level");
  estimate->add_option("--trees", ea.trees, "Forest size")->check(CLI::PositiveNumber);
  estimate->add_option("--min-leaf", ea.min_leaf, "Forest minimum leaf size")->check(CLI::PositiveNumber);
  estimate->add_option("--out", ea.out, "Output CSV");

  SimulateArgs sa;
  auto* simulate = app.add_subcommand("simulate", "Run the Monte Carlo grid");
  simulate->add_option("--config", sa.config, "key = value config file");
  simulate->add_option("--set", sa.settings, "Override one config key (key=value)");
  simulate->add_option("--population", sa.population, "Population CSV");
  simulate->add_option("--partition", sa.partition, "Partition CSV");
  simulate->add_option("--scenario", sa.scenario, "NPD scenario");
  simulate->add_option("--fraction", sa.fraction, "NPD fraction");
  simulate->add_option("--strategies", sa.strategies, "Comma-separated strategies or 'all'");
  simulate->add_option("--grid", sa.grid, "Sample sizes: a,b,c or first:last:step");
  simulate->add_option("--replicates", sa.replicates, "Replicates per cell");
  simulate->add_option("--level", sa.level, "Confidence level");
  simulate->add_flag("--enumerate", sa.enumerate, "Use every possible sample");
  simulate->add_flag("--dump-replicates", sa.dump_replicates, "Write replicates.csv");

  SampleSizeArgs ss;
  auto* sample_size = app.add_subcommand("sample-size", "Required sample size for a target CV");
  sample_size->add_option("--pop", ss.pop, "Population CSV")->required();
  sample_size->add_option("--partition", ss.partition, "Partition CSV for MADI rows");
  sample_size->add_option("--scenarios", ss.scenarios, "Scenarios to sweep for MADI rows");
  sample_size->add_option("--levels", ss.levels, "Values of l (fraction l/10) to sweep");
  sample_size->add_option("--cv", ss.cv, "Target coefficient of variation")
      ->check(CLI::PositiveNumber.description("> 0"));
  sample_size->add_option("--strategies", ss.strategies, "Comma-separated strategies");
  sample_size->add_option("--cv-denominator", ss.cv_denominator, "Total in the MADI CV")
      ->check(CLI::IsMember({"yb", "y"}));
  sample_size->add_option("--trees", ss.trees, "Forest size")->check(CLI::PositiveNumber);
  sample_size->add_option("--min-leaf", ss.min_leaf, "Forest minimum leaf size")->check(CLI::PositiveNumber);
  sample_size->add_option("--out", ss.out, "Output CSV");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }
  g.seed_given = app.count("--seed") > 0;
  g.threads_given = app.count("--threads") > 0;

  try {
    if (*gen_pop) return cmd_gen_pop(gp, g, args, out, err);
    if (*gen_npd) return cmd_gen_npd(gn, g, args, out, err);
    if (*estimate) return cmd_estimate(ea, g, args, out, err);
    if (*simulate) return cmd_simulate(sa, g, args, out, err);
    if (*sample_size) return cmd_sample_size(ss, g, args, out, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const SingularFitError& e) {
    err << "error: singular-model: " << e.what() << '\n';
    return kExitSingularModel;
  } catch (const InsufficientSampleError& e) {
    err << "error: insufficient-sample: " << e.what() << '\n';
    return kExitInsufficientSample;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitUsage;
}

}  // namespace madi::cli
