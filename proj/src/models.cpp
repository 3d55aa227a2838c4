#include "madi/models.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>
#include <thread>

#include <json.hpp>

#include "madi/error.hpp"
#include "madi/linear_model.hpp"
#include "madi/summation.hpp"
#include "tree_builder.hpp"

namespace madi {

TrainingSet TrainingSet::from_units(const Population& pop, std::span<const std::size_t> units) {
  TrainingSet t;
  const std::size_t p = pop.aux_dim();
  t.x.resize(static_cast<Eigen::Index>(units.size()), static_cast<Eigen::Index>(p));
  t.y.reserve(units.size());
  for (std::size_t r = 0; r < units.size(); ++r) {
    const auto xi = pop.x(units[r]);
    for (std::size_t j = 0; j < p; ++j) t.x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = xi[j];
    t.y.push_back(pop.y(units[r]));
  }
  t.source_units.assign(units.begin(), units.end());
  return t;
}

const char* to_string(ModelKind kind) noexcept {
  switch (kind) {
    case ModelKind::zero: return "zero";
    case ModelKind::ols: return "ols";
    case ModelKind::wls: return "wls";
    case ModelKind::tree: return "tree";
    case ModelKind::forest: return "forest";
  }
  return "unknown";
}

double FittedModel::predict(std::span<const double> x) const {
  if (x.size() != p_)
    throw DimensionError("model expects " + std::to_string(p_) + " auxiliary values, got " + std::to_string(x.size()));
  switch (kind_) {
    case ModelKind::zero:
      return 0.0;
    case ModelKind::ols:
    case ModelKind::wls: {
      const Linear& lin = std::get<Linear>(params_);
      CompensatedSum acc;
      std::size_t k = 0;
      if (lin.intercept) acc += lin.coefficients(k++);
      for (double v : x) acc += lin.coefficients(static_cast<Eigen::Index>(k++)) * v;
      return acc.value();
    }
    case ModelKind::tree:
      return std::get<RegressionTree>(params_).predict(x);
    case ModelKind::forest: {
      const auto& trees = std::get<Forest>(params_).trees;
      CompensatedSum acc;
      double lo = trees.front().predict(x);
      double hi = lo;
      for (const auto& t : trees) {
        const double v = t.predict(x);
        acc += v;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      return lo == hi ? lo : std::clamp(acc.value() / static_cast<double>(trees.size()), lo, hi);
    }
  }
  return 0.0;
}

FittedModel fit_zero(std::size_t p) {
  FittedModel m;
  m.kind_ = ModelKind::zero;
  m.p_ = p;
  return m;
}

namespace {

void require_rows(const TrainingSet& train) {
  if (train.rows() == 0) throw DomainError("training set is empty");
  if (static_cast<std::size_t>(train.x.rows()) != train.rows())
    throw DimensionError("training matrix rows do not match response length");
}

}  // namespace

FittedModel fit_wls(const TrainingSet& train, std::span<const double> weights, bool intercept) {
  require_rows(train);
  if (weights.size() != train.rows()) throw DimensionError("weights length does not match training rows");
  const WeightedLeastSquares solver(design_matrix(train.x, intercept), weights);
  FittedModel m;
  m.kind_ = ModelKind::wls;
  m.p_ = train.dim();
  m.params_ = FittedModel::Linear{intercept, solver.solve(train.y)};
  m.training_units_ = train.source_units;
  return m;
}

FittedModel fit_ols(const TrainingSet& train, bool intercept) {
  const std::vector<double> ones(train.rows(), 1.0);
  FittedModel m = fit_wls(train, ones, intercept);
  m.kind_ = ModelKind::ols;
  return m;
}

FittedModel fit_tree(const TrainingSet& train, const TreeParams& params) {
  require_rows(train);
  std::vector<std::uint32_t> rows(train.rows());
  std::iota(rows.begin(), rows.end(), 0u);
  CounterRng rng = derive_stream(params.seed, {0});
  const detail::TreeGrowth growth{params.min_leaf, params.max_depth, params.mtry.value_or(train.dim())};
  FittedModel m;
  m.kind_ = ModelKind::tree;
  m.p_ = train.dim();
  m.params_ = detail::grow_tree(train.x, train.y, std::move(rows), growth, rng);
  m.training_units_ = train.source_units;
  return m;
}

FittedModel fit_forest(const TrainingSet& train, const ForestParams& params) {
  require_rows(train);
  const std::size_t p = train.dim();
  if (params.n_trees < 1) throw DomainError("forest needs n_trees >= 1");
  if (params.min_leaf < 1) throw DomainError("forest needs min_leaf >= 1");
  const std::size_t mtry = params.mtry.value_or(std::max<std::size_t>(1, p / 3));
  if (p > 0 && (mtry < 1 || mtry > p)) throw DomainError("mtry must lie in 1..p");
  const detail::TreeGrowth growth{params.min_leaf, params.max_depth, mtry};
  const std::size_t n_rows = train.rows();

  std::vector<RegressionTree> trees(params.n_trees);
  auto grow = [&](std::size_t t) {
    CounterRng rng = derive_stream(params.seed, {t});
    std::vector<std::uint32_t> rows(n_rows);
    if (params.bootstrap)
      for (auto& r : rows) r = static_cast<std::uint32_t>(rng.below(n_rows));
    else
      std::iota(rows.begin(), rows.end(), 0u);
    trees[t] = detail::grow_tree(train.x, train.y, std::move(rows), growth, rng);
  };

  const unsigned workers = std::max(1u, std::min<unsigned>(params.threads, static_cast<unsigned>(params.n_trees)));
  if (workers == 1) {
    for (std::size_t t = 0; t < params.n_trees; ++t) grow(t);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t t = w; t < params.n_trees; t += workers) grow(t);
      });
  }

  FittedModel m;
  m.kind_ = ModelKind::forest;
  m.p_ = p;
  m.params_ = FittedModel::Forest{std::move(trees)};
  m.training_units_ = train.source_units;
  return m;
}

std::vector<double> predict_units(const FittedModel& model, const Population& pop, std::span<const std::size_t> units) {
  std::vector<double> out;
  out.reserve(units.size());
  for (std::size_t i : units) out.push_back(model.predict(pop.x(i)));
  return out;
}

std::vector<double> predict_population(const FittedModel& model, const Population& pop) {
  std::vector<double> out;
  out.reserve(pop.size());
  for (std::size_t i = 0; i < pop.size(); ++i) out.push_back(model.predict(pop.x(i)));
  return out;
}

namespace {

nlohmann::json tree_json(const RegressionTree& tree) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : tree.nodes) {
    if (n.feature < 0)
      nodes.push_back({{"leaf", n.value}});
    else
      nodes.push_back({{"feature", n.feature}, {"threshold", n.threshold}, {"left", n.left}, {"right", n.right}});
  }
  return nodes;
}

}  // namespace

void FittedModel::write_json(std::ostream& out) const {
  nlohmann::json j;
  j["kind"] = to_string(kind_);
  j["p"] = p_;
  j["training_rows"] = training_units_.size();
  if (const auto* lin = linear()) {
    j["intercept"] = lin->intercept;
    j["coefficients"] = std::vector<double>(lin->coefficients.data(), lin->coefficients.data() + lin->coefficients.size());
  } else if (const auto* t = tree()) {
    j["nodes"] = tree_json(*t);
  } else if (const auto* f = forest()) {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& t : f->trees) trees.push_back(tree_json(t));
    j["trees"] = std::move(trees);
  }
  out << j.dump(2) << '\n';
}

}  // namespace madi
