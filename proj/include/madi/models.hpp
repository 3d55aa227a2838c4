#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "madi/population.hpp"

namespace madi {

/// Rows of (x, y) used to fit a prediction model. `source_units` records the
/// population positions the rows came from, when they came from a population;
/// it travels into the fitted model so estimators can check where a model was
/// trained.
struct TrainingSet {
  Eigen::MatrixXd x;  // rows x p
  std::vector<double> y;
  std::vector<std::size_t> source_units;

  std::size_t rows() const noexcept { return y.size(); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(x.cols()); }

  static TrainingSet from_units(const Population& pop, std::span<const std::size_t> units);
};

struct TreeParams {
  std::size_t min_leaf = 5;
  std::optional<std::size_t> max_depth;
  /// Features tried per split; all features when unset.
  std::optional<std::size_t> mtry;
  std::uint64_t seed = 0;
};

struct ForestParams {
  std::size_t n_trees = 100;
  /// Defaults to max(1, floor(p / 3)).
  std::optional<std::size_t> mtry;
  std::size_t min_leaf = 5;
  std::optional<std::size_t> max_depth;
  bool bootstrap = true;
  std::uint64_t seed = 0;
  /// Worker threads for per-tree fitting. Results do not depend on it.
  unsigned threads = 1;
};

/// Binary CART regression tree stored as a flat node array; node 0 is the root.
struct RegressionTree {
  struct Node {
    std::int32_t feature = -1;  // -1 marks a leaf
    double threshold = 0.0;     // x[feature] <= threshold goes left
    std::uint32_t left = 0;
    std::uint32_t right = 0;
    double value = 0.0;         // leaf prediction
  };
  std::vector<Node> nodes;

  double predict(std::span<const double> x) const noexcept;
  std::size_t leaf_count() const noexcept;
  std::size_t depth() const noexcept;
};

enum class ModelKind { zero, ols, wls, tree, forest };

const char* to_string(ModelKind kind) noexcept;

/// A fitted mu(x). Immutable after fitting; predict is pure and safe to call
/// concurrently.
class FittedModel {
public:
  struct Linear {
    bool intercept = true;
    Eigen::VectorXd coefficients;  // intercept first when present
  };
  struct Forest {
    std::vector<RegressionTree> trees;
  };

  ModelKind kind() const noexcept { return kind_; }
  std::size_t dim() const noexcept { return p_; }
  const std::vector<std::size_t>& training_units() const noexcept { return training_units_; }

  /// Throws DimensionError unless x.size() == dim().
  double predict(std::span<const double> x) const;

  const Linear* linear() const noexcept { return std::get_if<Linear>(&params_); }
  const RegressionTree* tree() const noexcept { return std::get_if<RegressionTree>(&params_); }
  const Forest* forest() const noexcept { return std::get_if<Forest>(&params_); }

  /// Inspection dump (structure and coefficients); not an interchange format.
  void write_json(std::ostream& out) const;

private:
  friend FittedModel fit_zero(std::size_t);
  friend FittedModel fit_wls(const TrainingSet&, std::span<const double>, bool);
  friend FittedModel fit_ols(const TrainingSet&, bool);
  friend FittedModel fit_tree(const TrainingSet&, const TreeParams&);
  friend FittedModel fit_forest(const TrainingSet&, const ForestParams&);

  ModelKind kind_ = ModelKind::zero;
  std::size_t p_ = 0;
  std::variant<std::monostate, Linear, RegressionTree, Forest> params_;
  std::vector<std::size_t> training_units_;
};

FittedModel fit_zero(std::size_t p);
/// Throws SingularFitError on a (near-)rank-deficient design.
FittedModel fit_ols(const TrainingSet& train, bool intercept = true);
/// Minimizes sum w_i (y_i - x_i' b)^2. Throws DomainError on non-positive
/// weights and SingularFitError on a singular weighted normal matrix.
FittedModel fit_wls(const TrainingSet& train, std::span<const double> weights, bool intercept = true);
FittedModel fit_tree(const TrainingSet& train, const TreeParams& params);
FittedModel fit_forest(const TrainingSet& train, const ForestParams& params);

inline double predict(const FittedModel& model, std::span<const double> x) { return model.predict(x); }

/// Predictions for every listed population unit, in the same order.
std::vector<double> predict_units(const FittedModel& model, const Population& pop, std::span<const std::size_t> units);

/// mu(x_i) for all units of the population (frame order).
std::vector<double> predict_population(const FittedModel& model, const Population& pop);

}  // namespace madi
