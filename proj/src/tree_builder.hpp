#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "madi/models.hpp"
#include "madi/random.hpp"

namespace madi::detail {

struct TreeGrowth {
  std::size_t min_leaf = 5;
  std::optional<std::size_t> max_depth;
  std::size_t mtry = 1;
};

/// Grows a CART regression tree on the given training rows (duplicates allowed,
/// as produced by bootstrap resampling). `rng` is consumed only when
/// mtry < number of features.
RegressionTree grow_tree(const Eigen::MatrixXd& x, std::span<const double> y, std::vector<std::uint32_t> rows,
                         const TreeGrowth& growth, CounterRng& rng);

}  // namespace madi::detail
