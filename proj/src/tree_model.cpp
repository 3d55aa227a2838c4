#include <algorithm>
#include <numeric>

#include "madi/summation.hpp"
#include "tree_builder.hpp"

namespace madi {

double RegressionTree::predict(std::span<const double> x) const noexcept {
  std::uint32_t at = 0;
  while (nodes[at].feature >= 0) {
    const Node& node = nodes[at];
    at = x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right;
  }
  return nodes[at].value;
}

std::size_t RegressionTree::leaf_count() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const Node& n) { return n.feature < 0; }));
}

std::size_t RegressionTree::depth() const noexcept {
  if (nodes.empty()) return 0;
  std::vector<std::size_t> level(nodes.size(), 0);
  std::size_t deepest = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    deepest = std::max(deepest, level[i]);
    if (nodes[i].feature >= 0) {
      level[nodes[i].left] = level[i] + 1;
      level[nodes[i].right] = level[i] + 1;
    }
  }
  return deepest;
}

namespace detail {
namespace {

struct Split {
  bool found = false;
  std::size_t feature = 0;
  double threshold = 0.0;
  double gain = 0.0;
};

struct Pending {
  std::uint32_t node;
  std::size_t begin;
  std::size_t end;
  std::size_t depth;
};

}  // namespace

RegressionTree grow_tree(const Eigen::MatrixXd& x, std::span<const double> y, std::vector<std::uint32_t> rows,
                         const TreeGrowth& growth, CounterRng& rng) {
  const std::size_t p = static_cast<std::size_t>(x.cols());
  const std::size_t mtry = std::clamp<std::size_t>(growth.mtry, 1, std::max<std::size_t>(p, 1));
  const std::size_t min_leaf = std::max<std::size_t>(growth.min_leaf, 1);

  RegressionTree tree;
  tree.nodes.emplace_back();
  std::vector<Pending> stack{{0, 0, rows.size(), 0}};
  std::vector<std::size_t> features(p);
  std::vector<std::pair<double, double>> buf;

  while (!stack.empty()) {
    const Pending job = stack.back();
    stack.pop_back();
    const std::size_t n = job.end - job.begin;

    CompensatedSum sum;
    double lo = y[rows[job.begin]];
    double hi = lo;
    for (std::size_t k = job.begin; k < job.end; ++k) {
      const double v = y[rows[k]];
      sum += v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    const double mean = sum.value() / static_cast<double>(n);
    tree.nodes[job.node].value = lo == hi ? lo : std::clamp(mean, lo, hi);

    const bool depth_capped = growth.max_depth && job.depth >= *growth.max_depth;
    if (n < 2 * min_leaf || depth_capped || lo == hi || p == 0) continue;

    std::iota(features.begin(), features.end(), std::size_t{0});
    std::size_t tried = p;
    if (mtry < p) {
      for (std::size_t k = 0; k < mtry; ++k) {
        const std::size_t j = k + static_cast<std::size_t>(rng.below(p - k));
        std::swap(features[k], features[j]);
      }
      tried = mtry;
      std::sort(features.begin(), features.begin() + static_cast<std::ptrdiff_t>(tried));
    }

    // Gain of a split is the drop in SSE, which with y centred at the node
    // mean equals S_L^2 n / (n_L n_R) where S_L is the centred left sum.
    Split best;
    buf.resize(n);
    const double dn = static_cast<double>(n);
    for (std::size_t t = 0; t < tried; ++t) {
      const std::size_t f = features[t];
      for (std::size_t k = 0; k < n; ++k) {
        const std::uint32_t r = rows[job.begin + k];
        buf[k] = {x(r, static_cast<Eigen::Index>(f)), y[r] - mean};
      }
      std::sort(buf.begin(), buf.end());
      if (buf.front().first == buf.back().first) continue;
      double left_sum = 0.0;
      for (std::size_t k = 1; k < n; ++k) {
        left_sum += buf[k - 1].second;
        if (k < min_leaf) continue;
        if (n - k < min_leaf) break;
        if (!(buf[k - 1].first < buf[k].first)) continue;
        const double dk = static_cast<double>(k);
        const double gain = left_sum * left_sum * dn / (dk * (dn - dk));
        if (gain > best.gain) {
          const double a = buf[k - 1].first;
          const double b = buf[k].first;
          double mid = a + (b - a) / 2.0;
          if (!(mid < b)) mid = a;
          best = Split{true, f, mid, gain};
        }
      }
    }
    if (!best.found) continue;

    const auto first = rows.begin() + static_cast<std::ptrdiff_t>(job.begin);
    const auto last = rows.begin() + static_cast<std::ptrdiff_t>(job.end);
    const auto mid = std::stable_partition(first, last, [&](std::uint32_t r) {
      return x(r, static_cast<Eigen::Index>(best.feature)) <= best.threshold;
    });
    const std::size_t split_at = static_cast<std::size_t>(mid - rows.begin());

    const auto left = static_cast<std::uint32_t>(tree.nodes.size());
    tree.nodes.emplace_back();
    const auto right = static_cast<std::uint32_t>(tree.nodes.size());
    tree.nodes.emplace_back();
    RegressionTree::Node& node = tree.nodes[job.node];
    node.feature = static_cast<std::int32_t>(best.feature);
    node.threshold = best.threshold;
    node.left = left;
    node.right = right;
    // Right pushed first so the left subtree is expanded first.
    stack.push_back({right, split_at, job.end, job.depth + 1});
    stack.push_back({left, job.begin, split_at, job.depth + 1});
  }
  return tree;
}

}  // namespace detail
}  // namespace madi
