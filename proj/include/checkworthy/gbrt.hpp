#pragma once

// Least-squares gradient boosting over regression trees (MART).
//
// Each stage fits a tree of at most `n_leaves` leaves to the residuals
// y - F(x), growing best-first: the leaf whose best split removes the most
// squared error is split next. Split candidates are midpoints between
// consecutive distinct values of a feature among the leaf's rows; equal gains
// go to the lowest feature index, then the lowest threshold. Leaves output
// the mean residual and F <- F + learning_rate * tree.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "checkworthy/binary_io.hpp"
#include "checkworthy/error.hpp"

namespace checkworthy {

struct TreeNode {
  /// -1 marks a leaf.
  std::int32_t feature = -1;
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  double value = 0.0;

  bool is_leaf() const noexcept { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

/// Node 0 is the root. Inputs with x[feature] <= threshold go left.
struct RegressionTree {
  std::vector<TreeNode> nodes;

  bool operator==(const RegressionTree&) const = default;

  double evaluate(std::span<const double> x) const {
    std::size_t n = 0;
    while (!nodes[n].is_leaf()) {
      const auto& node = nodes[n];
      n = static_cast<std::size_t>(x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right);
    }
    return nodes[n].value;
  }

  std::size_t leaf_count() const {
    return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
  }
};

struct GbrtConfig {
  int n_trees = 50;
  int n_leaves = 2;
  double learning_rate = 0.1;
  int min_leaf = 1;
  /// Recorded in the model; the fit itself draws no random numbers.
  std::uint64_t seed = 0;

  bool operator==(const GbrtConfig&) const = default;

  void check() const {
    if (n_trees < 0) throw ConfigError("n_trees must be >= 0");
    if (n_leaves < 2) throw ConfigError("n_leaves must be >= 2");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate must be positive");
    if (min_leaf < 1) throw ConfigError("min_leaf must be >= 1");
  }
};

/// Row-major design matrix with one target per row.
class TrainingSet {
 public:
  explicit TrainingSet(std::size_t features) : features_(features) {}

  void add(std::span<const double> row, double target) {
    if (row.size() != features_) {
      throw ContractError("row has " + std::to_string(row.size()) + " features, expected " + std::to_string(features_));
    }
    for (double v : row) {
      if (!std::isfinite(v)) throw ContractError("non-finite feature value in training row");
    }
    if (!std::isfinite(target)) throw ContractError("non-finite training target");
    x_.insert(x_.end(), row.begin(), row.end());
    y_.push_back(target);
  }

  std::size_t rows() const noexcept { return y_.size(); }
  std::size_t features() const noexcept { return features_; }
  std::span<const double> row(std::size_t i) const { return {x_.data() + i * features_, features_}; }
  double value(std::size_t i, std::size_t f) const { return x_[i * features_ + f]; }
  double target(std::size_t i) const { return y_[i]; }
  const std::vector<double>& targets() const noexcept { return y_; }

 private:
  std::size_t features_;
  std::vector<double> x_;
  std::vector<double> y_;
};

struct BoostedTrees {
  std::vector<RegressionTree> trees;
  double learning_rate = 0.1;
  double base_score = 0.0;
  std::size_t feature_count = 0;
  /// Training MSE before any tree (index 0) and after each stage.
  std::vector<double> stage_mse;

  bool operator==(const BoostedTrees&) const = default;

  /// base_score + learning_rate * sum of tree outputs, accumulated stage by
  /// stage exactly as during fitting.
  double predict(std::span<const double> x) const {
    if (x.size() != feature_count) {
      throw ContractError("feature vector has " + std::to_string(x.size()) + " values, model expects " +
                          std::to_string(feature_count));
    }
    double f = base_score;
    for (const auto& t : trees) f += learning_rate * t.evaluate(x);
    return f;
  }

  double final_mse() const { return stage_mse.empty() ? 0.0 : stage_mse.back(); }
};

namespace detail {

struct SplitCandidate {
  double gain = 0.0;
  std::int32_t feature = -1;
  double threshold = 0.0;

  bool valid() const noexcept { return feature >= 0; }
};

class TreeGrower {
 public:
  TreeGrower(const TrainingSet& data, const std::vector<std::vector<std::uint32_t>>& sorted, int min_leaf)
      : data_(data), sorted_(sorted), min_leaf_(static_cast<std::size_t>(min_leaf)) {}

  RegressionTree grow(const std::vector<double>& residual, int max_leaves, std::vector<std::int32_t>& leaf_of) {
    const std::size_t n = data_.rows();
    leaf_of.assign(n, 0);
    RegressionTree tree;
    tree.nodes.push_back(leaf_node(residual, leaf_of, 0));
    std::vector<SplitCandidate> best{best_split(residual, leaf_of, 0)};

    int leaves = 1;
    while (leaves < max_leaves) {
      std::int32_t pick = -1;
      for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
        if (!tree.nodes[i].is_leaf() || !best[i].valid() || !(best[i].gain > 0.0)) continue;
        if (pick < 0 || best[i].gain > best[static_cast<std::size_t>(pick)].gain) pick = static_cast<std::int32_t>(i);
      }
      if (pick < 0) break;

      const auto split = best[static_cast<std::size_t>(pick)];
      const auto left = static_cast<std::int32_t>(tree.nodes.size());
      const auto right = left + 1;
      for (std::size_t i = 0; i < n; ++i) {
        if (leaf_of[i] != pick) continue;
        leaf_of[i] = data_.value(i, static_cast<std::size_t>(split.feature)) <= split.threshold ? left : right;
      }
      auto& node = tree.nodes[static_cast<std::size_t>(pick)];
      node.feature = split.feature;
      node.threshold = split.threshold;
      node.left = left;
      node.right = right;
      node.value = 0.0;
      tree.nodes.push_back(leaf_node(residual, leaf_of, left));
      tree.nodes.push_back(leaf_node(residual, leaf_of, right));
      best.push_back(best_split(residual, leaf_of, left));
      best.push_back(best_split(residual, leaf_of, right));
      ++leaves;
    }
    return tree;
  }

 private:
  TreeNode leaf_node(const std::vector<double>& residual, const std::vector<std::int32_t>& leaf_of, std::int32_t id) const {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < residual.size(); ++i) {
      if (leaf_of[i] == id) {
        sum += residual[i];
        ++count;
      }
    }
    TreeNode node;
    node.value = count ? sum / static_cast<double>(count) : 0.0;
    return node;
  }

  SplitCandidate best_split(const std::vector<double>& residual, const std::vector<std::int32_t>& leaf_of,
                            std::int32_t id) const {
    std::vector<std::uint32_t> rows;
    double total = 0.0;
    for (std::size_t i = 0; i < residual.size(); ++i) {
      if (leaf_of[i] == id) {
        rows.push_back(static_cast<std::uint32_t>(i));
        total += residual[i];
      }
    }
    SplitCandidate best;
    const std::size_t n = rows.size();
    if (n < 2 * min_leaf_) return best;
    const double parent = total * total / static_cast<double>(n);

    std::vector<std::uint32_t> order;
    order.reserve(n);
    for (std::size_t f = 0; f < data_.features(); ++f) {
      order.clear();
      for (auto i : sorted_[f]) {
        if (leaf_of[i] == id) order.push_back(i);
      }
      double left_sum = 0.0;
      for (std::size_t k = 0; k + 1 < n; ++k) {
        left_sum += residual[order[k]];
        const double a = data_.value(order[k], f);
        const double b = data_.value(order[k + 1], f);
        if (a == b) continue;
        const std::size_t nl = k + 1, nr = n - nl;
        if (nl < min_leaf_ || nr < min_leaf_) continue;
        const double right_sum = total - left_sum;
        const double gain = left_sum * left_sum / static_cast<double>(nl) +
                            right_sum * right_sum / static_cast<double>(nr) - parent;
        if (!best.valid() || gain > best.gain) {
          double thr = a + (b - a) / 2.0;
          if (!(thr < b)) thr = a;
          best = {gain, static_cast<std::int32_t>(f), thr};
        }
      }
    }
    return best;
  }

  const TrainingSet& data_;
  const std::vector<std::vector<std::uint32_t>>& sorted_;
  std::size_t min_leaf_;
};

inline double mean_squared_error(const std::vector<double>& y, const std::vector<double>& f) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double d = y[i] - f[i];
    s += d * d;
  }
  return s / static_cast<double>(y.size());
}

}  // namespace detail

/// Fits a boosted ensemble. Stops early when no stage can reduce the error.
inline BoostedTrees fit_gbrt(const TrainingSet& data, const GbrtConfig& cfg) {
  cfg.check();
  if (data.rows() < 2) throw ContractError("boosting needs at least 2 training rows");
  const std::size_t n = data.rows();

  BoostedTrees model;
  model.learning_rate = cfg.learning_rate;
  model.feature_count = data.features();
  model.base_score = std::accumulate(data.targets().begin(), data.targets().end(), 0.0) / static_cast<double>(n);

  std::vector<std::vector<std::uint32_t>> sorted(data.features(), std::vector<std::uint32_t>(n));
  for (std::size_t f = 0; f < data.features(); ++f) {
    auto& idx = sorted[f];
    std::iota(idx.begin(), idx.end(), 0u);
    std::stable_sort(idx.begin(), idx.end(), [&](std::uint32_t a, std::uint32_t b) { return data.value(a, f) < data.value(b, f); });
  }

  std::vector<double> score(n, model.base_score);
  std::vector<double> residual(n);
  std::vector<std::int32_t> leaf_of;
  model.stage_mse.push_back(detail::mean_squared_error(data.targets(), score));

  detail::TreeGrower grower(data, sorted, cfg.min_leaf);
  for (int t = 0; t < cfg.n_trees; ++t) {
    for (std::size_t i = 0; i < n; ++i) residual[i] = data.target(i) - score[i];
    auto tree = grower.grow(residual, cfg.n_leaves, leaf_of);
    if (tree.nodes.size() == 1) break;
    for (std::size_t i = 0; i < n; ++i) {
      score[i] += cfg.learning_rate * tree.nodes[static_cast<std::size_t>(leaf_of[i])].value;
    }
    model.trees.push_back(std::move(tree));
    model.stage_mse.push_back(detail::mean_squared_error(data.targets(), score));
  }
  return model;
}

inline void encode_trees(io::ByteWriter& w, const BoostedTrees& m) {
  w.f64(m.learning_rate);
  w.f64(m.base_score);
  w.u64(m.feature_count);
  w.u32(static_cast<std::uint32_t>(m.stage_mse.size()));
  for (double v : m.stage_mse) w.f64(v);
  w.u32(static_cast<std::uint32_t>(m.trees.size()));
  for (const auto& t : m.trees) {
    w.u32(static_cast<std::uint32_t>(t.nodes.size()));
    for (const auto& n : t.nodes) {
      w.i32(n.feature);
      w.f64(n.threshold);
      w.i32(n.left);
      w.i32(n.right);
      w.f64(n.value);
    }
  }
}

inline BoostedTrees decode_trees(io::ByteReader& r) {
  BoostedTrees m;
  m.learning_rate = r.f64();
  m.base_score = r.f64();
  m.feature_count = r.u64();
  m.stage_mse.resize(r.u32());
  for (auto& v : m.stage_mse) v = r.f64();
  const auto ntrees = r.u32();
  for (std::uint32_t t = 0; t < ntrees; ++t) {
    RegressionTree tree;
    const auto nnodes = r.u32();
    if (nnodes == 0) throw FormatError("empty regression tree");
    for (std::uint32_t i = 0; i < nnodes; ++i) {
      TreeNode n;
      n.feature = r.i32();
      n.threshold = r.f64();
      n.left = r.i32();
      n.right = r.i32();
      n.value = r.f64();
      if (!n.is_leaf()) {
        if (static_cast<std::uint64_t>(n.feature) >= m.feature_count) throw FormatError("tree split on unknown feature");
        // children always follow their parent, which also rules out cycles
        auto in_range = [&](std::int32_t c) { return c > static_cast<std::int32_t>(i) && static_cast<std::uint32_t>(c) < nnodes; };
        if (!in_range(n.left) || !in_range(n.right)) throw FormatError("tree child index out of range");
      }
      tree.nodes.push_back(n);
    }
    m.trees.push_back(std::move(tree));
  }
  return m;
}

}  // namespace checkworthy
