#pragma once

#include "pite/core.hpp"
#include "pite/dataset.hpp"
#include "pite/random.hpp"

#include <vector>

namespace pite {

/// How many features are drawn (without replacement) at each split.
enum class MtryRule {
  third,  // ceil(p / 3)
  all,    // p
  fixed,  // ForestParams::mtry, capped at p
};

struct ForestParams {
  int n_trees = 500;
  int max_depth = 10;
  int n_split_points = 10;
  int min_leaf_size = 5;
  MtryRule mtry_rule = MtryRule::third;
  int mtry = 0;
  bool bootstrap = true;

  /// Throws ConfigError on out-of-range values.
  void validate() const;
  int resolved_mtry(Index n_features) const;

  friend bool operator==(const ForestParams&, const ForestParams&) = default;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf mean response
  int depth = 0;
  int count = 0;  // training rows (with bootstrap multiplicity)

  bool is_leaf() const { return feature < 0; }
};

/// Flat binary regression tree; node 0 is the root. x[feature] <= threshold
/// routes left.
class RegressionTree {
 public:
  RegressionTree() = default;
  explicit RegressionTree(std::vector<TreeNode> nodes);

  template <typename Row>
  double predict(const Row& x) const {
    int k = 0;
    while (!nodes_[static_cast<std::size_t>(k)].is_leaf()) {
      const TreeNode& node = nodes_[static_cast<std::size_t>(k)];
      k = x(node.feature) <= node.threshold ? node.left : node.right;
    }
    return nodes_[static_cast<std::size_t>(k)].value;
  }

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  int depth() const;
  int leaf_count() const;

 private:
  std::vector<TreeNode> nodes_;
};

struct Forest {
  ForestParams params;
  Index n_features = 0;
  std::vector<RegressionTree> trees;
};

/// Grows `params.n_trees` trees on the rows of `arm`. Tree t draws only from
/// stream.substream(t), so the result is independent of `threads`.
Forest fit_forest(const Dataset& d, const ArmView& arm, const ForestParams& params,
                  const RandomStream& stream, unsigned threads = 1);

/// Unweighted mean of per-tree leaf values.
VectorXd predict_forest(const Forest& forest, const MatrixXd& covariates);
VectorXd predict_forest(const Forest& forest, const Dataset& d);

/// Grows one tree on the given rows (with multiplicity). Exposed for tests.
RegressionTree grow_tree(const MatrixXd& x, const VectorXd& y, std::vector<Index> rows,
                         const ForestParams& params, Engine& engine);

}  // namespace pite
