#include "pite/forest.hpp"

#include "pite/errors.hpp"
#include "pite/parallel.hpp"

#include <algorithm>
#include <numeric>

namespace pite {

void ForestParams::validate() const {
  if (n_trees < 1) throw ConfigError("n_trees must be >= 1");
  if (max_depth < 1) throw ConfigError("max_depth must be >= 1");
  if (n_split_points < 1) throw ConfigError("n_split_points must be >= 1");
  if (min_leaf_size < 1) throw ConfigError("min_leaf_size must be >= 1");
  if (mtry_rule == MtryRule::fixed && mtry < 1) throw ConfigError("mtry must be >= 1");
}

int ForestParams::resolved_mtry(Index n_features) const {
  const int p = static_cast<int>(n_features);
  switch (mtry_rule) {
    case MtryRule::all:
      return p;
    case MtryRule::fixed:
      return std::min(mtry, p);
    case MtryRule::third:
      break;
  }
  return std::max(1, (p + 2) / 3);
}

RegressionTree::RegressionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

int RegressionTree::depth() const {
  int d = 0;
  for (const auto& node : nodes_) d = std::max(d, node.depth);
  return d;
}

int RegressionTree::leaf_count() const {
  return static_cast<int>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

namespace {

struct Split {
  int feature = -1;
  double threshold = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const MatrixXd& x, const VectorXd& y, const ForestParams& params, Engine& engine)
      : x_(x),
        y_(y),
        params_(params),
        engine_(engine),
        mtry_(params.resolved_mtry(x.cols())),
        features_(static_cast<std::size_t>(x.cols())),
        thresholds_(static_cast<std::size_t>(params.n_split_points)),
        sorted_(thresholds_.size()),
        ordered_(thresholds_.size()),
        position_(thresholds_.size()),
        bins_(thresholds_.size() + 1) {
    std::iota(features_.begin(), features_.end(), 0);
  }

  RegressionTree build(std::vector<Index> rows) {
    rows_ = std::move(rows);
    nodes_.clear();
    grow(0, rows_.size(), 0);
    return RegressionTree(std::move(nodes_));
  }

 private:
  struct Moments {
    double count = 0.0;
    double sum = 0.0;
    double sumsq = 0.0;
  };

  int grow(std::size_t begin, std::size_t end, int depth) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();

    const std::size_t count = end - begin;
    double mean = 0.0;
    for (std::size_t k = begin; k < end; ++k) mean += y_(rows_[k]);
    mean /= static_cast<double>(count);
    double sse = 0.0;
    for (std::size_t k = begin; k < end; ++k) {
      const double z = y_(rows_[k]) - mean;
      sse += z * z;
    }

    TreeNode node;
    node.value = mean;
    node.depth = depth;
    node.count = static_cast<int>(count);

    const bool can_split = depth < params_.max_depth &&
                           count >= 2 * static_cast<std::size_t>(params_.min_leaf_size) &&
                           sse > 0.0;
    if (can_split) {
      if (const Split split = best_split(begin, end, mean, sse); split.feature >= 0) {
        const auto middle = std::partition(
            rows_.begin() + static_cast<std::ptrdiff_t>(begin),
            rows_.begin() + static_cast<std::ptrdiff_t>(end),
            [&](Index r) { return x_(r, split.feature) <= split.threshold; });
        const auto mid = static_cast<std::size_t>(middle - rows_.begin());
        node.feature = split.feature;
        node.threshold = split.threshold;
        node.left = grow(begin, mid, depth + 1);
        node.right = grow(mid, end, depth + 1);
      }
    }
    nodes_[static_cast<std::size_t>(id)] = node;
    return id;
  }

  // Candidates are visited in (sampled feature order, threshold draw order)
  // and a candidate replaces the incumbent only on strict improvement.
  Split best_split(std::size_t begin, std::size_t end, double mean, double parent_sse) {
    const int p = static_cast<int>(features_.size());
    const double min_leaf = static_cast<double>(params_.min_leaf_size);
    Split best;
    double best_sse = parent_sse * (1.0 - 1e-12);

    for (int k = 0; k < mtry_; ++k) {
      std::uniform_int_distribution<int> pick(k, p - 1);
      std::swap(features_[static_cast<std::size_t>(k)],
                features_[static_cast<std::size_t>(pick(engine_))]);
      const int f = features_[static_cast<std::size_t>(k)];

      double lo = x_(rows_[begin], f);
      double hi = lo;
      for (std::size_t r = begin + 1; r < end; ++r) {
        const double v = x_(rows_[r], f);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      if (!(hi > lo)) continue;

      std::uniform_real_distribution<double> draw(lo, hi);
      for (auto& t : thresholds_) t = draw(engine_);

      // Sort draw positions by threshold; position_[q] is draw q's rank.
      std::iota(sorted_.begin(), sorted_.end(), 0);
      std::stable_sort(sorted_.begin(), sorted_.end(),
                       [&](int a, int b) { return thresholds_[a] < thresholds_[b]; });
      for (std::size_t s = 0; s < sorted_.size(); ++s) {
        position_[static_cast<std::size_t>(sorted_[s])] = static_cast<int>(s);
        ordered_[s] = thresholds_[static_cast<std::size_t>(sorted_[s])];
      }

      // Bin b holds rows with exactly b thresholds strictly below x; such a
      // row goes left for sorted thresholds s >= b.
      std::fill(bins_.begin(), bins_.end(), Moments{});
      Moments total;
      for (std::size_t r = begin; r < end; ++r) {
        const double v = x_(rows_[r], f);
        const double z = y_(rows_[r]) - mean;
        const auto b = static_cast<std::size_t>(
            std::lower_bound(ordered_.begin(), ordered_.end(), v) - ordered_.begin());
        bins_[b].count += 1.0;
        bins_[b].sum += z;
        bins_[b].sumsq += z * z;
        total.count += 1.0;
        total.sum += z;
        total.sumsq += z * z;
      }
      for (std::size_t b = 1; b < bins_.size(); ++b) {
        bins_[b].count += bins_[b - 1].count;
        bins_[b].sum += bins_[b - 1].sum;
        bins_[b].sumsq += bins_[b - 1].sumsq;
      }

      for (std::size_t q = 0; q < thresholds_.size(); ++q) {
        const Moments& left = bins_[static_cast<std::size_t>(position_[q])];
        const double n_right = total.count - left.count;
        if (left.count < min_leaf || n_right < min_leaf) continue;
        const double s_right = total.sum - left.sum;
        const double q_right = total.sumsq - left.sumsq;
        const double sse = (left.sumsq - left.sum * left.sum / left.count) +
                           (q_right - s_right * s_right / n_right);
        if (sse < best_sse) {
          best_sse = sse;
          best.feature = f;
          best.threshold = thresholds_[q];
        }
      }
    }
    return best;
  }

  const MatrixXd& x_;
  const VectorXd& y_;
  const ForestParams& params_;
  Engine& engine_;
  int mtry_;
  std::vector<int> features_;
  std::vector<double> thresholds_;
  std::vector<int> sorted_;
  std::vector<double> ordered_;
  std::vector<int> position_;
  std::vector<Moments> bins_;
  std::vector<Index> rows_;
  std::vector<TreeNode> nodes_;
};

}  // namespace

RegressionTree grow_tree(const MatrixXd& x, const VectorXd& y, std::vector<Index> rows,
                         const ForestParams& params, Engine& engine) {
  params.validate();
  if (rows.empty()) throw DegenerateArm("cannot grow a tree on zero rows");
  TreeBuilder builder(x, y, params, engine);
  return builder.build(std::move(rows));
}

Forest fit_forest(const Dataset& d, const ArmView& arm, const ForestParams& params,
                  const RandomStream& stream, unsigned threads) {
  params.validate();
  if (arm.size() < 2 * static_cast<Index>(params.min_leaf_size)) {
    throw DegenerateArm("arm of size " + std::to_string(arm.size()) +
                        " is smaller than 2 * min_leaf_size");
  }
  const MatrixXd x = d.covariates()(arm.indices, Eigen::all);
  const VectorXd y = d.outcome()(arm.indices);
  const Index m = arm.size();

  Forest forest;
  forest.params = params;
  forest.n_features = d.p();
  forest.trees.resize(static_cast<std::size_t>(params.n_trees));

  parallel_for(forest.trees.size(), threads, [&](std::size_t t) {
    Engine engine = stream.substream(t).engine();
    std::vector<Index> rows(static_cast<std::size_t>(m));
    if (params.bootstrap) {
      std::uniform_int_distribution<Index> pick(0, m - 1);
      for (auto& r : rows) r = pick(engine);
    } else {
      std::iota(rows.begin(), rows.end(), Index{0});
    }
    TreeBuilder builder(x, y, params, engine);
    forest.trees[t] = builder.build(std::move(rows));
  });
  return forest;
}

VectorXd predict_forest(const Forest& forest, const MatrixXd& covariates) {
  if (covariates.cols() != forest.n_features) {
    throw DimensionMismatch("forest has " + std::to_string(forest.n_features) +
                            " features, data has " + std::to_string(covariates.cols()));
  }
  if (forest.trees.empty()) throw DimensionMismatch("forest has no trees");
  const Index n = covariates.rows();
  // Row-major copy keeps each individual's features contiguous while routing.
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows = covariates;
  VectorXd out = VectorXd::Zero(n);
  for (const auto& tree : forest.trees) {
    for (Index i = 0; i < n; ++i) out(i) += tree.predict(rows.row(i));
  }
  out /= static_cast<double>(forest.trees.size());
  return out;
}

VectorXd predict_forest(const Forest& forest, const Dataset& d) {
  return predict_forest(forest, d.covariates());
}

}  // namespace pite
