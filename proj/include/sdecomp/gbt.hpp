#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace sdecomp {

/// Boosting hyperparameters. Defaults: 300 trees, learning rate 0.05, depth 3,
/// min child hessian 10, L2 penalty 1, no row subsampling.
struct GbtParams {
  int n_trees = 300;
  double learning_rate = 0.05;
  int max_depth = 3;
  double min_child_weight = 10.0;
  double l2_lambda = 1.0;
  double subsample = 1.0;

  void validate() const;
  friend bool operator==(const GbtParams&, const GbtParams&) = default;
};

enum class GbtLoss { squared, logistic };

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;  // rows with x < threshold go left
  int left = -1;
  int right = -1;
  double leaf_value = 0.0;

  [[nodiscard]] bool is_leaf() const { return feature < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  template <typename Row>
  [[nodiscard]] double predict(const Row& x) const {
    int k = 0;
    while (!nodes[static_cast<std::size_t>(k)].is_leaf()) {
      const auto& nd = nodes[static_cast<std::size_t>(k)];
      k = x[nd.feature] < nd.threshold ? nd.left : nd.right;
    }
    return nodes[static_cast<std::size_t>(k)].leaf_value;
  }
};

struct GbtEnsemble {
  GbtLoss loss = GbtLoss::squared;
  double base_score = 0.0;  // margin scale
  double learning_rate = 0.05;
  Eigen::Index n_features = 0;
  std::vector<Tree> trees;
  /// Mean training loss before any tree (index 0) and after each round.
  std::vector<double> loss_trace;

  /// Additive score: base + learning_rate * sum of leaf values.
  [[nodiscard]] Eigen::VectorXd predict_margin(const Eigen::MatrixXd& X) const;
  /// Response scale; logistic predictions clipped to [1e-6, 1 - 1e-6].
  [[nodiscard]] Eigen::VectorXd predict(const Eigen::MatrixXd& X) const;
};

/// Second-order gradient boosting with exact greedy splits.
GbtEnsemble fit_gbt(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, GbtLoss loss, const GbtParams& params,
                    std::uint64_t seed);

struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

/// Best root split for given gradients/hessians, by the same search the fitter uses.
/// Ties resolve to the lowest feature index, then the lowest threshold.
SplitChoice best_root_split(const Eigen::MatrixXd& X, const Eigen::VectorXd& grad, const Eigen::VectorXd& hess,
                            const GbtParams& params);

}  // namespace sdecomp
