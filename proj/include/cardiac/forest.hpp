#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cardiac/classify_types.hpp"

namespace cardiac {

/// Leaf when `feature < 0`; samples with value <= threshold go left.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  /// Training-sample class counts reaching this node (kept for leaves).
  std::array<double, kNumClasses> counts{};

  bool is_leaf() const { return feature < 0; }
};

struct DecisionTree {
  std::vector<TreeNode> nodes;

  /// Majority class of the reached leaf (ties -> lowest class index).
  int predict(std::span<const double> features) const;
};

struct ForestModel {
  std::vector<DecisionTree> trees;

  /// Fraction of trees voting for each class.
  ClassProbabilities predict_proba(std::span<const double> features) const;
  void validate(std::size_t n_features) const;
};

/// 1 - sum p_k^2 over the normalized counts; 0 for an empty node.
double gini_impurity(std::span<const double> counts);

/// Bootstrap-bagged CART trees with floor(sqrt(F)) candidate features per
/// node, grown until pure or fewer than two samples.
ForestModel train_forest(const Dataset& data, const TrainConfig& config);

/// A single tree on the given sample multiset (indices may repeat).
DecisionTree grow_tree(const Dataset& data, std::span<const std::size_t> samples,
                       std::size_t candidate_features, std::uint64_t seed);

}  // namespace cardiac
