#include "cardiac/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>

#include "cardiac/rng.hpp"

namespace cardiac {

namespace {

// Seed-space offset that keeps the forest stream apart from the MLP members.
constexpr std::uint64_t kForestStream = 0x666f72657374ULL;

using Counts = std::array<double, kNumClasses>;

Counts count_classes(const Dataset& data, std::span<const std::size_t> samples) {
  Counts c{};
  for (std::size_t i : samples) c[static_cast<std::size_t>(diagnosis_index(data.labels[i]))] += 1.0;
  return c;
}

bool is_pure(const Counts& c) {
  return std::count_if(c.begin(), c.end(), [](double v) { return v > 0.0; }) <= 1;
}

struct Split {
  std::size_t feature = 0;
  double threshold = 0.0;
  double impurity = 0.0;
};

// Best threshold on one feature; nullopt when the feature is constant.
std::optional<Split> best_threshold(const Dataset& data, std::vector<std::size_t>& samples,
                                    std::size_t feature, const Counts& total) {
  std::sort(samples.begin(), samples.end(), [&](std::size_t a, std::size_t b) {
    return data.features[a][feature] < data.features[b][feature];
  });
  const double n = static_cast<double>(samples.size());
  Counts left{};
  Counts right = total;
  std::optional<Split> best;
  for (std::size_t i = 0; i + 1 < samples.size(); ++i) {
    const auto k = static_cast<std::size_t>(diagnosis_index(data.labels[samples[i]]));
    left[k] += 1.0;
    right[k] -= 1.0;
    const double a = data.features[samples[i]][feature];
    const double b = data.features[samples[i + 1]][feature];
    if (!(a < b)) continue;
    const double n_left = static_cast<double>(i + 1);
    const double impurity =
        (n_left * gini_impurity(left) + (n - n_left) * gini_impurity(right)) / n;
    if (!best || impurity < best->impurity) {
      double threshold = a + (b - a) / 2.0;
      if (!(threshold < b)) threshold = a;
      best = Split{feature, threshold, impurity};
    }
  }
  return best;
}

}  // namespace

double gini_impurity(std::span<const double> counts) {
  double total = 0.0;
  for (double c : counts) total += c;
  if (total <= 0.0) return 0.0;
  double sum_sq = 0.0;
  for (double c : counts) sum_sq += (c / total) * (c / total);
  return 1.0 - sum_sq;
}

int DecisionTree::predict(std::span<const double> features) const {
  if (nodes.empty()) throw ValidationError("empty decision tree");
  std::size_t at = 0;
  while (!nodes[at].is_leaf()) {
    const TreeNode& n = nodes[at];
    at = static_cast<std::size_t>(features[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left
                                                                                                : n.right);
  }
  return argmax(nodes[at].counts);
}

ClassProbabilities ForestModel::predict_proba(std::span<const double> features) const {
  if (trees.empty()) throw ValidationError("forest has no trees");
  ClassProbabilities votes{};
  for (const auto& tree : trees) votes[static_cast<std::size_t>(tree.predict(features))] += 1.0;
  for (double& v : votes) v /= static_cast<double>(trees.size());
  return votes;
}

void ForestModel::validate(std::size_t n_features) const {
  if (trees.empty()) throw ValidationError("forest has no trees");
  for (std::size_t t = 0; t < trees.size(); ++t) {
    const auto& nodes = trees[t].nodes;
    if (nodes.empty()) throw ValidationError("tree " + std::to_string(t) + " has no nodes");
    const auto n = static_cast<int>(nodes.size());
    for (const TreeNode& node : nodes) {
      for (double c : node.counts) {
        if (!(c >= 0.0)) throw ValidationError("tree " + std::to_string(t) + " has negative leaf counts");
      }
      if (node.is_leaf()) continue;
      if (static_cast<std::size_t>(node.feature) >= n_features) {
        throw ValidationError("tree " + std::to_string(t) + " splits on feature outside the schema");
      }
      if (node.left <= 0 || node.right <= 0 || node.left >= n || node.right >= n) {
        throw ValidationError("tree " + std::to_string(t) + " has an internal node without two children");
      }
    }
  }
}

DecisionTree grow_tree(const Dataset& data, std::span<const std::size_t> samples,
                       std::size_t candidate_features, std::uint64_t seed) {
  if (samples.empty()) throw ValidationError("cannot grow a tree on zero samples");
  const std::size_t width = data.width();
  candidate_features = std::clamp<std::size_t>(candidate_features, 1, width);
  Rng rng(seed);
  DecisionTree tree;
  struct Pending {
    int node;
    std::vector<std::size_t> samples;
  };
  std::vector<Pending> stack;
  tree.nodes.push_back(TreeNode{});
  stack.push_back({0, std::vector<std::size_t>(samples.begin(), samples.end())});
  std::vector<std::size_t> order(width);
  while (!stack.empty()) {
    Pending p = std::move(stack.back());
    stack.pop_back();
    const Counts counts = count_classes(data, p.samples);
    tree.nodes[static_cast<std::size_t>(p.node)].counts = counts;
    if (p.samples.size() < 2 || is_pure(counts)) continue;

    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    std::optional<Split> best;
    // Candidates first; the remaining features only if no candidate splits.
    for (std::size_t j = 0; j < width; ++j) {
      if (j == candidate_features && best) break;
      const auto s = best_threshold(data, p.samples, order[j], counts);
      if (s && (!best || s->impurity < best->impurity)) best = s;
    }
    if (!best) continue;

    std::vector<std::size_t> left, right;
    for (std::size_t i : p.samples) {
      (data.features[i][best->feature] <= best->threshold ? left : right).push_back(i);
    }
    const int l = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back(TreeNode{});
    tree.nodes.push_back(TreeNode{});
    TreeNode& node = tree.nodes[static_cast<std::size_t>(p.node)];
    node.feature = static_cast<int>(best->feature);
    node.threshold = best->threshold;
    node.left = l;
    node.right = l + 1;
    stack.push_back({l + 1, std::move(right)});
    stack.push_back({l, std::move(left)});
  }
  return tree;
}

ForestModel train_forest(const Dataset& data, const TrainConfig& config) {
  data.validate();
  config.validate();
  if (data.size() == 0) throw ValidationError("random forest needs labeled data");
  const Dataset rows = data.canonical_order();
  const std::size_t n = rows.size();
  const auto candidates =
      static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(rows.width()))));
  const std::uint64_t forest_seed = derive_seed(config.seed, kForestStream);

  ForestModel forest;
  forest.trees.resize(static_cast<std::size_t>(config.n_trees));
  parallel_for(forest.trees.size(), config.threads, [&](std::size_t t) {
    const std::uint64_t tree_seed = derive_seed(forest_seed, t);
    Rng rng(tree_seed);
    std::vector<std::size_t> bootstrap(n);
    for (auto& i : bootstrap) i = rng.index(n);
    forest.trees[t] = grow_tree(rows, bootstrap, candidates, derive_seed(tree_seed, 1));
  });
  return forest;
}

}  // namespace cardiac
