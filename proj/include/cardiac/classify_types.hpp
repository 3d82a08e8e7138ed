#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cardiac/core_model.hpp"

namespace cardiac {

inline constexpr int kEnsembleMembers = 50;
inline constexpr int kHiddenLayers = 4;
inline constexpr int kHiddenUnits = 32;
inline constexpr double kLeakySlope = 0.01;
inline constexpr double kBatchNormEps = 1e-5;
inline constexpr double kBatchNormMomentum = 0.1;
inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEps = 1e-8;

/// Training hyper-parameters. Defaults are the full training protocol;
/// `max_epochs`, `n_trees` and `threads` may be lowered for quick runs.
struct TrainConfig {
  int max_epochs = 400;
  int patience = 40;
  double learning_rate = 5e-4;
  double lr_decay = 0.97;
  int batches_per_epoch = 50;
  int batch_size = 20;
  double member_fraction = 0.75;
  double feature_fraction = 2.0 / 3.0;
  double noise_sigma = 0.1;
  int n_trees = 1000;
  /// Weight of the MLP score in the final recombination; forest gets 1 - w.
  double mlp_weight = 0.5;
  std::uint64_t seed = 1234;
  /// 0 = hardware concurrency. Results do not depend on this value.
  int threads = 0;

  void validate() const;
  std::size_t feature_subset_size(std::size_t n_features) const;
};

/// Labeled feature rows. Training canonicalizes row order by patient id, so
/// models do not depend on the order rows were supplied in.
struct Dataset {
  std::vector<std::string> ids;
  std::vector<std::vector<double>> features;
  std::vector<Diagnosis> labels;

  std::size_t size() const { return ids.size(); }
  std::size_t width() const { return features.empty() ? 0 : features.front().size(); }
  void validate() const;
  Dataset subset(std::span<const std::size_t> rows) const;
  /// Rows sorted by patient id.
  Dataset canonical_order() const;
};

using ClassProbabilities = std::array<double, kNumClasses>;

/// Index of the largest entry; ties resolve to the lowest index.
int argmax(std::span<const double> values);

/// Runs `task(i)` for i in [0, n) on up to `threads` workers. Each task must
/// write only to its own output slot.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& task);

}  // namespace cardiac
