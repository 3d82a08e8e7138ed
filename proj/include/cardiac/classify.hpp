#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cardiac/classify_types.hpp"
#include "cardiac/forest.hpp"
#include "cardiac/mlp.hpp"

namespace cardiac {

/// 50 MLP members plus one random forest, bound to the feature schema the
/// model was trained on.
struct EnsembleModel {
  std::vector<MlpModel> mlps;
  ForestModel forest;
  std::string schema_fingerprint;
  std::vector<std::string> class_order;
  double mlp_weight = 0.5;

  void validate() const;
  std::size_t n_features() const;
};

struct Prediction {
  ClassProbabilities mlp{};
  ClassProbabilities forest{};
  ClassProbabilities probabilities{};
  Diagnosis diagnosis = Diagnosis::NOR;
};

/// Mean of member softmax outputs, recombined with the forest vote
/// fractions: p = w * p_mlp + (1 - w) * p_rf. Member order does not affect
/// the result.
Prediction predict(const EnsembleModel& model, std::span<const double> features);

/// Recombination step alone, exposed for the arithmetic checks.
Prediction combine_scores(std::span<const ClassProbabilities> member_outputs,
                          const ClassProbabilities& forest, double mlp_weight);

EnsembleModel train_ensemble(const Dataset& data, const TrainConfig& config);

/// Confusion counts, rows = predicted class, columns = target class.
struct ConfusionMatrix {
  std::array<std::array<int, kNumClasses>, kNumClasses> counts{};

  void add(Diagnosis predicted, Diagnosis target) {
    ++counts[diagnosis_index(predicted)][diagnosis_index(target)];
  }
  int total() const;
  int trace() const;
  double accuracy() const;
  std::string to_text() const;
};

/// Fold index per row. Rows of each class are shuffled with a seeded stream
/// and dealt round-robin; the deal position carries over between classes so
/// fold sizes differ by at most one. Classes with fewer than k members
/// produce a warning.
std::vector<int> stratified_folds(std::span<const Diagnosis> labels, int k, std::uint64_t seed,
                                  std::vector<std::string>* warnings = nullptr);

struct CrossValidationResult {
  /// Aligned with the canonically ordered dataset.
  std::vector<std::string> ids;
  std::vector<int> fold_of;
  std::vector<Prediction> predictions;
  std::vector<double> fold_accuracy;
  ConfusionMatrix confusion;
  std::vector<std::string> warnings;

  double accuracy() const { return confusion.accuracy(); }
};

/// Trains a full ensemble on k - 1 folds and evaluates the held-out fold,
/// for each fold in turn.
CrossValidationResult cross_validate(const Dataset& data, int k, const TrainConfig& config);

}  // namespace cardiac
