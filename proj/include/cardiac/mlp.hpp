#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cardiac/classify_types.hpp"
#include "cardiac/rng.hpp"

namespace cardiac {

/// Fully connected layer; `weights` is outputs x inputs, row-major.
struct DenseLayer {
  int inputs = 0;
  int outputs = 0;
  std::vector<double> weights;
  std::vector<double> bias;
};

struct BatchNormLayer {
  std::vector<double> gamma;
  std::vector<double> beta;
  std::vector<double> running_mean;
  std::vector<double> running_var;
};

/// One ensemble member: feature subset -> standardize -> 4 x [dense 32 ->
/// batch-norm -> leaky ReLU -> Gaussian noise (training only)] -> dense 5 ->
/// softmax.
struct MlpModel {
  /// Sorted indices into the feature schema.
  std::vector<std::size_t> feature_mask;
  /// Standardization statistics of the masked features, taken from the
  /// member's own training split.
  std::vector<double> feature_means;
  std::vector<double> feature_stds;
  std::vector<DenseLayer> hidden;
  std::vector<BatchNormLayer> norms;
  DenseLayer output;
  double noise_sigma = 0.1;

  /// Checks architecture (4 x 32 hidden, 5 outputs) and array shapes against
  /// the width of the full feature vector.
  void validate(std::size_t n_features) const;
};

enum class MlpMode { Train, Infer };

/// Glorot-uniform weights, zero biases, identity batch-norm.
MlpModel init_mlp(std::vector<std::size_t> feature_mask, std::vector<double> feature_means,
                  std::vector<double> feature_stds, double noise_sigma, Rng& rng);

/// Single-sample forward pass. Infer mode uses running batch-norm
/// statistics and no noise. Train mode normalizes with the statistics of the
/// one-sample batch and adds noise drawn from `seed`.
ClassProbabilities mlp_forward(const MlpModel& model, std::span<const double> features,
                               MlpMode mode, std::uint64_t seed = 0);

/// Inference over many rows.
std::vector<ClassProbabilities> mlp_predict(const MlpModel& model,
                                            const std::vector<std::vector<double>>& rows);

/// Trainable arrays in fixed order: for each hidden layer W, b, gamma, beta;
/// then output W, b.
std::vector<std::span<double>> trainable_parameters(MlpModel& model);

/// Gradient arrays aligned with trainable_parameters().
using MlpGradients = std::vector<std::vector<double>>;

struct BatchStatistics {
  std::vector<std::vector<double>> means;  // per hidden layer
  std::vector<std::vector<double>> vars;   // biased batch variance
};

struct MlpBackwardResult {
  double loss = 0.0;
  MlpGradients gradients;
  BatchStatistics batch_stats;
};

/// Mean cross-entropy of a batch in train mode (batch statistics). Noise is
/// added only when `noise` is non-null.
double mlp_batch_loss(const MlpModel& model, const std::vector<std::vector<double>>& batch,
                      std::span<const Diagnosis> targets, Rng* noise = nullptr);

/// Exact gradients of mlp_batch_loss. The noise layer passes gradients
/// through unchanged.
MlpBackwardResult mlp_backward(const MlpModel& model,
                               const std::vector<std::vector<double>>& batch,
                               std::span<const Diagnosis> targets, Rng* noise = nullptr);

/// Exponential moving update of the running batch-norm statistics.
void update_running_stats(MlpModel& model, const BatchStatistics& stats, std::size_t batch_size);

class AdamOptimizer {
 public:
  explicit AdamOptimizer(MlpModel& model);
  void step(MlpModel& model, const MlpGradients& gradients, double learning_rate);

 private:
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  long step_ = 0;
};

/// Member-specific random draws: 75/25 train/validation split of the
/// (canonically ordered) rows and the 2/3 feature mask.
struct MemberSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> feature_mask;
};

MemberSplit member_split(std::size_t n_samples, std::size_t n_features,
                         const TrainConfig& config, int member_index);

struct MemberTrainingResult {
  MlpModel model;
  int best_epoch = 0;
  int epochs_run = 0;
  double best_validation_accuracy = 0.0;
};

/// Trains one member on `data` (rows are canonicalized by id first). Keeps
/// the weights of the epoch with the best validation accuracy (ties ->
/// earlier epoch); stops after `patience` epochs without improvement.
MemberTrainingResult train_mlp_member(const Dataset& data, const TrainConfig& config,
                                      int member_index);

}  // namespace cardiac
