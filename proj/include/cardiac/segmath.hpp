#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace cardiac {

/// Dense pixels x classes matrix, row-major. The loss functions accept it
/// without row constraints so that finite-difference probes can perturb
/// single entries.
struct ClassMatrix {
  std::size_t pixels = 0;
  std::size_t classes = 0;
  std::vector<double> values;

  ClassMatrix() = default;
  ClassMatrix(std::size_t n_pixels, std::size_t n_classes, double fill = 0.0)
      : pixels(n_pixels), classes(n_classes), values(n_pixels * n_classes, fill) {}

  double& operator()(std::size_t i, std::size_t k) { return values[i * classes + k]; }
  double operator()(std::size_t i, std::size_t k) const { return values[i * classes + k]; }
};

/// Softmax output: rows sum to 1 within 1e-6, entries in [0, 1].
class SoftPrediction {
 public:
  explicit SoftPrediction(ClassMatrix u);
  const ClassMatrix& matrix() const { return u_; }

 private:
  ClassMatrix u_;
};

/// One-hot ground truth: each row has exactly one 1.
class OneHotTarget {
 public:
  explicit OneHotTarget(ClassMatrix v);
  static OneHotTarget from_labels(std::span<const int> labels, std::size_t n_classes);
  const ClassMatrix& matrix() const { return v_; }

 private:
  ClassMatrix v_;
};

/// Row-wise softmax of raw scores.
ClassMatrix softmax(const ClassMatrix& logits);

/// Multiclass soft dice loss
///   L = -(2/|K|) sum_k  sum_i u_ik v_ik / (sum_i u_ik + sum_i v_ik).
/// A class whose denominator is zero contributes 0.
double dice_loss(const ClassMatrix& u, const ClassMatrix& v);
double dice_loss(const SoftPrediction& u, const OneHotTarget& v);

/// dL/du_jk = -(2/|K|) (v_jk D_k - N_k) / D_k^2 with N_k = sum_i u_ik v_ik,
/// D_k = sum_i u_ik + sum_i v_ik; zero for classes with D_k = 0.
ClassMatrix dice_loss_grad(const ClassMatrix& u, const ClassMatrix& v);

inline constexpr double kCrossEntropyClamp = 1e-12;

/// Mean over pixels of -sum_k v_ik log max(u_ik, 1e-12).
double cross_entropy(const ClassMatrix& u, const ClassMatrix& v);
/// -v_ik / (n_pixels * max(u_ik, 1e-12)).
ClassMatrix cross_entropy_grad(const ClassMatrix& u, const ClassMatrix& v);

/// Encoder/decoder of a U-shaped network with 2x pooling per stage.
struct UNetSpec {
  /// 2 entries (x, y) for a 2D network, 3 (x, y, z) for 3D.
  std::vector<int> input_dims;
  int initial_features = 26;
  int pooling_stages = 4;
  /// Pool and upscale only in x-y; z keeps its extent through the network.
  bool in_plane_only = true;
  int num_classes = 4;

  void validate() const;
};

struct StageShape {
  int level = 0;
  std::vector<int> spatial;
  int features = 0;

  bool operator==(const StageShape&) const = default;
};

struct UNetShapes {
  /// Levels 0 .. P-1 (before each pooling).
  std::vector<StageShape> encoder;
  /// Level P.
  StageShape bottleneck;
  /// Levels P-1 .. 0 (after each upscaling).
  std::vector<StageShape> decoder;
  /// Low-resolution segmentation outputs taken before each of the last two
  /// upscaling operations (num_classes channels each).
  std::vector<StageShape> deep_supervision;

  /// Feature counts from level 0 to the bottleneck.
  std::vector<int> feature_ladder() const;
};

UNetShapes unet_shapes(const UNetSpec& spec);

}  // namespace cardiac
