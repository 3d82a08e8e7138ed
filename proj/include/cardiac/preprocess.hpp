#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "cardiac/core_model.hpp"

namespace cardiac {

/// Target spacing per axis in mm; std::nullopt keeps the original spacing of
/// that axis (the 2D-network grid keeps the native slice distance).
struct ResampleSpec {
  std::array<std::optional<double>, 3> target;

  void validate() const;
  Spacing target_for(const Spacing& original) const;

  /// 1.25 x 1.25 x 10 mm, the 3D-network / feature-extraction grid.
  static ResampleSpec grid_3d() { return {{1.25, 1.25, 10.0}}; }
  /// 1.25 x 1.25 mm in-plane, original slice distance.
  static ResampleSpec grid_2d() { return {{1.25, 1.25, std::nullopt}}; }
};

/// max(1, round(n * original / target)) per axis.
Dims resampled_dims(const Dims& dims, const Spacing& original, const Spacing& target);

/// Nearest-neighbour resampling on the physical (voxel-centre) grid.
LabelVolume resample_labels(const LabelVolume& volume, const ResampleSpec& spec);

/// Per-class trilinear interpolation on the physical grid followed by
/// per-voxel renormalization.
ProbabilityVolume resample_probabilities(const ProbabilityVolume& volume, const ResampleSpec& spec);

/// Zero mean, unit variance. Volumes whose standard deviation is at most
/// 1e-8 map to all zeros.
ImageVolume normalize_intensity(const ImageVolume& image);

/// Augmentation parameters. All spatial transforms act in the x-y plane
/// only; every slice receives the same in-plane transform.
struct AugmentSpec {
  bool mirror_x = true;
  bool mirror_y = true;
  /// Rotation angle drawn uniformly from [-max, +max] degrees.
  double rotation_max_deg = 15.0;
  double gamma_min = 0.7;
  double gamma_max = 1.5;
  /// Control-point distance of the elastic grid, in voxels.
  double elastic_grid_spacing = 32.0;
  /// Standard deviation of control-point displacements, in voxels.
  double elastic_sigma = 4.0;
  /// Per-slice probability and offset standard deviation (voxels) of the
  /// motion augmentation.
  double motion_probability = 0.1;
  double motion_sigma = 20.0;

  void validate() const;
  /// Parameters under which augment() is the identity.
  static AugmentSpec neutral();
};

enum class InPlaneAxis { X, Y };

/// Flips every slice along one in-plane axis.
LabelVolume mirror(const LabelVolume& labels, InPlaneAxis axis);
ImageVolume mirror(const ImageVolume& image, InPlaneAxis axis);

/// Mirror (each enabled axis with probability 0.5) -> rotation -> elastic
/// deformation -> gamma. The composed in-plane mapping is sampled once: the
/// image bilinearly (edge clamped), labels by nearest neighbour (background
/// outside). Gamma touches the image only.
std::pair<ImageVolume, LabelVolume> augment(const ImageVolume& image, const LabelVolume& labels,
                                            const AugmentSpec& spec, std::uint64_t seed);

struct SliceOffset {
  bool perturbed = false;
  int dx = 0;
  int dy = 0;
};

/// Per-slice draws of the motion augmentation: with probability p a slice
/// gets an in-plane offset whose components are Normal(0, sigma) voxels,
/// rounded to integers.
std::vector<SliceOffset> motion_offsets(int n_slices, double p, double sigma, std::uint64_t seed);

/// Applies motion_offsets() as integer in-plane shifts. Vacated label voxels
/// become background; vacated image voxels take the nearest edge value.
LabelVolume motion_augment(const LabelVolume& labels, double p, double sigma, std::uint64_t seed);
ImageVolume motion_augment(const ImageVolume& image, double p, double sigma, std::uint64_t seed);

/// Voxel-wise mean of the class probabilities. Summation is done in sorted
/// order so the result does not depend on the order of `maps`.
ProbabilityVolume average_probabilities(const std::vector<ProbabilityVolume>& maps);

/// argmax of average_probabilities(); ties go to the lowest class code.
LabelVolume ensemble_probabilities(const std::vector<ProbabilityVolume>& maps);

/// argmax of a single map with the same tie rule.
LabelVolume argmax_labels(const ProbabilityVolume& map);

}  // namespace cardiac
