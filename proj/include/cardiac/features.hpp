#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "cardiac/contour.hpp"
#include "cardiac/core_model.hpp"

namespace cardiac {

/// Grams per ml of myocardium.
inline constexpr double kMyocardialDensity = 1.05;
inline constexpr int kThicknessRays = 360;
/// Look-ahead after the myocardial run, in in-plane voxels, within which an
/// RVC hit marks a septal ray.
inline constexpr double kSeptalLookahead = 2.0;
inline constexpr double kCircularityLimit = 1.05;

/// Mosteller body surface area in m^2.
double body_surface_area(double height_cm, double weight_kg);
/// kg / m^2.
double body_mass_index(double height_cm, double weight_kg);

/// Voxel count of `s` times the voxel volume, in ml.
double structure_volume(const LabelVolume& volume, Structure s);

/// In-plane mask of one structure on slice z.
SliceMask slice_mask(const LabelVolume& volume, Structure s, int z);

struct SliceMeasure {
  int z = 0;
  /// Pixel count x sx x sy, all components.
  double area_mm2 = 0.0;
  /// Outer contour length of the largest 8-connected component.
  double perimeter_mm = 0.0;
  /// 4 pi A / P^2 with A the area enclosed by that contour.
  double circularity = 0.0;
};

/// One entry per slice that contains the structure.
struct SliceMeasures {
  Structure structure = Structure::BG;
  std::vector<SliceMeasure> slices;
};

SliceMeasures slice_measures(const LabelVolume& volume, Structure s);

struct ThicknessSlice {
  int z = 0;
  std::vector<double> samples;
  std::vector<double> sample_angles_deg;
  std::vector<double> septal;
  std::vector<double> septal_angles_deg;
};

/// Myocardial thickness from 360 rays cast from the LVC centroid of each
/// slice. A sample is the length of the first contiguous LVM run along the
/// ray; it is septal when RVC follows within two voxels.
struct ThicknessProfile {
  std::vector<ThicknessSlice> slices;

  std::vector<double> all_samples() const;
  std::vector<double> septal_samples() const;
};

ThicknessProfile lvm_thickness(const LabelVolume& volume);

struct ApicalRvc {
  int slice = 0;
  double rvc_area_mm2 = 0.0;
  /// RVC area / LVC area on that slice; 0 when LVC is absent there.
  double rvc_lvc_ratio = 0.0;
};

/// Evaluated on the most apical LVM slice. The apical end of the LVM extent
/// is the one whose three end slices have the smaller mean LVC area (ties ->
/// higher z). Throws ValidationError("structure absent") without LVM.
ApicalRvc apical_rvc_features(const LabelVolume& volume);

/// LVM volume x 1.05 g/ml.
double lvm_mass(const LabelVolume& volume);

using InstantFeatures = std::array<double, FeatureSchema::kInstantPerPhase>;
using DynamicFeatures = std::array<double, FeatureSchema::kDynamic>;

/// The 18 per-phase features in schema order.
InstantFeatures extract_instant_features(const PatientRecord& record, Phase phase);
/// weight, height, BMI.
std::array<double, FeatureSchema::kPatientLevel> patient_features(const PatientRecord& record);

/// RVC, LVM, LVC curves in that order.
std::array<VolumeCurve, 3> volume_curves(const CineLabelSeries& series);

/// Population moments of a curve; extrema ties resolve to the earliest index.
struct CurveStatistics {
  double vmax = 0.0;
  double vmin = 0.0;
  std::size_t t_max = 0;
  std::size_t t_min = 0;
  double median = 0.0;
  double stddev = 0.0;
  /// m3 / m2^1.5, 0 for a constant curve.
  double skewness = 0.0;
  /// m4 / m2^2 - 3, 0 for a constant curve.
  double excess_kurtosis = 0.0;
};

CurveStatistics curve_statistics(std::span<const double> values);

/// (vmax - vmin) / vmax, 0 when vmax is 0.
double ejection_fraction(double vmax, double vmin);

DynamicFeatures extract_dynamic_features(const CineLabelSeries& series);

/// 18 ED + 18 ES + weight, height, BMI + 25 dynamic values.
FeatureVector extract_features(const PatientRecord& record);

}  // namespace cardiac
