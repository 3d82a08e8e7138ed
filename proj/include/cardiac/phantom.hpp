#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cardiac/core_model.hpp"

namespace cardiac {

/// Class-dependent shape parameters, in this order.
enum class PhantomParameter : std::uint8_t {
  LvRadius = 0,   // LVC in-plane radius at ED, mm
  Wall = 1,       // LVM shell thickness, mm
  LvEf = 2,       // LVC ejection fraction
  RvExtent = 3,   // RVC radial extent outside the LVM at ED, mm
  RvEf = 4,       // RVC ejection fraction
  Thinning = 5,   // wall thinning in the infarct sector, mm
};
inline constexpr std::size_t kPhantomParameters = 6;

/// Gaussian draw per parameter.
struct ParameterDistribution {
  std::array<double, kPhantomParameters> mean{};
  std::array<double, kPhantomParameters> sigma{};
};

/// Baseline means and sigmas shifted per class by `separation` sigmas times
/// a fixed class offset pattern.
ParameterDistribution class_distribution(Diagnosis d, double separation);

/// Smallest, over all class pairs, of the largest per-parameter mean
/// difference in units of sigma.
double class_separation(double separation);

/// Concrete geometry of one patient.
///
/// The LVC is a half-ellipsoid with circular in-plane radius r(t) and long
/// semi-axis `lv_length`, base on a slice boundary and apex towards +z. The
/// LVM is the shell between the LVC and a half-ellipsoid grown by `wall`
/// (by `wall - thinning` inside the infarct sector around angle 0). The RVC
/// is a crescent around angle pi, `rv_angle_deg` wide, covering the first
/// `rv_height_fraction` of the long axis and extending radially beyond the
/// LVM outer surface.
struct PhantomGeometry {
  double lv_radius = 25.0;
  double lv_length = 70.0;
  double wall = 9.0;
  double lv_ef = 0.62;
  double rv_extent = 12.0;
  double rv_ef = 0.55;
  double thinning = 0.0;
  double rv_angle_deg = 120.0;
  double rv_height_fraction = 0.7;
  double infarct_angle_deg = 60.0;
  double height_cm = 172.0;
  double weight_kg = 75.0;

  void validate() const;
};

struct PhantomSpec {
  Dims dims{96, 96, 22};
  Spacing spacing{1.5, 1.5, 5.0};
  int frames = 20;
  /// Class mean offsets in units of the intra-class sigma.
  double separation = 3.0;
  std::uint64_t seed = 1234;

  void validate() const;
  /// 1 mm isotropic grid large enough for any default-class patient.
  static PhantomSpec fine();
};

/// Closed-form ground truth for one generated patient.
struct PhantomOracle {
  PhantomGeometry geometry;
  /// Per frame, ml.
  std::vector<double> lvc_ml;
  std::vector<double> lvm_ml;
  std::vector<double> rvc_ml;
  /// LVC radius per frame, mm.
  std::vector<double> lv_radius_mm;
  double wall_mm = 0.0;
  int base_slice = 0;
  int apical_slice = 0;
  std::size_t ed_index = 0;
  std::size_t es_index = 0;
};

struct PhantomCase {
  PatientRecord record;
  PhantomOracle oracle;
};

/// Draws geometry and body size for class `d` from `seed`.
PhantomGeometry draw_geometry(const PhantomSpec& spec, Diagnosis d, std::uint64_t seed);

/// Rasterizes a given geometry. Throws ValidationError when it does not fit
/// the grid.
PhantomCase render_phantom(const PhantomSpec& spec, const PhantomGeometry& geometry, const std::string& id,
                           std::optional<Diagnosis> diagnosis);

PhantomCase generate_patient(const PhantomSpec& spec, Diagnosis d, std::uint64_t seed,
                             const std::string& id = "phantom");

/// 5 * n_per_class patients, class = index mod 5, seed derived from
/// (spec.seed, index).
std::vector<PhantomCase> generate_cohort(const PhantomSpec& spec, int n_per_class, int threads = 1);

}  // namespace cardiac
