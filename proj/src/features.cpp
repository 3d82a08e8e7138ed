#include "cardiac/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <tuple>
#include <utility>

namespace cardiac {

namespace {

struct Aggregate {
  double max = 0.0;
  double min = 0.0;
  double mean = 0.0;
  double stddev = 0.0;
};

// Population statistics; all zeros for an empty sample.
Aggregate aggregate(std::span<const double> v) {
  Aggregate a;
  if (v.empty()) return a;
  a.max = *std::max_element(v.begin(), v.end());
  a.min = *std::min_element(v.begin(), v.end());
  double sum = 0.0;
  for (double x : v) sum += x;
  a.mean = sum / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - a.mean) * (x - a.mean);
  a.stddev = std::sqrt(ss / static_cast<double>(v.size()));
  return a;
}

double safe_ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

std::size_t slice_count(const LabelVolume& volume, Structure s, int z) {
  const Dims d = volume.dims();
  const auto data = volume.data();
  const std::size_t base = static_cast<std::size_t>(z) * d.slice_pixels();
  return static_cast<std::size_t>(
      std::count(data.begin() + static_cast<std::ptrdiff_t>(base),
                 data.begin() + static_cast<std::ptrdiff_t>(base + d.slice_pixels()), code(s)));
}

double slice_area(const LabelVolume& volume, Structure s, int z) {
  return static_cast<double>(slice_count(volume, s, z)) * volume.spacing().sx * volume.spacing().sy;
}

/// Samples one slice along rays in physical coordinates (pixel centre of
/// (x, y) sits at (x * sx, y * sy)).
class RaySampler {
 public:
  RaySampler(const LabelVolume& volume, int z) : volume_(volume), z_(z) {}

  bool inside(double px, double py) const {
    const Dims d = volume_.dims();
    return px >= -0.5 && py >= -0.5 && px < d.nx - 0.5 && py < d.ny - 0.5;
  }

  std::uint8_t nearest(double px, double py) const {
    const auto x = static_cast<int>(std::lround(px));
    const auto y = static_cast<int>(std::lround(py));
    return volume_.contains(x, y, z_) ? volume_.at(x, y, z_) : code(Structure::BG);
  }

  /// Bilinear interpolation of the LVM indicator.
  double myocardium(double px, double py) const {
    const int x0 = static_cast<int>(std::floor(px));
    const int y0 = static_cast<int>(std::floor(py));
    const double fx = px - x0;
    const double fy = py - y0;
    auto ind = [this](int x, int y) {
      return volume_.contains(x, y, z_) && volume_.at(x, y, z_) == code(Structure::LVM) ? 1.0 : 0.0;
    };
    return (ind(x0, y0) * (1 - fx) + ind(x0 + 1, y0) * fx) * (1 - fy) +
           (ind(x0, y0 + 1) * (1 - fx) + ind(x0 + 1, y0 + 1) * fx) * fy;
  }

 private:
  const LabelVolume& volume_;
  int z_;
};

struct RayHit {
  double thickness = 0.0;
  bool septal = false;
};

std::optional<RayHit> cast_ray(const RaySampler& sampler, double cx_mm, double cy_mm, double angle,
                               const Spacing& sp) {
  const double dx = std::cos(angle);
  const double dy = std::sin(angle);
  const double step = 0.5 * std::min(sp.sx, sp.sy);
  auto pixel = [&](double t) { return std::pair{(cx_mm + t * dx) / sp.sx, (cy_mm + t * dy) / sp.sy}; };

  auto [px, py] = pixel(0.0);
  double prev = sampler.myocardium(px, py);
  std::optional<double> entry;
  if (prev >= 0.5) entry = 0.0;
  for (double t = step;; t += step) {
    std::tie(px, py) = pixel(t);
    if (!sampler.inside(px, py)) return std::nullopt;
    const double v = sampler.myocardium(px, py);
    if (!entry) {
      if (v >= 0.5) {
        entry = t - step + step * (0.5 - prev) / (v - prev);
      } else {
        const std::uint8_t label = sampler.nearest(px, py);
        if (label == code(Structure::RVC) || label == code(Structure::BG)) return std::nullopt;
      }
    } else if (v < 0.5) {
      const double exit = t - step + step * (prev - 0.5) / (prev - v);
      RayHit hit{exit - *entry, false};
      const double reach = kSeptalLookahead * std::min(sp.sx, sp.sy);
      for (double s = exit; s <= exit + reach; s += 0.25 * step) {
        const auto [qx, qy] = pixel(s);
        const std::uint8_t label = sampler.nearest(qx, qy);
        if (label == code(Structure::RVC)) {
          hit.septal = true;
          break;
        }
        if (label == code(Structure::LVC)) break;
      }
      return hit;
    }
    prev = v;
  }
}

}  // namespace

double body_surface_area(double height_cm, double weight_kg) {
  if (!(height_cm > 0.0 && weight_kg > 0.0)) {
    throw ValidationError("body surface area needs positive height and weight");
  }
  return std::sqrt(height_cm * weight_kg / 3600.0);
}

double body_mass_index(double height_cm, double weight_kg) {
  if (!(height_cm > 0.0 && weight_kg > 0.0)) throw ValidationError("BMI needs positive height and weight");
  const double m = height_cm / 100.0;
  return weight_kg / (m * m);
}

double structure_volume(const LabelVolume& volume, Structure s) {
  return static_cast<double>(volume.count(s)) * voxel_volume_ml(volume.spacing());
}

SliceMask slice_mask(const LabelVolume& volume, Structure s, int z) {
  const Dims d = volume.dims();
  SliceMask m{d.nx, d.ny, std::vector<std::uint8_t>(d.slice_pixels())};
  const auto data = volume.data();
  const std::size_t base = static_cast<std::size_t>(z) * d.slice_pixels();
  for (std::size_t i = 0; i < d.slice_pixels(); ++i) m.on[i] = data[base + i] == code(s) ? 1 : 0;
  return m;
}

SliceMeasures slice_measures(const LabelVolume& volume, Structure s) {
  SliceMeasures out{s, {}};
  const Spacing sp = volume.spacing();
  for (int z = 0; z < volume.dims().nz; ++z) {
    if (slice_count(volume, s, z) == 0) continue;
    const SliceMask mask = slice_mask(volume, s, z);
    const auto contour = outer_contour(mask, sp.sx, sp.sy);
    SliceMeasure m;
    m.z = z;
    m.area_mm2 = static_cast<double>(mask.count()) * sp.sx * sp.sy;
    if (contour) {
      m.perimeter_mm = contour->length();
      m.circularity = m.perimeter_mm > 0.0
                          ? 4.0 * std::numbers::pi * contour->area() / (m.perimeter_mm * m.perimeter_mm)
                          : 0.0;
    }
    if (m.circularity > kCircularityLimit) {
      throw ValidationError("circularity " + std::to_string(m.circularity) + " exceeds " +
                            std::to_string(kCircularityLimit) + " on slice " + std::to_string(z));
    }
    out.slices.push_back(m);
  }
  return out;
}

std::vector<double> ThicknessProfile::all_samples() const {
  std::vector<double> v;
  for (const auto& s : slices) v.insert(v.end(), s.samples.begin(), s.samples.end());
  return v;
}

std::vector<double> ThicknessProfile::septal_samples() const {
  std::vector<double> v;
  for (const auto& s : slices) v.insert(v.end(), s.septal.begin(), s.septal.end());
  return v;
}

ThicknessProfile lvm_thickness(const LabelVolume& volume) {
  ThicknessProfile profile;
  const Dims d = volume.dims();
  const Spacing sp = volume.spacing();
  for (int z = 0; z < d.nz; ++z) {
    if (slice_count(volume, Structure::LVM, z) == 0) continue;
    double sx = 0.0, sy = 0.0;
    std::size_t n = 0;
    for (int y = 0; y < d.ny; ++y) {
      for (int x = 0; x < d.nx; ++x) {
        if (volume.at(x, y, z) != code(Structure::LVC)) continue;
        sx += x;
        sy += y;
        ++n;
      }
    }
    if (n == 0) continue;
    const double cx_mm = sx / static_cast<double>(n) * sp.sx;
    const double cy_mm = sy / static_cast<double>(n) * sp.sy;
    const RaySampler sampler(volume, z);
    ThicknessSlice slice;
    slice.z = z;
    for (int r = 0; r < kThicknessRays; ++r) {
      const double deg = 360.0 * r / kThicknessRays;
      const auto hit = cast_ray(sampler, cx_mm, cy_mm, deg * std::numbers::pi / 180.0, sp);
      if (!hit) continue;
      slice.samples.push_back(hit->thickness);
      slice.sample_angles_deg.push_back(deg);
      if (hit->septal) {
        slice.septal.push_back(hit->thickness);
        slice.septal_angles_deg.push_back(deg);
      }
    }
    if (!slice.samples.empty()) profile.slices.push_back(std::move(slice));
  }
  return profile;
}

ApicalRvc apical_rvc_features(const LabelVolume& volume) {
  int z0 = -1, z1 = -1;
  for (int z = 0; z < volume.dims().nz; ++z) {
    if (slice_count(volume, Structure::LVM, z) == 0) continue;
    if (z0 < 0) z0 = z;
    z1 = z;
  }
  if (z0 < 0) throw ValidationError("structure absent: no LVM in volume");
  auto mean_lvc_area = [&volume](int from, int to) {
    double sum = 0.0;
    for (int z = from; z <= to; ++z) sum += slice_area(volume, Structure::LVC, z);
    return sum / static_cast<double>(to - from + 1);
  };
  const double low = mean_lvc_area(z0, std::min(z0 + 2, z1));
  const double high = mean_lvc_area(std::max(z1 - 2, z0), z1);
  ApicalRvc out;
  out.slice = low < high ? z0 : z1;
  out.rvc_area_mm2 = slice_area(volume, Structure::RVC, out.slice);
  out.rvc_lvc_ratio = safe_ratio(out.rvc_area_mm2, slice_area(volume, Structure::LVC, out.slice));
  return out;
}

double lvm_mass(const LabelVolume& volume) {
  return structure_volume(volume, Structure::LVM) * kMyocardialDensity;
}

InstantFeatures extract_instant_features(const PatientRecord& record, Phase phase) {
  const LabelVolume& frame =
      record.series.frame(phase == Phase::ED ? record.ed_index : record.es_index);
  const double bsa = body_surface_area(record.height_cm, record.weight_kg);

  const ThicknessProfile thickness = lvm_thickness(frame);
  const auto all = thickness.all_samples();
  const auto septal = thickness.septal_samples();
  const Aggregate wall = aggregate(all);
  const Aggregate sept = aggregate(septal);

  auto shape_stats = [&frame](Structure s) {
    const SliceMeasures m = slice_measures(frame, s);
    std::vector<double> circ, perim;
    for (const auto& sl : m.slices) {
      circ.push_back(sl.circularity);
      perim.push_back(sl.perimeter_mm);
    }
    return std::pair{aggregate(circ), aggregate(perim)};
  };
  const auto [rvc_circ, rvc_perim] = shape_stats(Structure::RVC);
  const auto [lvm_circ, lvm_perim] = shape_stats(Structure::LVM);

  ApicalRvc apical;
  try {
    apical = apical_rvc_features(frame);
  } catch (const ValidationError&) {
    apical = ApicalRvc{};  // LVM absent: documented zero default
  }

  return InstantFeatures{
      wall.max,
      wall.min,
      wall.stddev,
      wall.mean,
      sept.stddev,
      sept.mean,
      rvc_circ.mean,
      lvm_circ.mean,
      rvc_perim.max,
      lvm_perim.max,
      rvc_perim.mean,
      lvm_perim.mean,
      apical.rvc_area_mm2,
      apical.rvc_lvc_ratio,
      structure_volume(frame, Structure::RVC) / bsa,
      structure_volume(frame, Structure::LVM) / bsa,
      structure_volume(frame, Structure::LVC) / bsa,
      lvm_mass(frame),
  };
}

std::array<double, FeatureSchema::kPatientLevel> patient_features(const PatientRecord& record) {
  return {record.weight_kg, record.height_cm, body_mass_index(record.height_cm, record.weight_kg)};
}

std::array<VolumeCurve, 3> volume_curves(const CineLabelSeries& series) {
  std::array<VolumeCurve, 3> curves;
  for (std::size_t i = 0; i < kForegroundStructures.size(); ++i) {
    curves[i].structure = kForegroundStructures[i];
    curves[i].values.reserve(series.size());
  }
  const double voxel_ml = voxel_volume_ml(series.spacing());
  for (const auto& frame : series.frames()) {
    std::array<std::size_t, kNumLabels> counts{};
    for (std::uint8_t v : frame.data()) ++counts[v];
    for (std::size_t i = 0; i < kForegroundStructures.size(); ++i) {
      curves[i].values.push_back(static_cast<double>(counts[code(kForegroundStructures[i])]) * voxel_ml);
    }
  }
  return curves;
}

CurveStatistics curve_statistics(std::span<const double> values) {
  if (values.empty()) throw ValidationError("empty volume curve");
  CurveStatistics s;
  // max_element/min_element return the first extremum: earliest index.
  const auto max_it = std::max_element(values.begin(), values.end());
  const auto min_it = std::min_element(values.begin(), values.end());
  s.vmax = *max_it;
  s.vmin = *min_it;
  s.t_max = static_cast<std::size_t>(max_it - values.begin());
  s.t_min = static_cast<std::size_t>(min_it - values.begin());

  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  s.median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);

  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(n);
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : values) {
    const double d = v - mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  m2 /= static_cast<double>(n);
  m3 /= static_cast<double>(n);
  m4 /= static_cast<double>(n);
  s.stddev = std::sqrt(m2);
  if (m2 > 0.0) {
    s.skewness = m3 / std::pow(m2, 1.5);
    s.excess_kurtosis = m4 / (m2 * m2) - 3.0;
  }
  return s;
}

double ejection_fraction(double vmax, double vmin) { return safe_ratio(vmax - vmin, vmax); }

DynamicFeatures extract_dynamic_features(const CineLabelSeries& series) {
  const auto curves = volume_curves(series);
  const CurveStatistics rvc = curve_statistics(curves[0].values);
  const CurveStatistics lvm = curve_statistics(curves[1].values);
  const CurveStatistics lvc = curve_statistics(curves[2].values);
  // The LVM "minimum" is read at the LVC end-systolic instant.
  const double lvm_vmin = curves[1].values[lvc.t_min];

  return DynamicFeatures{
      rvc.vmax,
      lvm.vmax,
      lvc.vmax,
      rvc.vmin,
      lvm_vmin,
      lvc.vmin,
      ejection_fraction(rvc.vmax, rvc.vmin),
      ejection_fraction(lvc.vmax, lvc.vmin),
      rvc.median,
      lvm.median,
      lvc.median,
      rvc.excess_kurtosis,
      lvm.excess_kurtosis,
      lvc.excess_kurtosis,
      rvc.skewness,
      lvm.skewness,
      lvc.skewness,
      rvc.stddev,
      lvm.stddev,
      lvc.stddev,
      safe_ratio(lvc.vmin, rvc.vmin),
      safe_ratio(lvm_vmin, lvc.vmin),
      safe_ratio(rvc.vmin, lvm_vmin),
      static_cast<double>(lvc.t_min) - static_cast<double>(rvc.t_min),
      static_cast<double>(lvc.t_max) - static_cast<double>(rvc.t_max),
  };
}

FeatureVector extract_features(const PatientRecord& record) {
  validate_patient(record);
  FeatureVector fv;
  fv.patient_id = record.id;
  fv.values.reserve(FeatureSchema::kSize);
  const char* stage = "ED instant features";
  try {
    for (double v : extract_instant_features(record, Phase::ED)) fv.values.push_back(v);
    stage = "ES instant features";
    for (double v : extract_instant_features(record, Phase::ES)) fv.values.push_back(v);
    stage = "patient features";
    for (double v : patient_features(record)) fv.values.push_back(v);
    stage = "dynamic features";
    for (double v : extract_dynamic_features(record.series)) fv.values.push_back(v);
  } catch (const ValidationError& e) {
    throw ValidationError("patient '" + record.id + "', " + stage + ": " + e.what());
  }
  fv.validate();
  return fv;
}

}  // namespace cardiac
