#include "cardiac/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace cardiac {

namespace {

constexpr std::array<std::string_view, FeatureSchema::kInstantPerPhase> kInstantNames = {
    "lvm_thickness_max",
    "lvm_thickness_min",
    "lvm_thickness_std",
    "lvm_thickness_mean",
    "septal_thickness_std",
    "septal_thickness_mean",
    "rvc_circularity_mean",
    "lvm_circularity_mean",
    "rvc_circumference_max",
    "lvm_circumference_max",
    "rvc_circumference_mean",
    "lvm_circumference_mean",
    "rvc_apical_area",
    "rvc_lvc_apical_ratio",
    "rvc_volume_per_bsa",
    "lvm_volume_per_bsa",
    "lvc_volume_per_bsa",
    "lvm_mass",
};

constexpr std::array<std::string_view, FeatureSchema::kPatientLevel> kPatientNames = {
    "weight", "height", "bmi"};

constexpr std::array<std::string_view, FeatureSchema::kDynamic> kDynamicNames = {
    "rvc_vmax",
    "lvm_vmax",
    "lvc_vmax",
    "rvc_vmin",
    "lvm_vmin",
    "lvc_vmin",
    "rvc_ef",
    "lvc_ef",
    "rvc_volume_median",
    "lvm_volume_median",
    "lvc_volume_median",
    "rvc_volume_kurtosis",
    "lvm_volume_kurtosis",
    "lvc_volume_kurtosis",
    "rvc_volume_skewness",
    "lvm_volume_skewness",
    "lvc_volume_skewness",
    "rvc_volume_std",
    "lvm_volume_std",
    "lvc_volume_std",
    "ratio_vmin_lvc_rvc",
    "ratio_vmin_lvm_lvc",
    "ratio_vmin_rvc_lvm",
    "dt_vmin_lvc_rvc",
    "dt_vmax_lvc_rvc",
};

bool positive_finite(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace

void Spacing::validate() const {
  if (!positive_finite(sx) || !positive_finite(sy) || !positive_finite(sz)) {
    throw ValidationError("non-positive spacing");
  }
}

std::string_view structure_name(Structure s) {
  switch (s) {
    case Structure::BG: return "BG";
    case Structure::RVC: return "RVC";
    case Structure::LVM: return "LVM";
    case Structure::LVC: return "LVC";
  }
  return "?";
}

std::string_view diagnosis_name(Diagnosis d) {
  switch (d) {
    case Diagnosis::NOR: return "NOR";
    case Diagnosis::MINF: return "MINF";
    case Diagnosis::DCM: return "DCM";
    case Diagnosis::HCM: return "HCM";
    case Diagnosis::ARV: return "ARV";
  }
  return "?";
}

Diagnosis diagnosis_from_name(std::string_view name) {
  for (Diagnosis d : kAllDiagnoses) {
    if (diagnosis_name(d) == name) return d;
  }
  // ACDC spells the abnormal right ventricle group "RV".
  if (name == "RV") return Diagnosis::ARV;
  throw ValidationError("unknown diagnosis '" + std::string(name) + "'");
}

Diagnosis diagnosis_from_index(int index) {
  if (index < 0 || index >= kNumClasses) {
    throw ValidationError("diagnosis index out of range: " + std::to_string(index));
  }
  return static_cast<Diagnosis>(index);
}

std::string_view phase_name(Phase p) { return p == Phase::ED ? "ED" : "ES"; }

double voxel_volume_ml(const Spacing& spacing) {
  spacing.validate();
  return spacing.sx * spacing.sy * spacing.sz / 1000.0;
}

LabelVolume::LabelVolume(Dims dims, Spacing spacing)
    : LabelVolume(dims, spacing, std::vector<std::uint8_t>(dims.voxels(), 0)) {}

LabelVolume::LabelVolume(Dims dims, Spacing spacing, std::vector<std::uint8_t> data)
    : dims_(dims), spacing_(spacing), data_(std::move(data)) {
  if (dims_.nx <= 0 || dims_.ny <= 0 || dims_.nz <= 0) {
    throw ValidationError("non-positive volume dims");
  }
  spacing_.validate();
  if (data_.size() != dims_.voxels()) {
    throw ValidationError("label data length does not match dims");
  }
  validate();
}

void LabelVolume::validate() const {
  for (std::uint8_t v : data_) {
    if (v >= kNumLabels) {
      throw ValidationError("label code outside {0..3}: " + std::to_string(v));
    }
  }
}

std::size_t LabelVolume::count(Structure s) const {
  return static_cast<std::size_t>(std::count(data_.begin(), data_.end(), code(s)));
}

ImageVolume::ImageVolume(Dims d, Spacing s, std::vector<double> values)
    : dims(d), spacing(s), data(std::move(values)) {
  spacing.validate();
  if (data.size() != dims.voxels() || data.empty()) {
    throw ValidationError("image data length does not match dims");
  }
}

ProbabilityVolume::ProbabilityVolume(Dims dims, Spacing spacing, std::vector<double> data)
    : dims_(dims), spacing_(spacing), data_(std::move(data)) {
  spacing_.validate();
  if (dims_.voxels() == 0 || data_.size() != dims_.voxels() * kNumLabels) {
    throw ValidationError("probability data length does not match dims");
  }
  for (std::size_t v = 0; v < dims_.voxels(); ++v) {
    double sum = 0.0;
    for (double p : voxel(v)) {
      if (!(p >= 0.0)) throw ValidationError("negative or NaN class probability");
      sum += p;
    }
    if (std::abs(sum - 1.0) > kSumTolerance) {
      throw ValidationError("class probabilities do not sum to 1");
    }
  }
}

CineLabelSeries::CineLabelSeries(std::vector<LabelVolume> frames) : frames_(std::move(frames)) {
  if (frames_.size() < 2) {
    throw ValidationError("cine series needs at least two frames");
  }
  for (const auto& f : frames_) {
    if (f.dims() != frames_.front().dims()) {
      throw ValidationError("inconsistent frame dims");
    }
    if (f.spacing() != frames_.front().spacing()) {
      throw ValidationError("inconsistent frame spacing");
    }
  }
}

const PatientRecord& validate_patient(const PatientRecord& record) {
  const auto& frames = record.series.frames();
  if (frames.size() < 2) throw ValidationError("cine series needs at least two frames");
  for (const auto& f : frames) {
    f.spacing().validate();
    if (f.dims() != frames.front().dims()) throw ValidationError("inconsistent frame dims");
    if (f.spacing() != frames.front().spacing()) {
      throw ValidationError("inconsistent frame spacing");
    }
  }
  if (record.ed_index >= frames.size() || record.es_index >= frames.size()) {
    throw ValidationError("ED/ES index out of range");
  }
  if (record.ed_index == record.es_index) throw ValidationError("ED and ES must differ");
  if (!(record.height_cm > 50.0 && record.height_cm < 250.0)) {
    throw ValidationError("height_cm out of bounds (50, 250)");
  }
  if (!(record.weight_kg > 10.0 && record.weight_kg < 300.0)) {
    throw ValidationError("weight_kg out of bounds (10, 300)");
  }
  return record;
}

std::span<const std::string_view> instant_feature_names() { return kInstantNames; }
std::span<const std::string_view> dynamic_feature_names() { return kDynamicNames; }

FeatureSchema::FeatureSchema() {
  names_.reserve(kSize);
  for (std::string_view phase : {"ed", "es"}) {
    for (std::string_view n : kInstantNames) {
      names_.push_back(std::string(phase) + "_" + std::string(n));
    }
  }
  for (std::string_view n : kPatientNames) names_.emplace_back(n);
  for (std::string_view n : kDynamicNames) names_.emplace_back(n);
  fingerprint_ = fingerprint_of(names_);
}

const FeatureSchema& FeatureSchema::canonical() {
  static const FeatureSchema schema;
  return schema;
}

std::optional<std::size_t> FeatureSchema::find(std::string_view name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - names_.begin());
}

std::string FeatureSchema::fingerprint_of(std::span<const std::string> names) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](unsigned char c) {
    h ^= c;
    h *= 1099511628211ull;
  };
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i) mix(',');
    for (char c : names[i]) mix(static_cast<unsigned char>(c));
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void FeatureVector::validate() const {
  if (values.size() != FeatureSchema::kSize) {
    throw ValidationError("feature vector for '" + patient_id + "' has " +
                          std::to_string(values.size()) + " values, expected " +
                          std::to_string(FeatureSchema::kSize));
  }
  const auto& names = FeatureSchema::canonical().names();
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw ValidationError("non-finite feature '" + names[i] + "' for patient '" +
                            patient_id + "'");
    }
  }
}

}  // namespace cardiac
