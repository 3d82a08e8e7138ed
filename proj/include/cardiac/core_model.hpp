#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cardiac {

/// Input that violates a data-model invariant. Maps to CLI exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Filesystem or format failure. Maps to CLI exit code 2.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Physical voxel edge lengths in mm. x,y span the short-axis plane, z the
/// long-axis slice stack.
struct Spacing {
  double sx = 1.0;
  double sy = 1.0;
  double sz = 1.0;

  void validate() const;
  bool operator==(const Spacing&) const = default;
};

struct Dims {
  int nx = 0;
  int ny = 0;
  int nz = 0;

  std::size_t voxels() const {
    return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) *
           static_cast<std::size_t>(nz);
  }
  std::size_t slice_pixels() const {
    return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny);
  }
  bool operator==(const Dims&) const = default;
};

/// Integer codes are the on-disk convention.
enum class Structure : std::uint8_t { BG = 0, RVC = 1, LVM = 2, LVC = 3 };

inline constexpr int kNumLabels = 4;
inline constexpr std::array<Structure, 3> kForegroundStructures = {
    Structure::RVC, Structure::LVM, Structure::LVC};

std::string_view structure_name(Structure s);
inline std::uint8_t code(Structure s) { return static_cast<std::uint8_t>(s); }

/// Five classes in canonical order; the order fixes softmax indices and
/// confusion-matrix axes.
enum class Diagnosis : std::uint8_t { NOR = 0, MINF = 1, DCM = 2, HCM = 3, ARV = 4 };

inline constexpr int kNumClasses = 5;
inline constexpr std::array<Diagnosis, kNumClasses> kAllDiagnoses = {
    Diagnosis::NOR, Diagnosis::MINF, Diagnosis::DCM, Diagnosis::HCM, Diagnosis::ARV};

std::string_view diagnosis_name(Diagnosis d);
Diagnosis diagnosis_from_name(std::string_view name);
inline int diagnosis_index(Diagnosis d) { return static_cast<int>(d); }
Diagnosis diagnosis_from_index(int index);

enum class Phase : std::uint8_t { ED = 0, ES = 1 };
std::string_view phase_name(Phase p);

/// mm^3 -> ml.
double voxel_volume_ml(const Spacing& spacing);

/// Row-major (x fastest, then y, then z) grid of label codes.
class LabelVolume {
 public:
  LabelVolume() = default;
  /// All-background volume.
  LabelVolume(Dims dims, Spacing spacing);
  /// Takes ownership of `data`; validates length and label codes.
  LabelVolume(Dims dims, Spacing spacing, std::vector<std::uint8_t> data);

  const Dims& dims() const { return dims_; }
  const Spacing& spacing() const { return spacing_; }
  std::span<const std::uint8_t> data() const { return data_; }
  std::span<std::uint8_t> mutable_data() { return data_; }

  std::size_t index(int x, int y, int z) const {
    return static_cast<std::size_t>(x) +
           static_cast<std::size_t>(dims_.nx) *
               (static_cast<std::size_t>(y) + static_cast<std::size_t>(dims_.ny) * z);
  }
  std::uint8_t at(int x, int y, int z) const { return data_[index(x, y, z)]; }
  void set(int x, int y, int z, Structure s) { data_[index(x, y, z)] = code(s); }
  bool contains(int x, int y, int z) const {
    return x >= 0 && y >= 0 && z >= 0 && x < dims_.nx && y < dims_.ny && z < dims_.nz;
  }

  std::size_t count(Structure s) const;
  /// Re-checks every voxel code; used after in-place mutation.
  void validate() const;

  bool operator==(const LabelVolume&) const = default;

 private:
  Dims dims_{};
  Spacing spacing_{};
  std::vector<std::uint8_t> data_;
};

/// Real-valued grey image with the same layout as LabelVolume.
struct ImageVolume {
  Dims dims{};
  Spacing spacing{};
  std::vector<double> data;

  ImageVolume() = default;
  ImageVolume(Dims d, Spacing s, std::vector<double> values);
  std::size_t index(int x, int y, int z) const {
    return static_cast<std::size_t>(x) +
           static_cast<std::size_t>(dims.nx) *
               (static_cast<std::size_t>(y) + static_cast<std::size_t>(dims.ny) * z);
  }
};

/// Per-voxel class probabilities, voxel-major: data[voxel * 4 + k].
class ProbabilityVolume {
 public:
  static constexpr double kSumTolerance = 1e-5;

  ProbabilityVolume() = default;
  ProbabilityVolume(Dims dims, Spacing spacing, std::vector<double> data);

  const Dims& dims() const { return dims_; }
  const Spacing& spacing() const { return spacing_; }
  std::span<const double> data() const { return data_; }
  std::span<const double> voxel(std::size_t v) const {
    return std::span<const double>(data_).subspan(v * kNumLabels, kNumLabels);
  }

 private:
  Dims dims_{};
  Spacing spacing_{};
  std::vector<double> data_;
};

/// Time-ordered frames sharing dims and spacing; T >= 2.
class CineLabelSeries {
 public:
  CineLabelSeries() = default;
  explicit CineLabelSeries(std::vector<LabelVolume> frames);

  std::size_t size() const { return frames_.size(); }
  const LabelVolume& frame(std::size_t t) const { return frames_.at(t); }
  const std::vector<LabelVolume>& frames() const { return frames_; }
  const Dims& dims() const { return frames_.front().dims(); }
  const Spacing& spacing() const { return frames_.front().spacing(); }

  bool operator==(const CineLabelSeries&) const = default;

 private:
  std::vector<LabelVolume> frames_;
};

struct PatientRecord {
  std::string id;
  CineLabelSeries series;
  double height_cm = 0.0;
  double weight_kg = 0.0;
  std::size_t ed_index = 0;
  std::size_t es_index = 0;
  std::optional<Diagnosis> diagnosis;
};

/// Returns the record unchanged when every invariant holds; otherwise throws
/// ValidationError naming the first violation.
const PatientRecord& validate_patient(const PatientRecord& record);

/// Canonical 64-entry feature order. Single source of truth for CSV columns
/// and classifier input width.
class FeatureSchema {
 public:
  static constexpr std::size_t kInstantPerPhase = 18;
  static constexpr std::size_t kPatientLevel = 3;
  static constexpr std::size_t kDynamic = 25;
  static constexpr std::size_t kSize = 2 * kInstantPerPhase + kPatientLevel + kDynamic;

  static const FeatureSchema& canonical();

  const std::vector<std::string>& names() const { return names_; }
  std::size_t size() const { return names_.size(); }
  std::optional<std::size_t> find(std::string_view name) const;
  /// FNV-1a over the comma-joined names, hex encoded.
  const std::string& fingerprint() const { return fingerprint_; }

  static std::string fingerprint_of(std::span<const std::string> names);

 private:
  FeatureSchema();
  std::vector<std::string> names_;
  std::string fingerprint_;
};

/// Names of the 18 per-phase instant features without the phase prefix.
std::span<const std::string_view> instant_feature_names();
/// Names of the 25 dynamic volume features.
std::span<const std::string_view> dynamic_feature_names();

struct FeatureVector {
  std::string patient_id;
  std::vector<double> values;

  /// Length matches the schema and every value is finite.
  void validate() const;
};

struct VolumeCurve {
  Structure structure = Structure::BG;
  std::vector<double> values;
};

}  // namespace cardiac
