#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "cardiac/classify.hpp"
#include "cardiac/core_model.hpp"

namespace cardiac {

namespace fs = std::filesystem;

/// Header of the simple volume format: `<name>.json` next to a `<name>.raw`
/// little-endian payload ordered x fastest, then y, z, t.
struct SimpleVolumeHeader {
  std::array<int, 4> dims{};  // nx, ny, nz, nt
  std::array<double, 3> spacing_mm{};
  std::string dtype;  // "u8" or "f32"
  std::map<int, std::string> legend;

  std::size_t element_count() const;
  std::size_t element_size() const;
  void validate() const;
};

std::string header_to_json(const SimpleVolumeHeader& header);
SimpleVolumeHeader header_from_json(const std::string& text);

/// Raw payload path belonging to a header path (`x.json` -> `x.raw`).
fs::path payload_path(const fs::path& header_path);

/// Writes `<path>` (JSON) and its `.raw` sibling.
void write_series(const CineLabelSeries& series, const fs::path& path);

/// Accepts a simple-format `.json`, a single NIfTI-1 file (3D frames stacked
/// along the 4th dimension), or a directory of per-frame NIfTI-1 files
/// (sorted by file name). Uncompressed and gzip NIfTI are both accepted.
CineLabelSeries read_series(const fs::path& path);

/// Probability maps use dtype f32 with the class channel as 4th dimension.
void write_probabilities(const ProbabilityVolume& volume, const fs::path& path);
ProbabilityVolume read_probabilities(const fs::path& path);

void write_image(const ImageVolume& image, const fs::path& path);
ImageVolume read_image(const fs::path& path);

/// NIfTI-1 voxel grid as read from disk, values widened to double.
struct NiftiVolume {
  std::array<int, 4> dims{};  // nx, ny, nz, nt (nt = 1 for 3D)
  Spacing spacing{};
  std::vector<double> values;
};

/// Reads a NIfTI-1 single file (`.nii` or `.nii.gz`). Supported datatypes:
/// uint8, int16, float32; either byte order.
NiftiVolume read_nifti(const fs::path& path);

/// Patient directory layout: `<dir>/patient.json` (metadata) and
/// `<dir>/series.json` + `series.raw`.
void write_patient(const PatientRecord& record, const fs::path& dir);
PatientRecord read_patient(const fs::path& dir);
/// Sub-directories of `root` holding a patient.json, sorted by name.
std::vector<fs::path> list_patient_dirs(const fs::path& root);

/// `patient_id,<64 names>` header; values with 9 significant digits.
void write_features_csv(const std::vector<FeatureVector>& vectors, const FeatureSchema& schema,
                        const fs::path& path);

struct FeatureTable {
  std::vector<std::string> names;
  std::vector<FeatureVector> vectors;
};

/// Rejects headers that differ from the canonical schema.
FeatureTable read_features_csv(const fs::path& path);

/// `patient_id,diagnosis` rows.
void write_labels_csv(const std::map<std::string, Diagnosis>& labels, const fs::path& path);
std::map<std::string, Diagnosis> read_labels_csv(const fs::path& path);

/// Joins feature rows with labels into a training set; every feature row
/// must have a label.
Dataset make_dataset(const std::vector<FeatureVector>& vectors,
                     const std::map<std::string, Diagnosis>& labels);

inline constexpr const char* kModelFormatVersion = "cardiac-cad-ensemble/1";

std::string model_to_json(const EnsembleModel& model);
EnsembleModel model_from_json(const std::string& text);
void save_model(const EnsembleModel& model, const fs::path& path);
EnsembleModel load_model(const fs::path& path);

std::string read_text_file(const fs::path& path);
void write_text_file(const fs::path& path, const std::string& text);

}  // namespace cardiac
