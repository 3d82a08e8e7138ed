#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "cardiac/core_model.hpp"

namespace cardiac {

/// 2|A n B| / (|A| + |B|) over the voxels labeled `s`. Both empty -> 1.
double dice_score(const LabelVolume& a, const LabelVolume& b, Structure s);

/// Symmetric Hausdorff distance in mm between the boundary voxels of label
/// `s` in a and b. A boundary voxel has a face neighbour, or the volume
/// border, that is not `s`. Throws when either mask is empty.
double hausdorff_mm(const LabelVolume& a, const LabelVolume& b, Structure s);

/// Scores for the three foreground structures, in RVC, LVM, LVC order.
struct SegScore {
  std::string patient_id;
  Diagnosis pathology = Diagnosis::NOR;
  Phase phase = Phase::ED;
  std::array<double, 3> dice{};
  /// Absent when either mask of that structure is empty.
  std::array<std::optional<double>, 3> hausdorff_mm{};
};

SegScore score_segmentation(const LabelVolume& prediction, const LabelVolume& truth);

struct ReportRow {
  /// Pathology name or "ALL".
  std::string group;
  /// "ED", "ES" or "total".
  std::string phase;
  std::size_t n = 0;
  std::array<std::optional<double>, 3> dice{};
  std::array<std::optional<double>, 3> hausdorff_mm{};
};

/// Rows per pathology (canonical class order) and for all patients, each
/// with ED, ES and total; cells without scores stay absent.
struct SegReport {
  std::vector<ReportRow> rows;

  std::string to_csv() const;
  std::string to_text() const;
};

SegReport aggregate_report(const std::vector<SegScore>& scores);

}  // namespace cardiac
