#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "cardiac/classify.hpp"
#include "cardiac/phantom.hpp"

namespace cardiac {

namespace fs = std::filesystem;

/// Writes one patient directory per phantom plus `labels.csv` into out_dir.
void cmd_phantom(const PhantomSpec& spec, int n_per_class, const fs::path& out_dir, int threads);

/// Extracts the 64 features of every patient directory under in_dir.
/// Throws ValidationError("no patients found") when there is none.
void cmd_extract(const fs::path& in_dir, const fs::path& out_csv, int threads);

void cmd_train(const fs::path& features_csv, const fs::path& labels_csv, const fs::path& model_out,
               const TrainConfig& config);

/// `patient_id,p_NOR,...,p_ARV,diagnosis` rows.
void cmd_predict(const fs::path& features_csv, const fs::path& model_path, const fs::path& out_csv);

/// Prints accuracy, per-fold accuracies and the confusion matrix to `out`;
/// per-patient predictions go to `predictions_csv` when non-empty.
CrossValidationResult cmd_cv(const fs::path& features_csv, const fs::path& labels_csv, int k,
                             const TrainConfig& config, std::ostream& out,
                             const fs::path& predictions_csv = {});

/// Scores the ED and ES frames of each predicted patient against the
/// ground-truth patient with the same directory name. Writes the CSV report
/// to out_csv and the aligned text report to `out`.
void cmd_evaluate(const fs::path& pred_dir, const fs::path& gt_dir, const fs::path& out_csv, std::ostream& out);

/// Volume curve CSV (`t,rvc_ml,lvm_ml,lvc_ml`) and an SVG line plot.
void cmd_curve(const fs::path& series_path, const fs::path& out_csv, const fs::path& out_svg);

/// SVG document for the three curves; byte-identical for identical input.
std::string curve_svg(const std::array<VolumeCurve, 3>& curves);

}  // namespace cardiac
