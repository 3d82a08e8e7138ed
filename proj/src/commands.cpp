#include "cardiac/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <ostream>
#include <sstream>

#include "cardiac/dataio.hpp"
#include "cardiac/features.hpp"
#include "cardiac/metrics.hpp"

namespace cardiac {

namespace {

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

CineLabelSeries load_curve_series(const fs::path& path) {
  if (fs::is_directory(path) && fs::exists(path / "patient.json")) return read_patient(path).series;
  return read_series(path);
}

}  // namespace

void cmd_phantom(const PhantomSpec& spec, int n_per_class, const fs::path& out_dir, int threads) {
  const auto cohort = generate_cohort(spec, n_per_class, threads);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
  std::map<std::string, Diagnosis> labels;
  for (const auto& c : cohort) {
    write_patient(c.record, out_dir / c.record.id);
    labels[c.record.id] = *c.record.diagnosis;
  }
  write_labels_csv(labels, out_dir / "labels.csv");
}

void cmd_extract(const fs::path& in_dir, const fs::path& out_csv, int threads) {
  if (!fs::is_directory(in_dir)) throw IoError("input directory not found: " + in_dir.string());
  const auto dirs = list_patient_dirs(in_dir);
  if (dirs.empty()) throw ValidationError("no patients found in " + in_dir.string());
  std::vector<FeatureVector> vectors(dirs.size());
  parallel_for(dirs.size(), threads, [&](std::size_t i) { vectors[i] = extract_features(read_patient(dirs[i])); });
  write_features_csv(vectors, FeatureSchema::canonical(), out_csv);
}

void cmd_train(const fs::path& features_csv, const fs::path& labels_csv, const fs::path& model_out,
               const TrainConfig& config) {
  const FeatureTable table = read_features_csv(features_csv);
  const Dataset data = make_dataset(table.vectors, read_labels_csv(labels_csv));
  save_model(train_ensemble(data, config), model_out);
}

void cmd_predict(const fs::path& features_csv, const fs::path& model_path, const fs::path& out_csv) {
  const EnsembleModel model = load_model(model_path);
  model.validate();
  const FeatureTable table = read_features_csv(features_csv);
  std::ostringstream out;
  out << "patient_id";
  for (Diagnosis d : kAllDiagnoses) out << ",p_" << diagnosis_name(d);
  out << ",diagnosis\n";
  for (const FeatureVector& fv : table.vectors) {
    const Prediction p = predict(model, fv.values);
    out << fv.patient_id;
    for (double v : p.probabilities) out << ',' << fmt("%.9g", v);
    out << ',' << diagnosis_name(p.diagnosis) << '\n';
  }
  write_text_file(out_csv, out.str());
}

CrossValidationResult cmd_cv(const fs::path& features_csv, const fs::path& labels_csv, int k,
                             const TrainConfig& config, std::ostream& out, const fs::path& predictions_csv) {
  const FeatureTable table = read_features_csv(features_csv);
  const Dataset data = make_dataset(table.vectors, read_labels_csv(labels_csv));
  CrossValidationResult r = cross_validate(data, k, config);
  out << "accuracy " << fmt("%.4f", r.accuracy()) << " (" << r.confusion.trace() << "/" << r.confusion.total()
      << ")\n";
  for (std::size_t f = 0; f < r.fold_accuracy.size(); ++f) {
    out << "fold " << f << " accuracy " << fmt("%.4f", r.fold_accuracy[f]) << '\n';
  }
  out << "confusion matrix (rows = predicted, columns = target)\n" << r.confusion.to_text();
  if (!predictions_csv.empty()) {
    std::ostringstream csv;
    csv << "patient_id,fold";
    for (Diagnosis d : kAllDiagnoses) csv << ",p_" << diagnosis_name(d);
    csv << ",diagnosis\n";
    for (std::size_t i = 0; i < r.ids.size(); ++i) {
      csv << r.ids[i] << ',' << r.fold_of[i];
      for (double v : r.predictions[i].probabilities) csv << ',' << fmt("%.9g", v);
      csv << ',' << diagnosis_name(r.predictions[i].diagnosis) << '\n';
    }
    write_text_file(predictions_csv, csv.str());
  }
  return r;
}

void cmd_evaluate(const fs::path& pred_dir, const fs::path& gt_dir, const fs::path& out_csv, std::ostream& out) {
  if (!fs::is_directory(pred_dir)) throw IoError("prediction directory not found: " + pred_dir.string());
  if (!fs::is_directory(gt_dir)) throw IoError("ground-truth directory not found: " + gt_dir.string());
  const auto dirs = list_patient_dirs(pred_dir);
  if (dirs.empty()) throw ValidationError("no patients found in " + pred_dir.string());
  std::vector<SegScore> scores;
  for (const fs::path& dir : dirs) {
    const PatientRecord pred = read_patient(dir);
    const fs::path gt_path = gt_dir / dir.filename();
    if (!fs::exists(gt_path / "patient.json")) {
      throw IoError("no ground truth for " + dir.filename().string() + " in " + gt_dir.string());
    }
    const PatientRecord gt = read_patient(gt_path);
    if (!gt.diagnosis) throw ValidationError("ground truth for " + gt.id + " has no diagnosis");
    for (Phase phase : {Phase::ED, Phase::ES}) {
      const std::size_t t = phase == Phase::ED ? gt.ed_index : gt.es_index;
      if (t >= pred.series.size()) throw ValidationError("prediction for " + gt.id + " lacks frame " + std::to_string(t));
      SegScore s = score_segmentation(pred.series.frame(t), gt.series.frame(t));
      s.patient_id = gt.id;
      s.pathology = *gt.diagnosis;
      s.phase = phase;
      scores.push_back(std::move(s));
    }
  }
  const SegReport report = aggregate_report(scores);
  write_text_file(out_csv, report.to_csv());
  out << report.to_text();
}

std::string curve_svg(const std::array<VolumeCurve, 3>& curves) {
  constexpr double kWidth = 640, kHeight = 400, kLeft = 60, kRight = 130, kTop = 20, kBottom = 50;
  constexpr const char* kColors[3] = {"#1f77b4", "#2ca02c", "#d62728"};
  const std::size_t n = curves[0].values.size();
  double vmax = 0.0;
  for (const auto& c : curves) {
    for (double v : c.values) vmax = std::max(vmax, v);
  }
  if (vmax <= 0.0) vmax = 1.0;
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto px = [&](std::size_t t) { return kLeft + (n > 1 ? plot_w * static_cast<double>(t) / (n - 1) : 0.0); };
  auto py = [&](double v) { return kTop + plot_h * (1.0 - v / vmax); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" viewBox=\"0 0 640 400\">\n";
  svg << "<rect width=\"640\" height=\"400\" fill=\"white\"/>\n";
  svg << "<g stroke=\"black\" stroke-width=\"1\">\n";
  svg << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + plot_h << "\" x2=\"" << kLeft + plot_w << "\" y2=\""
      << kTop + plot_h << "\"/>\n";
  svg << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kTop + plot_h
      << "\"/>\n</g>\n";
  svg << "<g font-family=\"sans-serif\" font-size=\"12\">\n";
  for (int i = 0; i <= 4; ++i) {
    const double v = vmax * i / 4.0;
    svg << "<text x=\"" << kLeft - 6 << "\" y=\"" << fmt("%.2f", py(v) + 4) << "\" text-anchor=\"end\">"
        << fmt("%.0f", v) << "</text>\n";
  }
  svg << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 15
      << "\" text-anchor=\"middle\">frame</text>\n";
  svg << "<text x=\"15\" y=\"" << kTop + plot_h / 2 << "\" transform=\"rotate(-90 15 " << kTop + plot_h / 2
      << ")\" text-anchor=\"middle\">volume (ml)</text>\n";
  for (std::size_t t = 0; t < n; ++t) {
    if (n > 10 && t % 5 != 0 && t + 1 != n) continue;
    svg << "<text x=\"" << fmt("%.2f", px(t)) << "\" y=\"" << kTop + plot_h + 16 << "\" text-anchor=\"middle\">"
        << t << "</text>\n";
  }
  svg << "</g>\n";
  for (std::size_t c = 0; c < curves.size(); ++c) {
    svg << "<polyline fill=\"none\" stroke=\"" << kColors[c] << "\" stroke-width=\"2\" points=\"";
    for (std::size_t t = 0; t < curves[c].values.size(); ++t) {
      if (t > 0) svg << ' ';
      svg << fmt("%.2f", px(t)) << ',' << fmt("%.2f", py(curves[c].values[t]));
    }
    svg << "\"/>\n";
    const double ly = kTop + 20.0 * static_cast<double>(c) + 10.0;
    svg << "<line x1=\"" << kWidth - kRight + 15 << "\" y1=\"" << ly << "\" x2=\"" << kWidth - kRight + 40
        << "\" y2=\"" << ly << "\" stroke=\"" << kColors[c] << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << kWidth - kRight + 46 << "\" y=\"" << ly + 4
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << structure_name(curves[c].structure) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

void cmd_curve(const fs::path& series_path, const fs::path& out_csv, const fs::path& out_svg) {
  const auto curves = volume_curves(load_curve_series(series_path));
  std::ostringstream csv;
  csv << "t,rvc_ml,lvm_ml,lvc_ml\n";
  for (std::size_t t = 0; t < curves[0].values.size(); ++t) {
    csv << t;
    for (const auto& c : curves) csv << ',' << fmt("%.9g", c.values[t]);
    csv << '\n';
  }
  write_text_file(out_csv, csv.str());
  if (!out_svg.empty()) write_text_file(out_svg, curve_svg(curves));
}

}  // namespace cardiac
