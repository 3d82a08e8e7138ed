// Acceptance run: one PASS/FAIL line per criterion. Exit status is 0 only
// when every criterion passes.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cardiac/classify.hpp"
#include "cardiac/commands.hpp"
#include "cardiac/dataio.hpp"
#include "cardiac/features.hpp"
#include "cardiac/metrics.hpp"
#include "cardiac/phantom.hpp"
#include "cardiac/preprocess.hpp"
#include "cardiac/segmath.hpp"
#include "../oracles.hpp"

using namespace cardiac;

namespace {

// Tolerances and budgets.
constexpr double kLossGradTolerance = 1e-4;
constexpr double kMlpGradTolerance = 1e-3;
constexpr double kFiniteDifferenceStep = 1e-5;
constexpr double kVolumeTolerance = 0.02;
constexpr double kEfTolerance = 0.03;
constexpr double kCircularityLow = 0.95;
constexpr double kCircularityHigh = 1.02;
constexpr double kCsvTolerance = 1e-7;
constexpr double kMinAccuracy = 0.90;
constexpr double kBudget1 = 1.0;
constexpr double kBudget2 = 30.0;
constexpr double kBudget4 = 60.0;

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Check {
 public:
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass_ = false;
      if (!failures_.empty()) failures_ += "; ";
      failures_ += what;
    }
  }
  Outcome done(const std::string& summary) const {
    return {pass_, pass_ ? summary : summary + " | failed: " + failures_};
  }

 private:
  bool pass_ = true;
  std::string failures_;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

ClassMatrix random_softmax(std::size_t n, std::mt19937_64& gen, double logit_sigma = 2.0) {
  std::normal_distribution<double> g(0.0, logit_sigma);
  ClassMatrix m(n, 4);
  for (double& x : m.values) x = g(gen);
  return softmax(m);
}

ClassMatrix random_one_hot(std::size_t n, std::mt19937_64& gen) {
  std::uniform_int_distribution<std::size_t> pick(0, 3);
  ClassMatrix m(n, 4);
  for (std::size_t i = 0; i < n; ++i) m(i, pick(gen)) = 1.0;
  return m;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Outcome criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  Check c;
  std::mt19937_64 gen(1);
  for (int i = 0; i < 10; ++i) {
    const ClassMatrix v = random_one_hot(64, gen);
    c.require(dice_loss(v, v) == -1.0, "perfect prediction not exactly -1");
  }
  double lo = 0.0, hi = -1.0;
  for (int i = 0; i < 1000; ++i) {
    const double l = dice_loss(random_softmax(32, gen), random_one_hot(32, gen));
    lo = std::min(lo, l);
    hi = std::max(hi, l);
  }
  c.require(lo >= -1.0 && hi <= 0.0, "loss left [-1, 0]");
  const double s = seconds_since(t0);
  c.require(s < kBudget1, "runtime");
  return c.done("range [" + fmt("%.4f", lo) + ", " + fmt("%.4f", hi) + "] over 1000 instances, " +
                fmt("%.2f s", s));
}

Outcome criterion2() {
  const auto t0 = std::chrono::steady_clock::now();
  Check c;
  std::mt19937_64 gen(2);
  double dice_worst = 0.0, ce_worst = 0.0, mlp_worst = 0.0, loss_worst = 0.0;
  int kinks = 0;
  for (int i = 0; i < 100; ++i) {
    // Unit-variance logits keep every probability far above h, where the
    // central difference of log(u) is accurate.
    ClassMatrix u = random_softmax(10, gen, 1.0);
    const ClassMatrix v = random_one_hot(10, gen);
    const ClassMatrix gd = dice_loss_grad(u, v);
    const ClassMatrix gc = cross_entropy_grad(u, v);
    const auto nd = oracle::central_difference(u.values, [&] { return dice_loss(u, v); }, kFiniteDifferenceStep);
    const auto nc =
        oracle::central_difference(u.values, [&] { return cross_entropy(u, v); }, kFiniteDifferenceStep);
    for (std::size_t k = 0; k < nd.size(); ++k) {
      dice_worst = std::max(dice_worst, oracle::relative_error(gd.values[k], nd[k], 1e-6));
      ce_worst = std::max(ce_worst, oracle::relative_error(gc.values[k], nc[k], 1e-6));
    }
  }
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_int_distribution<int> cls(0, kNumClasses - 1);
  for (int i = 0; i < 100; ++i) {
    std::vector<std::size_t> mask{0, 1, 2, 3, 4};
    Rng rng(100 + i);
    MlpModel m = init_mlp(mask, std::vector<double>(5, 0.0), std::vector<double>(5, 1.0), 0.1, rng);
    for (auto p : trainable_parameters(m))
      for (double& x : p) x += 0.2 * rng.normal();
    std::vector<std::vector<double>> batch(6, std::vector<double>(5));
    std::vector<Diagnosis> t(6);
    for (auto& row : batch)
      for (double& x : row) x = g(gen);
    for (auto& d : t) d = diagnosis_from_index(cls(gen));
    const MlpBackwardResult r = mlp_backward(m, batch, t);
    const double ref_loss = oracle::mlp_reference(m, batch, t).loss;
    loss_worst = std::max(loss_worst, std::abs(ref_loss - r.loss) / std::abs(ref_loss));
    auto params = trainable_parameters(m);
    int checked = 0;
    while (checked < 25) {
      const std::size_t a = std::uniform_int_distribution<std::size_t>(0, params.size() - 1)(gen);
      const std::size_t e = std::uniform_int_distribution<std::size_t>(0, params[a].size() - 1)(gen);
      double& w = params[a][e];
      const double keep = w;
      w = keep + kFiniteDifferenceStep;
      const oracle::MlpReference up = oracle::mlp_reference(m, batch, t);
      const double up_loss = mlp_batch_loss(m, batch, t);
      w = keep - kFiniteDifferenceStep;
      const oracle::MlpReference down = oracle::mlp_reference(m, batch, t);
      const double down_loss = mlp_batch_loss(m, batch, t);
      w = keep;
      // A leaky ReLU input changing sign inside [w - h, w + h] makes the
      // central difference meaningless; such probes are redrawn.
      if (oracle::crosses_kink(up, down)) {
        ++kinks;
        continue;
      }
      ++checked;
      const double numeric = (up_loss - down_loss) / (2 * kFiniteDifferenceStep);
      mlp_worst = std::max(mlp_worst, oracle::relative_error(r.gradients[a][e], numeric, 1e-6));
    }
  }
  c.require(dice_worst < kLossGradTolerance, "dice gradient");
  c.require(ce_worst < kLossGradTolerance, "cross-entropy gradient");
  c.require(mlp_worst < kMlpGradTolerance, "MLP gradient");
  c.require(loss_worst < 1e-12, "MLP loss disagrees with the reference forward pass");
  const double s = seconds_since(t0);
  c.require(s < kBudget2, "runtime");
  return c.done("max rel err dice " + fmt("%.2e", dice_worst) + ", CE " + fmt("%.2e", ce_worst) + ", MLP " +
                fmt("%.2e", mlp_worst) + " (100 instances each, " + std::to_string(kinks) + " kink-crossing MLP probes redrawn), " +
                fmt("%.2f s", s));
}

Outcome criterion3() {
  Check c;
  UNetSpec spec;
  spec.input_dims = {224, 224, 10};
  spec.initial_features = 26;
  spec.pooling_stages = 4;
  spec.in_plane_only = true;
  const UNetShapes s = unet_shapes(spec);
  c.require(s.feature_ladder() == std::vector<int>{26, 52, 104, 208, 416}, "feature ladder");
  c.require(s.bottleneck.spatial == std::vector<int>{14, 14, 10}, "bottleneck shape");
  std::string ladder;
  for (int f : s.feature_ladder()) ladder += (ladder.empty() ? "" : ",") + std::to_string(f);
  return c.done("ladder [" + ladder + "], bottleneck " + std::to_string(s.bottleneck.spatial[0]) + "x" +
                std::to_string(s.bottleneck.spatial[1]) + "x" + std::to_string(s.bottleneck.spatial[2]));
}

Outcome criterion4() {
  const auto t0 = std::chrono::steady_clock::now();
  Check c;
  const PhantomSpec spec = PhantomSpec::fine();
  const int n = 20;
  std::vector<PhantomCase> cases(n);
  std::vector<FeatureVector> features(n);
  parallel_for(n, 0, [&](std::size_t i) {
    cases[i] = generate_patient(spec, diagnosis_from_index(static_cast<int>(i % 5)), derive_seed(4, i));
    features[i] = extract_features(cases[i].record);
  });
  double vol_worst = 0.0, ef_worst = 0.0;
  bool finite = true;
  const std::size_t lvc_ef = *FeatureSchema::canonical().find("lvc_ef");
  const std::size_t rvc_ef = *FeatureSchema::canonical().find("rvc_ef");
  for (int i = 0; i < n; ++i) {
    const auto& o = cases[i].oracle;
    const auto curves = volume_curves(cases[i].record.series);
    const std::array<const std::vector<double>*, 3> truth{&o.rvc_ml, &o.lvm_ml, &o.lvc_ml};
    for (int s = 0; s < 3; ++s)
      for (std::size_t t = 0; t < curves[s].values.size(); ++t)
        vol_worst = std::max(vol_worst, std::abs(curves[s].values[t] - (*truth[s])[t]) / (*truth[s])[t]);
    ef_worst = std::max(ef_worst, std::abs(features[i].values[lvc_ef] - o.geometry.lv_ef));
    ef_worst = std::max(ef_worst, std::abs(features[i].values[rvc_ef] - o.geometry.rv_ef));
    c.require(features[i].values.size() == 64, "feature count");
    for (double x : features[i].values) finite = finite && std::isfinite(x);
  }
  c.require(vol_worst <= kVolumeTolerance, "volume");
  c.require(ef_worst <= kEfTolerance, "EF");
  c.require(finite, "non-finite feature");

  oracle::RingPhantom ring;
  const ThicknessProfile p = lvm_thickness(ring.build());
  double thick_worst = 0.0;
  for (double t : p.all_samples()) thick_worst = std::max(thick_worst, std::abs(t - (ring.r_out - ring.r_in)));
  c.require(!p.all_samples().empty() && thick_worst <= ring.spacing.sx, "annulus thickness");

  oracle::RingPhantom disk;
  disk.r_in = 0.0;
  disk.r_out = 25.0;
  const double circ = slice_measures(disk.build(), Structure::LVM).slices.at(0).circularity;
  c.require(circ >= kCircularityLow && circ <= kCircularityHigh, "circularity");
  const double s = seconds_since(t0);
  c.require(s < kBudget4, "runtime");
  return c.done("20 phantoms at 1 mm: volume err " + fmt("%.4f", vol_worst) + ", EF err " + fmt("%.4f", ef_worst) +
                ", annulus err " + fmt("%.3f mm", thick_worst) + ", circularity " + fmt("%.4f", circ) + ", " +
                fmt("%.1f s", s));
}

const std::vector<std::string>& expected_names() {
  static const std::vector<std::string> names = [] {
    const char* instant[] = {"lvm_thickness_max",     "lvm_thickness_min",     "lvm_thickness_std",
                             "lvm_thickness_mean",    "septal_thickness_std",  "septal_thickness_mean",
                             "rvc_circularity_mean",  "lvm_circularity_mean",  "rvc_circumference_max",
                             "lvm_circumference_max", "rvc_circumference_mean", "lvm_circumference_mean",
                             "rvc_apical_area",       "rvc_lvc_apical_ratio",  "rvc_volume_per_bsa",
                             "lvm_volume_per_bsa",    "lvc_volume_per_bsa",    "lvm_mass"};
    const char* dynamic[] = {"rvc_vmax",           "lvm_vmax",           "lvc_vmax",
                             "rvc_vmin",           "lvm_vmin",           "lvc_vmin",
                             "rvc_ef",             "lvc_ef",             "rvc_volume_median",
                             "lvm_volume_median",  "lvc_volume_median",  "rvc_volume_kurtosis",
                             "lvm_volume_kurtosis", "lvc_volume_kurtosis", "rvc_volume_skewness",
                             "lvm_volume_skewness", "lvc_volume_skewness", "rvc_volume_std",
                             "lvm_volume_std",     "lvc_volume_std",     "ratio_vmin_lvc_rvc",
                             "ratio_vmin_lvm_lvc", "ratio_vmin_rvc_lvm", "dt_vmin_lvc_rvc",
                             "dt_vmax_lvc_rvc"};
    std::vector<std::string> out;
    for (const char* phase : {"ed_", "es_"})
      for (const char* n : instant) out.push_back(std::string(phase) + n);
    for (const char* n : {"weight", "height", "bmi"}) out.emplace_back(n);
    for (const char* n : dynamic) out.emplace_back(n);
    return out;
  }();
  return names;
}

Outcome criterion5() {
  Check c;
  c.require(FeatureSchema::canonical().names() == expected_names(), "schema names or order");
  std::vector<FeatureVector> rows;
  const PhantomSpec spec;
  for (int i = 0; i < 5; ++i) {
    rows.push_back(extract_features(
        generate_patient(spec, diagnosis_from_index(i), derive_seed(5, i), "S" + std::to_string(i)).record));
    c.require(rows.back().values.size() == 64, "extract_features width");
  }
  oracle::TempDir tmp("acceptance5");
  write_features_csv(rows, FeatureSchema::canonical(), tmp / "f.csv");
  const FeatureTable back = read_features_csv(tmp / "f.csv");
  double worst = 0.0;
  c.require(back.vectors.size() == rows.size(), "row count");
  for (std::size_t i = 0; i < rows.size() && i < back.vectors.size(); ++i) {
    c.require(back.vectors[i].patient_id == rows[i].patient_id, "patient id");
    for (std::size_t j = 0; j < 64; ++j) {
      const double a = rows[i].values[j], b = back.vectors[i].values[j];
      worst = std::max(worst, a == b ? 0.0 : std::abs(a - b) / std::max(std::abs(a), std::abs(b)));
    }
  }
  c.require(worst <= kCsvTolerance, "CSV round trip");
  return c.done("64 names in canonical order, CSV round-trip max rel err " + fmt("%.2e", worst));
}

Dataset phantom_dataset(const std::filesystem::path& dir, int n_per_class, std::uint64_t seed) {
  PhantomSpec spec;
  spec.seed = seed;
  cmd_phantom(spec, n_per_class, dir / "patients", 0);
  cmd_extract(dir / "patients", dir / "features.csv", 0);
  return make_dataset(read_features_csv(dir / "features.csv").vectors, read_labels_csv(dir / "patients" / "labels.csv"));
}

Outcome criterion6() {
  const auto t0 = std::chrono::steady_clock::now();
  Check c;
  oracle::TempDir tmp("acceptance6");
  const Dataset data = phantom_dataset(tmp.path(), 20, 6);
  c.require(data.size() == 100, "cohort size");

  TrainConfig quick;
  quick.max_epochs = 3;
  quick.n_trees = 20;
  const CrossValidationResult r = cross_validate(data, 5, quick);
  std::array<int, 5> fold_size{};
  for (int f : r.fold_of) ++fold_size[static_cast<std::size_t>(f)];
  for (int s : fold_size) c.require(s == 20, "fold size");
  c.require(r.predictions.size() == 100 && r.confusion.total() == 100, "every patient validated once");
  std::set<std::string> ids(r.ids.begin(), r.ids.end());
  c.require(ids.size() == 100, "distinct validated patients");

  // Rows of the matrix are predicted classes.
  const Dataset sorted = data.canonical_order();
  ConfusionMatrix rebuilt;
  for (std::size_t i = 0; i < r.predictions.size(); ++i) {
    const int p = diagnosis_index(r.predictions[i].diagnosis), t = diagnosis_index(sorted.labels[i]);
    ++rebuilt.counts[p][t];
  }
  c.require(rebuilt.counts == r.confusion.counts, "confusion orientation");
  c.require(r.confusion.to_text().find("rows = predicted") != std::string::npos ||
                r.confusion.to_text().find("pred\\true") != std::string::npos,
            "confusion label");

  const TrainConfig defaults;
  c.require(defaults.n_trees == 1000, "default tree count");
  TrainConfig full = defaults;
  full.max_epochs = 2;
  const EnsembleModel m = train_ensemble(data, full);
  c.require(m.mlps.size() == 50, "member count");
  c.require(m.forest.trees.size() == 1000, "tree count");
  for (int k = 0; k < 50; ++k) {
    c.require(m.mlps[k].feature_mask.size() == 42, "feature mask size");
    const MemberSplit s = member_split(data.size(), 64, full, k);
    c.require(s.train.size() == 75 && s.validation.size() == 25, "75/25 split");
    c.require(s.feature_mask == m.mlps[k].feature_mask, "member mask");
  }
  return c.done("5 folds of 20, 100 validations, rows = predicted, 50 MLPs x 42 features, 75/25, 1000 trees, " +
                fmt("%.1f s", seconds_since(t0)));
}

Outcome criterion7() {
  const auto t0 = std::chrono::steady_clock::now();
  Check c;
  const TrainConfig config;  // full parameters
  std::vector<CrossValidationResult> runs;
  std::vector<std::string> feature_files;
  for (int run = 0; run < 2; ++run) {
    oracle::TempDir tmp("acceptance7");
    PhantomSpec spec;
    spec.seed = 7;
    cmd_phantom(spec, 40, tmp / "patients", 0);
    cmd_extract(tmp / "patients", tmp / "features.csv", 0);
    feature_files.push_back(read_text_file(tmp / "features.csv"));
    std::ostringstream log;
    runs.push_back(cmd_cv(tmp / "features.csv", tmp / "patients" / "labels.csv", 5, config, log));
  }
  const CrossValidationResult& r = runs[0];
  c.require(r.ids.size() == 200, "cohort size");
  c.require(r.accuracy() >= kMinAccuracy, "accuracy");
  c.require(feature_files[0] == feature_files[1], "feature CSV differs between runs");
  bool same = runs[0].ids == runs[1].ids && runs[0].fold_of == runs[1].fold_of;
  for (std::size_t i = 0; same && i < r.predictions.size(); ++i)
    same = runs[0].predictions[i].probabilities == runs[1].predictions[i].probabilities;
  c.require(same, "CV predictions differ between runs");
  return c.done("accuracy " + fmt("%.4f", r.accuracy()) + " on 200 patients (full parameters, 2 identical runs), " +
                fmt("%.1f s", seconds_since(t0)));
}

Outcome criterion8() {
  Check c;
  const LabelVolume a = oracle::random_blobs(Dims{16, 16, 4}, Spacing{}, Structure::LVM, 8, 0.3);
  c.require(dice_score(a, a, Structure::LVM) == 1.0, "dice identity");
  LabelVolume l(Dims{4, 1, 1}, Spacing{}), r(Dims{4, 1, 1}, Spacing{});
  l.set(0, 0, 0, Structure::LVM);
  r.set(3, 0, 0, Structure::LVM);
  c.require(dice_score(l, r, Structure::LVM) == 0.0, "dice disjoint");
  LabelVolume p(Dims{10, 10, 3}, Spacing{1.25, 1.25, 10}), q(Dims{10, 10, 3}, Spacing{1.25, 1.25, 10});
  p.set(2, 5, 1, Structure::LVC);
  q.set(5, 5, 1, Structure::LVC);
  const double h = hausdorff_mm(p, q, Structure::LVC);
  c.require(h == 3.75, "translation Hausdorff");
  bool symmetric = true;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const LabelVolume x = oracle::random_blobs(Dims{12, 10, 4}, Spacing{1.25, 1.25, 5}, Structure::RVC, s, 0.2);
    const LabelVolume y = oracle::random_blobs(Dims{12, 10, 4}, Spacing{1.25, 1.25, 5}, Structure::RVC, s + 99, 0.1);
    symmetric = symmetric && hausdorff_mm(x, y, Structure::RVC) == hausdorff_mm(y, x, Structure::RVC) &&
                dice_score(x, y, Structure::RVC) == dice_score(y, x, Structure::RVC);
  }
  c.require(symmetric, "symmetry");
  return c.done("dice 1/0, Hausdorff " + fmt("%.2f mm", h) + ", symmetric on 20 random pairs");
}

Outcome criterion9() {
  Check c;
  const int n = 10000;
  const auto offsets = motion_offsets(n, 0.1, 20.0, 9);
  std::vector<double> comp;
  int perturbed = 0;
  for (const auto& o : offsets) {
    if (!o.perturbed) continue;
    ++perturbed;
    comp.push_back(o.dx);
    comp.push_back(o.dy);
  }
  const double frac = static_cast<double>(perturbed) / n;
  const double sd = oracle::moments(comp).stddev;
  c.require(frac >= 0.08 && frac <= 0.12, "perturbed fraction");
  c.require(sd >= 19.0 && sd <= 21.0, "offset std");

  // The label volume path applies the same draws.
  LabelVolume column(Dims{1, 1, n}, Spacing{});
  for (int z = 0; z < n; ++z) column.set(0, 0, z, Structure::LVC);
  const LabelVolume moved = motion_augment(column, 0.1, 20.0, 9);
  int cleared = 0, shifted = 0;
  for (int z = 0; z < n; ++z) {
    cleared += moved.at(0, 0, z) == 0;
    shifted += offsets[z].dx != 0 || offsets[z].dy != 0;
  }
  c.require(cleared == shifted, "motion_augment disagrees with motion_offsets");

  oracle::RingPhantom ring;
  ring.n = 48;
  ring.nz = 2;
  ring.cx_mm = ring.cy_mm = 24;
  ring.r_in = 8;
  ring.r_out = 12;
  ring.rv_extent = 5;
  const LabelVolume lab = ring.build();
  std::vector<double> pix(lab.dims().voxels());
  for (std::size_t i = 0; i < pix.size(); ++i) pix[i] = 0.3 + 0.001 * static_cast<double>(i % 97);
  const ImageVolume img(lab.dims(), lab.spacing(), pix);
  const auto [ai, al] = augment(img, lab, AugmentSpec::neutral(), 123);
  double img_err = 0.0;
  for (std::size_t i = 0; i < pix.size(); ++i) img_err = std::max(img_err, std::abs(ai.data[i] - pix[i]));
  c.require(al == lab && img_err < 1e-12, "neutral augmentation");
  c.require(motion_augment(lab, 0.0, 20.0, 1) == lab, "p = 0 motion");
  return c.done("perturbed " + fmt("%.4f", frac) + ", offset std " + fmt("%.2f", sd) + ", neutral spec identity");
}

Outcome criterion10() {
  Check c;
  PhantomSpec spec;
  spec.frames = 6;
  const auto a = generate_cohort(spec, 2, 1);
  const auto b = generate_cohort(spec, 2, 3);
  bool same = a.size() == b.size();
  for (std::size_t i = 0; same && i < a.size(); ++i) same = a[i].record.series == b[i].record.series;
  c.require(same, "generate_cohort");

  std::vector<double> pix(a[0].record.series.dims().voxels());
  for (std::size_t i = 0; i < pix.size(); ++i) pix[i] = static_cast<double>(i % 31);
  const ImageVolume img(a[0].record.series.dims(), a[0].record.series.spacing(), pix);
  const auto x = augment(img, a[0].record.series.frame(0), AugmentSpec{}, 77);
  const auto y = augment(img, a[0].record.series.frame(0), AugmentSpec{}, 77);
  c.require(x.first.data == y.first.data && x.second == y.second, "augment");
  c.require(motion_augment(a[0].record.series.frame(0), 0.5, 5.0, 3) ==
                motion_augment(a[0].record.series.frame(0), 0.5, 5.0, 3),
            "motion_augment");

  oracle::TempDir tmp("acceptance10");
  const Dataset data = phantom_dataset(tmp.path(), 6, 10);
  TrainConfig config;
  config.max_epochs = 20;
  config.n_trees = 100;
  config.threads = 1;
  const EnsembleModel m1 = train_ensemble(data, config);
  config.threads = 0;
  const EnsembleModel m2 = train_ensemble(data, config);
  const std::string j1 = model_to_json(m1);
  c.require(j1 == model_to_json(m2), "train_ensemble");

  save_model(m1, tmp / "model.json");
  const EnsembleModel back = load_model(tmp / "model.json");
  bool bitwise = model_to_json(back) == j1;
  for (const auto& row : data.features) {
    const Prediction p1 = predict(m1, row), p2 = predict(back, row);
    bitwise = bitwise && p1.probabilities == p2.probabilities && p1.mlp == p2.mlp && p1.forest == p2.forest;
  }
  c.require(bitwise, "model JSON round trip");
  return c.done("cohort, augment, motion, ensemble training reproducible; JSON round trip bitwise on " +
                std::to_string(data.size()) + " rows");
}

}  // namespace

int main() {
  const std::vector<std::pair<int, std::function<Outcome()>>> criteria = {
      {1, criterion1}, {2, criterion2}, {3, criterion3}, {4, criterion4},  {5, criterion5},
      {6, criterion6}, {7, criterion7}, {8, criterion8}, {9, criterion9}, {10, criterion10}};
  int failures = 0;
  for (const auto& [id, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << "criterion " << id << ": " << (o.pass ? "PASS" : "FAIL") << " - " << o.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
