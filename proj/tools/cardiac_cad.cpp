// cardiac-cad: phantom generation, feature extraction, ensemble training,
// prediction, cross-validation, segmentation scoring and volume curves.

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>

#include "cardiac/commands.hpp"

namespace {

void add_train_options(CLI::App* cmd, cardiac::TrainConfig& c) {
  cmd->add_option("--max-epochs", c.max_epochs, "Maximum MLP epochs")->capture_default_str();
  cmd->add_option("--patience", c.patience, "Epochs without validation improvement before stopping")
      ->capture_default_str();
  cmd->add_option("--learning-rate", c.learning_rate, "Initial Adam learning rate")->capture_default_str();
  cmd->add_option("--lr-decay", c.lr_decay, "Per-epoch learning-rate factor")->capture_default_str();
  cmd->add_option("--batches-per-epoch", c.batches_per_epoch)->capture_default_str();
  cmd->add_option("--batch-size", c.batch_size)->capture_default_str();
  cmd->add_option("--member-fraction", c.member_fraction, "Training share of each MLP member")
      ->capture_default_str();
  cmd->add_option("--feature-fraction", c.feature_fraction, "Feature share seen by each MLP member")
      ->capture_default_str();
  cmd->add_option("--noise-sigma", c.noise_sigma)->capture_default_str();
  cmd->add_option("--n-trees", c.n_trees, "Random forest size")->capture_default_str();
  cmd->add_option("--mlp-weight", c.mlp_weight, "Weight of the MLP score against the forest")
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cardiac cine-MRI feature extraction and diagnosis ensemble"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "TOML/INI file with option defaults; command-line flags take precedence");

  std::uint64_t seed = 1234;
  int threads = 0;
  app.add_option("--seed", seed, "Random seed")->capture_default_str();
  app.add_option("--threads", threads, "Worker threads (0 = available parallelism)")->capture_default_str();

  cardiac::TrainConfig train_config;

  auto* phantom = app.add_subcommand("phantom", "Generate a balanced synthetic cohort");
  int n_per_class = 40;
  std::string phantom_out;
  cardiac::PhantomSpec spec;
  bool fine = false;
  phantom->add_option("--n-per-class", n_per_class, "Patients per class")->capture_default_str();
  phantom->add_option("--out", phantom_out, "Output directory")->required();
  phantom->add_option("--frames", spec.frames, "Frames per cardiac cycle")->capture_default_str();
  phantom->add_option("--separation", spec.separation, "Class offset in intra-class sigmas")
      ->capture_default_str();
  phantom->add_flag("--fine", fine, "1 mm isotropic grid");

  auto* extract = app.add_subcommand("extract", "Write the 64-feature CSV for a patient directory tree");
  std::string extract_in, extract_out;
  extract->add_option("--in", extract_in, "Directory of patient directories")->required();
  extract->add_option("--out", extract_out, "Feature CSV")->required();

  auto* train = app.add_subcommand("train", "Train the ensemble and write model JSON");
  std::string train_features, train_labels, train_model;
  train->add_option("--features", train_features)->required();
  train->add_option("--labels", train_labels)->required();
  train->add_option("--model", train_model, "Output model JSON")->required();
  add_train_options(train, train_config);

  auto* predict = app.add_subcommand("predict", "Class probabilities per patient");
  std::string predict_features, predict_model, predict_out;
  predict->add_option("--features", predict_features)->required();
  predict->add_option("--model", predict_model)->required();
  predict->add_option("--out", predict_out, "Prediction CSV")->required();

  auto* cv = app.add_subcommand("cv", "Stratified k-fold cross-validation");
  std::string cv_features, cv_labels, cv_out;
  int k = 5;
  cv->add_option("--features", cv_features)->required();
  cv->add_option("--labels", cv_labels)->required();
  cv->add_option("-k,--folds", k, "Number of folds")->capture_default_str();
  cv->add_option("--predictions", cv_out, "Optional per-patient prediction CSV");
  add_train_options(cv, train_config);

  auto* evaluate = app.add_subcommand("evaluate", "Dice and Hausdorff report against ground truth");
  std::string eval_pred, eval_gt, eval_out;
  evaluate->add_option("--pred", eval_pred, "Directory of predicted patients")->required();
  evaluate->add_option("--gt", eval_gt, "Directory of ground-truth patients")->required();
  evaluate->add_option("--out", eval_out, "Report CSV")->required();

  auto* curve = app.add_subcommand("curve", "Volume curves as CSV and SVG");
  std::string curve_in, curve_csv, curve_svg;
  curve->add_option("--series", curve_in, "Patient directory or series file")->required();
  curve->add_option("--out", curve_csv, "Curve CSV")->required();
  curve->add_option("--svg", curve_svg, "Curve SVG");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  train_config.seed = seed;
  train_config.threads = threads;
  try {
    if (phantom->parsed()) {
      if (fine) {
        const int frames = spec.frames;
        const double separation = spec.separation;
        spec = cardiac::PhantomSpec::fine();
        spec.frames = frames;
        spec.separation = separation;
      }
      spec.seed = seed;
      cardiac::cmd_phantom(spec, n_per_class, phantom_out, threads);
    } else if (extract->parsed()) {
      cardiac::cmd_extract(extract_in, extract_out, threads);
    } else if (train->parsed()) {
      cardiac::cmd_train(train_features, train_labels, train_model, train_config);
    } else if (predict->parsed()) {
      cardiac::cmd_predict(predict_features, predict_model, predict_out);
    } else if (cv->parsed()) {
      cardiac::cmd_cv(cv_features, cv_labels, k, train_config, std::cout, cv_out);
    } else if (evaluate->parsed()) {
      cardiac::cmd_evaluate(eval_pred, eval_gt, eval_out, std::cout);
    } else if (curve->parsed()) {
      cardiac::cmd_curve(curve_in, curve_csv, curve_svg);
    }
  } catch (const cardiac::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const cardiac::IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
