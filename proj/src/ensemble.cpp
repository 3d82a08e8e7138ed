#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <iomanip>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include "cardiac/classify.hpp"

namespace cardiac {

namespace {

constexpr std::uint64_t kFoldStream = 0x666f6c6473ULL;

std::vector<std::string> class_names() {
  std::vector<std::string> names;
  for (Diagnosis d : kAllDiagnoses) names.emplace_back(diagnosis_name(d));
  return names;
}

}  // namespace

void TrainConfig::validate() const {
  if (max_epochs < 1) throw ValidationError("max_epochs must be positive");
  if (patience < 1) throw ValidationError("patience must be positive");
  if (!(learning_rate > 0.0)) throw ValidationError("learning_rate must be positive");
  if (!(lr_decay > 0.0)) throw ValidationError("lr_decay must be positive");
  if (batches_per_epoch < 1) throw ValidationError("batches_per_epoch must be positive");
  if (batch_size < 1) throw ValidationError("batch_size must be positive");
  if (!(member_fraction > 0.0 && member_fraction < 1.0)) {
    throw ValidationError("member_fraction must lie in (0, 1)");
  }
  if (!(feature_fraction > 0.0 && feature_fraction <= 1.0)) {
    throw ValidationError("feature_fraction must lie in (0, 1]");
  }
  if (!(noise_sigma >= 0.0)) throw ValidationError("noise_sigma must be >= 0");
  if (n_trees < 1) throw ValidationError("n_trees must be positive");
  if (!(mlp_weight >= 0.0 && mlp_weight <= 1.0)) throw ValidationError("mlp_weight must lie in [0, 1]");
  if (threads < 0) throw ValidationError("threads must be >= 0");
}

std::size_t TrainConfig::feature_subset_size(std::size_t n_features) const {
  const auto k = static_cast<std::size_t>(std::floor(feature_fraction * static_cast<double>(n_features) + 1e-9));
  return std::clamp<std::size_t>(k, 1, std::max<std::size_t>(n_features, 1));
}

void Dataset::validate() const {
  if (features.size() != ids.size() || labels.size() != ids.size()) {
    throw ValidationError("dataset ids, features and labels differ in length");
  }
  const std::size_t w = width();
  std::set<std::string_view> seen;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!seen.insert(ids[i]).second) throw ValidationError("duplicate patient id '" + ids[i] + "'");
    if (features[i].size() != w) throw ValidationError("row '" + ids[i] + "' has inconsistent width");
    for (double v : features[i]) {
      if (!std::isfinite(v)) throw ValidationError("row '" + ids[i] + "' contains a non-finite value");
    }
    if (diagnosis_index(labels[i]) >= kNumClasses) throw ValidationError("label outside class range");
  }
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  for (std::size_t i : rows) {
    out.ids.push_back(ids.at(i));
    out.features.push_back(features.at(i));
    out.labels.push_back(labels.at(i));
  }
  return out;
}

Dataset Dataset::canonical_order() const {
  std::vector<std::size_t> order(size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [this](std::size_t a, std::size_t b) { return ids[a] < ids[b]; });
  return subset(order);
}

int argmax(std::span<const double> values) {
  if (values.empty()) throw ValidationError("argmax of an empty vector");
  return static_cast<int>(std::max_element(values.begin(), values.end()) - values.begin());
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& task) {
  std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads)
                                    : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          task(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

void EnsembleModel::validate() const {
  if (mlps.size() != static_cast<std::size_t>(kEnsembleMembers)) {
    throw ValidationError("ensemble must have exactly " + std::to_string(kEnsembleMembers) +
                          " MLP members, found " + std::to_string(mlps.size()));
  }
  if (class_order != class_names()) throw ValidationError("unexpected class order in model");
  if (!(mlp_weight >= 0.0 && mlp_weight <= 1.0)) throw ValidationError("mlp_weight must lie in [0, 1]");
  const std::size_t width = n_features();
  if (schema_fingerprint != FeatureSchema::canonical().fingerprint()) {
    throw ValidationError("schema mismatch: model fingerprint " + schema_fingerprint +
                          " does not match the feature schema");
  }
  for (const auto& m : mlps) m.validate(width);
  forest.validate(width);
}

std::size_t EnsembleModel::n_features() const { return FeatureSchema::kSize; }

Prediction combine_scores(std::span<const ClassProbabilities> member_outputs, const ClassProbabilities& forest,
                          double mlp_weight) {
  if (member_outputs.empty()) throw ValidationError("no member outputs to combine");
  Prediction p;
  p.forest = forest;
  std::vector<double> column(member_outputs.size());
  for (std::size_t k = 0; k < kNumClasses; ++k) {
    for (std::size_t m = 0; m < member_outputs.size(); ++m) column[m] = member_outputs[m][k];
    // Sorted summation: the mean does not depend on member order.
    std::sort(column.begin(), column.end());
    double sum = 0.0;
    for (double v : column) sum += v;
    p.mlp[k] = sum / static_cast<double>(member_outputs.size());
    p.probabilities[k] = mlp_weight * p.mlp[k] + (1.0 - mlp_weight) * forest[k];
  }
  p.diagnosis = diagnosis_from_index(argmax(p.probabilities));
  return p;
}

Prediction predict(const EnsembleModel& model, std::span<const double> features) {
  if (features.size() != model.n_features()) {
    throw ValidationError("schema mismatch: model expects " + std::to_string(model.n_features()) +
                          " features, got " + std::to_string(features.size()));
  }
  std::vector<ClassProbabilities> outputs;
  outputs.reserve(model.mlps.size());
  for (const auto& m : model.mlps) outputs.push_back(mlp_forward(m, features, MlpMode::Infer));
  return combine_scores(outputs, model.forest.predict_proba(features), model.mlp_weight);
}

EnsembleModel train_ensemble(const Dataset& data, const TrainConfig& config) {
  config.validate();
  data.validate();
  if (data.width() != FeatureSchema::kSize) {
    throw ValidationError("schema mismatch: expected " + std::to_string(FeatureSchema::kSize) +
                          " feature columns, found " + std::to_string(data.width()));
  }
  const Dataset rows = data.canonical_order();
  EnsembleModel model;
  model.mlps.resize(static_cast<std::size_t>(kEnsembleMembers));
  parallel_for(model.mlps.size(), config.threads, [&](std::size_t m) {
    model.mlps[m] = train_mlp_member(rows, config, static_cast<int>(m)).model;
  });
  model.forest = train_forest(rows, config);
  model.schema_fingerprint = FeatureSchema::canonical().fingerprint();
  model.class_order = class_names();
  model.mlp_weight = config.mlp_weight;
  return model;
}

int ConfusionMatrix::total() const {
  int t = 0;
  for (const auto& row : counts) t = std::accumulate(row.begin(), row.end(), t);
  return t;
}

int ConfusionMatrix::trace() const {
  int t = 0;
  for (int k = 0; k < kNumClasses; ++k) t += counts[k][k];
  return t;
}

double ConfusionMatrix::accuracy() const {
  const int n = total();
  return n == 0 ? 0.0 : static_cast<double>(trace()) / n;
}

std::string ConfusionMatrix::to_text() const {
  std::ostringstream out;
  out << std::setw(10) << "pred\\true";
  for (Diagnosis d : kAllDiagnoses) out << std::setw(6) << diagnosis_name(d);
  out << '\n';
  for (int p = 0; p < kNumClasses; ++p) {
    out << std::setw(10) << diagnosis_name(diagnosis_from_index(p));
    for (int t = 0; t < kNumClasses; ++t) out << std::setw(6) << counts[p][t];
    out << '\n';
  }
  return out.str();
}

std::vector<int> stratified_folds(std::span<const Diagnosis> labels, int k, std::uint64_t seed,
                                  std::vector<std::string>* warnings) {
  if (k < 2) throw ValidationError("cross-validation needs k >= 2");
  if (labels.size() < static_cast<std::size_t>(k)) {
    throw ValidationError("cross-validation needs at least k = " + std::to_string(k) + " labeled patients");
  }
  std::vector<int> fold(labels.size(), -1);
  std::size_t deal = 0;
  for (Diagnosis d : kAllDiagnoses) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == d) members.push_back(i);
    }
    if (members.empty()) continue;
    if (members.size() < static_cast<std::size_t>(k) && warnings != nullptr) {
      warnings->push_back("class " + std::string(diagnosis_name(d)) + " has " + std::to_string(members.size()) +
                          " members, fewer than k = " + std::to_string(k) + "; not stratified");
    }
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(diagnosis_index(d))));
    rng.shuffle(members);
    for (std::size_t i : members) fold[i] = static_cast<int>(deal++ % static_cast<std::size_t>(k));
  }
  return fold;
}

CrossValidationResult cross_validate(const Dataset& data, int k, const TrainConfig& config) {
  config.validate();
  data.validate();
  const Dataset rows = data.canonical_order();
  CrossValidationResult r;
  r.ids = rows.ids;
  r.fold_of = stratified_folds(rows.labels, k, derive_seed(config.seed, kFoldStream), &r.warnings);
  r.predictions.resize(rows.size());
  for (int f = 0; f < k; ++f) {
    std::vector<std::size_t> train, held_out;
    for (std::size_t i = 0; i < rows.size(); ++i) (r.fold_of[i] == f ? held_out : train).push_back(i);
    const EnsembleModel model = train_ensemble(rows.subset(train), config);
    int correct = 0;
    for (std::size_t i : held_out) {
      r.predictions[i] = predict(model, rows.features[i]);
      r.confusion.add(r.predictions[i].diagnosis, rows.labels[i]);
      if (r.predictions[i].diagnosis == rows.labels[i]) ++correct;
    }
    r.fold_accuracy.push_back(held_out.empty() ? 0.0 : static_cast<double>(correct) / held_out.size());
  }
  return r;
}

}  // namespace cardiac
