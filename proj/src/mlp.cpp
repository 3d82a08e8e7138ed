#include "cardiac/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace cardiac {

namespace {

using Matrix = std::vector<double>;  // row-major, rows = batch samples

struct LayerCache {
  Matrix input;  // B x in
  Matrix zhat;   // B x 32
  Matrix y;      // B x 32, before the nonlinearity
  std::vector<double> mean;
  std::vector<double> var;
  std::vector<double> inv_std;
};

struct BatchForward {
  std::vector<LayerCache> layers;
  Matrix last;    // B x 32, output-layer input
  Matrix probs;   // B x 5
  double loss = 0.0;
};

double leaky(double y) { return y > 0.0 ? y : kLeakySlope * y; }

// out[b, o] = W[o, :] . in[b, :] + bias[o]
Matrix dense_forward(const DenseLayer& layer, const Matrix& in, std::size_t batch) {
  const auto n_in = static_cast<std::size_t>(layer.inputs);
  const auto n_out = static_cast<std::size_t>(layer.outputs);
  Matrix out(batch * n_out);
  for (std::size_t b = 0; b < batch; ++b) {
    const double* x = &in[b * n_in];
    for (std::size_t o = 0; o < n_out; ++o) {
      const double* w = &layer.weights[o * n_in];
      double acc = layer.bias[o];
      for (std::size_t i = 0; i < n_in; ++i) acc += w[i] * x[i];
      out[b * n_out + o] = acc;
    }
  }
  return out;
}

std::vector<double> select_standardized(const MlpModel& model, std::span<const double> features) {
  std::vector<double> x(model.feature_mask.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    const std::size_t f = model.feature_mask[j];
    if (f >= features.size()) throw ValidationError("feature vector narrower than the model's feature mask");
    x[j] = (features[f] - model.feature_means[j]) / model.feature_stds[j];
  }
  return x;
}

ClassProbabilities softmax_row(const double* logits) {
  ClassProbabilities p{};
  const double mx = *std::max_element(logits, logits + kNumClasses);
  double sum = 0.0;
  for (int k = 0; k < kNumClasses; ++k) {
    p[k] = std::exp(logits[k] - mx);
    sum += p[k];
  }
  for (double& v : p) v /= sum;
  return p;
}

// Training-mode pass with batch statistics. Rows are raw feature vectors.
BatchForward forward_batch(const MlpModel& model, const std::vector<std::vector<double>>& batch,
                           std::span<const Diagnosis> targets, Rng* noise) {
  const std::size_t n = batch.size();
  if (n == 0) throw ValidationError("batch must not be empty");
  if (!targets.empty() && targets.size() != n) throw ValidationError("batch and target sizes differ");
  BatchForward f;
  Matrix h;
  h.reserve(n * model.feature_mask.size());
  for (const auto& row : batch) {
    const auto x = select_standardized(model, row);
    h.insert(h.end(), x.begin(), x.end());
  }
  for (std::size_t l = 0; l < model.hidden.size(); ++l) {
    const DenseLayer& dense = model.hidden[l];
    const BatchNormLayer& bn = model.norms[l];
    const auto units = static_cast<std::size_t>(dense.outputs);
    LayerCache c;
    Matrix z = dense_forward(dense, h, n);
    c.input = std::move(h);
    c.mean.assign(units, 0.0);
    c.var.assign(units, 0.0);
    c.inv_std.assign(units, 0.0);
    for (std::size_t u = 0; u < units; ++u) {
      double s = 0.0;
      for (std::size_t b = 0; b < n; ++b) s += z[b * units + u];
      c.mean[u] = s / static_cast<double>(n);
      double ss = 0.0;
      for (std::size_t b = 0; b < n; ++b) {
        const double d = z[b * units + u] - c.mean[u];
        ss += d * d;
      }
      c.var[u] = ss / static_cast<double>(n);
      c.inv_std[u] = 1.0 / std::sqrt(c.var[u] + kBatchNormEps);
    }
    c.zhat.resize(n * units);
    c.y.resize(n * units);
    h.assign(n * units, 0.0);
    for (std::size_t b = 0; b < n; ++b) {
      for (std::size_t u = 0; u < units; ++u) {
        const std::size_t i = b * units + u;
        c.zhat[i] = (z[i] - c.mean[u]) * c.inv_std[u];
        c.y[i] = bn.gamma[u] * c.zhat[i] + bn.beta[u];
        h[i] = leaky(c.y[i]);
        if (noise != nullptr) h[i] += model.noise_sigma * noise->normal();
      }
    }
    f.layers.push_back(std::move(c));
  }
  const Matrix logits = dense_forward(model.output, h, n);
  f.last = std::move(h);
  f.probs.resize(n * kNumClasses);
  for (std::size_t b = 0; b < n; ++b) {
    const double* row = &logits[b * kNumClasses];
    const ClassProbabilities p = softmax_row(row);
    std::copy(p.begin(), p.end(), f.probs.begin() + static_cast<std::ptrdiff_t>(b * kNumClasses));
    if (!targets.empty()) {
      const double mx = *std::max_element(row, row + kNumClasses);
      double sum = 0.0;
      for (int k = 0; k < kNumClasses; ++k) sum += std::exp(row[k] - mx);
      f.loss -= row[diagnosis_index(targets[b])] - mx - std::log(sum);
    }
  }
  f.loss /= static_cast<double>(n);
  return f;
}

DenseLayer glorot_dense(int inputs, int outputs, Rng& rng) {
  DenseLayer d;
  d.inputs = inputs;
  d.outputs = outputs;
  const double limit = std::sqrt(6.0 / static_cast<double>(inputs + outputs));
  d.weights.resize(static_cast<std::size_t>(inputs) * static_cast<std::size_t>(outputs));
  for (double& w : d.weights) w = rng.uniform(-limit, limit);
  d.bias.assign(static_cast<std::size_t>(outputs), 0.0);
  return d;
}

void check_dense(const DenseLayer& d, int inputs, int outputs, const std::string& what) {
  if (d.inputs != inputs || d.outputs != outputs ||
      d.weights.size() != static_cast<std::size_t>(inputs) * static_cast<std::size_t>(outputs) ||
      d.bias.size() != static_cast<std::size_t>(outputs)) {
    throw ValidationError(what + ": expected " + std::to_string(inputs) + " -> " + std::to_string(outputs));
  }
}

std::size_t count_correct(const MlpModel& model, const std::vector<std::vector<double>>& rows,
                          std::span<const Diagnosis> labels) {
  std::size_t correct = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const ClassProbabilities p = mlp_forward(model, rows[i], MlpMode::Infer);
    if (argmax(p) == diagnosis_index(labels[i])) ++correct;
  }
  return correct;
}

}  // namespace

void MlpModel::validate(std::size_t n_features) const {
  if (feature_mask.empty()) throw ValidationError("MLP feature mask is empty");
  for (std::size_t i = 0; i < feature_mask.size(); ++i) {
    if (feature_mask[i] >= n_features) throw ValidationError("MLP feature mask index out of range");
    if (i > 0 && feature_mask[i] <= feature_mask[i - 1]) {
      throw ValidationError("MLP feature mask must be strictly increasing");
    }
  }
  if (feature_means.size() != feature_mask.size() || feature_stds.size() != feature_mask.size()) {
    throw ValidationError("MLP standardization statistics do not match the feature mask");
  }
  for (double s : feature_stds) {
    if (!(s > 0.0) || !std::isfinite(s)) throw ValidationError("MLP feature std must be positive");
  }
  if (hidden.size() != static_cast<std::size_t>(kHiddenLayers) || norms.size() != hidden.size()) {
    throw ValidationError("MLP must have " + std::to_string(kHiddenLayers) + " hidden layers");
  }
  int width = static_cast<int>(feature_mask.size());
  for (std::size_t l = 0; l < hidden.size(); ++l) {
    check_dense(hidden[l], width, kHiddenUnits, "hidden layer " + std::to_string(l));
    const auto units = static_cast<std::size_t>(kHiddenUnits);
    const BatchNormLayer& bn = norms[l];
    if (bn.gamma.size() != units || bn.beta.size() != units || bn.running_mean.size() != units ||
        bn.running_var.size() != units) {
      throw ValidationError("batch-norm layer " + std::to_string(l) + " has wrong width");
    }
    for (double v : bn.running_var) {
      if (!(v >= 0.0)) throw ValidationError("batch-norm running variance must be >= 0");
    }
    width = kHiddenUnits;
  }
  check_dense(output, kHiddenUnits, kNumClasses, "output layer");
  if (!(noise_sigma >= 0.0)) throw ValidationError("noise sigma must be >= 0");
}

MlpModel init_mlp(std::vector<std::size_t> feature_mask, std::vector<double> feature_means,
                  std::vector<double> feature_stds, double noise_sigma, Rng& rng) {
  MlpModel m;
  const int inputs = static_cast<int>(feature_mask.size());
  m.feature_mask = std::move(feature_mask);
  m.feature_means = std::move(feature_means);
  m.feature_stds = std::move(feature_stds);
  m.noise_sigma = noise_sigma;
  int width = inputs;
  for (int l = 0; l < kHiddenLayers; ++l) {
    m.hidden.push_back(glorot_dense(width, kHiddenUnits, rng));
    const auto units = static_cast<std::size_t>(kHiddenUnits);
    m.norms.push_back(BatchNormLayer{std::vector<double>(units, 1.0), std::vector<double>(units, 0.0),
                                     std::vector<double>(units, 0.0), std::vector<double>(units, 1.0)});
    width = kHiddenUnits;
  }
  m.output = glorot_dense(kHiddenUnits, kNumClasses, rng);
  return m;
}

ClassProbabilities mlp_forward(const MlpModel& model, std::span<const double> features, MlpMode mode,
                               std::uint64_t seed) {
  if (mode == MlpMode::Train) {
    Rng noise(seed);
    const BatchForward f =
        forward_batch(model, {std::vector<double>(features.begin(), features.end())}, {}, &noise);
    ClassProbabilities p{};
    std::copy(f.probs.begin(), f.probs.end(), p.begin());
    return p;
  }
  std::vector<double> h = select_standardized(model, features);
  for (std::size_t l = 0; l < model.hidden.size(); ++l) {
    std::vector<double> z = dense_forward(model.hidden[l], h, 1);
    const BatchNormLayer& bn = model.norms[l];
    for (std::size_t u = 0; u < z.size(); ++u) {
      const double zhat = (z[u] - bn.running_mean[u]) / std::sqrt(bn.running_var[u] + kBatchNormEps);
      z[u] = leaky(bn.gamma[u] * zhat + bn.beta[u]);
    }
    h = std::move(z);
  }
  const std::vector<double> logits = dense_forward(model.output, h, 1);
  return softmax_row(logits.data());
}

std::vector<ClassProbabilities> mlp_predict(const MlpModel& model,
                                            const std::vector<std::vector<double>>& rows) {
  std::vector<ClassProbabilities> out;
  out.reserve(rows.size());
  for (const auto& row : rows) out.push_back(mlp_forward(model, row, MlpMode::Infer));
  return out;
}

std::vector<std::span<double>> trainable_parameters(MlpModel& model) {
  std::vector<std::span<double>> params;
  for (std::size_t l = 0; l < model.hidden.size(); ++l) {
    params.emplace_back(model.hidden[l].weights);
    params.emplace_back(model.hidden[l].bias);
    params.emplace_back(model.norms[l].gamma);
    params.emplace_back(model.norms[l].beta);
  }
  params.emplace_back(model.output.weights);
  params.emplace_back(model.output.bias);
  return params;
}

double mlp_batch_loss(const MlpModel& model, const std::vector<std::vector<double>>& batch,
                      std::span<const Diagnosis> targets, Rng* noise) {
  if (targets.size() != batch.size()) throw ValidationError("batch and target sizes differ");
  return forward_batch(model, batch, targets, noise).loss;
}

MlpBackwardResult mlp_backward(const MlpModel& model, const std::vector<std::vector<double>>& batch,
                               std::span<const Diagnosis> targets, Rng* noise) {
  if (targets.size() != batch.size()) throw ValidationError("batch and target sizes differ");
  const BatchForward f = forward_batch(model, batch, targets, noise);
  const std::size_t n = batch.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  const std::size_t n_layers = model.hidden.size();

  MlpBackwardResult r;
  r.loss = f.loss;
  r.gradients.resize(4 * n_layers + 2);
  for (const auto& c : f.layers) {
    r.batch_stats.means.push_back(c.mean);
    r.batch_stats.vars.push_back(c.var);
  }

  // d loss / d logits = (p - onehot) / n
  Matrix d_logits = f.probs;
  for (std::size_t b = 0; b < n; ++b) {
    d_logits[b * kNumClasses + diagnosis_index(targets[b])] -= 1.0;
  }
  for (double& v : d_logits) v *= inv_n;

  // Gradient of a dense layer; returns d input.
  auto dense_backward = [n](const DenseLayer& layer, const Matrix& input, const Matrix& d_out,
                            std::vector<double>& d_w, std::vector<double>& d_b) {
    const auto n_in = static_cast<std::size_t>(layer.inputs);
    const auto n_out = static_cast<std::size_t>(layer.outputs);
    d_w.assign(n_in * n_out, 0.0);
    d_b.assign(n_out, 0.0);
    Matrix d_in(n * n_in, 0.0);
    for (std::size_t b = 0; b < n; ++b) {
      const double* x = &input[b * n_in];
      double* dx = &d_in[b * n_in];
      for (std::size_t o = 0; o < n_out; ++o) {
        const double g = d_out[b * n_out + o];
        d_b[o] += g;
        double* dw = &d_w[o * n_in];
        const double* w = &layer.weights[o * n_in];
        for (std::size_t i = 0; i < n_in; ++i) {
          dw[i] += g * x[i];
          dx[i] += g * w[i];
        }
      }
    }
    return d_in;
  };

  Matrix d_h = dense_backward(model.output, f.last, d_logits, r.gradients[4 * n_layers],
                              r.gradients[4 * n_layers + 1]);
  for (std::size_t l = n_layers; l-- > 0;) {
    const LayerCache& c = f.layers[l];
    const BatchNormLayer& bn = model.norms[l];
    const auto units = static_cast<std::size_t>(model.hidden[l].outputs);
    auto& d_gamma = r.gradients[4 * l + 2];
    auto& d_beta = r.gradients[4 * l + 3];
    d_gamma.assign(units, 0.0);
    d_beta.assign(units, 0.0);
    Matrix d_zhat(n * units);
    for (std::size_t b = 0; b < n; ++b) {
      for (std::size_t u = 0; u < units; ++u) {
        const std::size_t i = b * units + u;
        const double dy = d_h[i] * (c.y[i] > 0.0 ? 1.0 : kLeakySlope);
        d_gamma[u] += dy * c.zhat[i];
        d_beta[u] += dy;
        d_zhat[i] = dy * bn.gamma[u];
      }
    }
    Matrix d_z(n * units);
    for (std::size_t u = 0; u < units; ++u) {
      double sum = 0.0;
      double sum_zhat = 0.0;
      for (std::size_t b = 0; b < n; ++b) {
        sum += d_zhat[b * units + u];
        sum_zhat += d_zhat[b * units + u] * c.zhat[b * units + u];
      }
      for (std::size_t b = 0; b < n; ++b) {
        const std::size_t i = b * units + u;
        d_z[i] = inv_n * c.inv_std[u] *
                 (static_cast<double>(n) * d_zhat[i] - sum - c.zhat[i] * sum_zhat);
      }
    }
    d_h = dense_backward(model.hidden[l], c.input, d_z, r.gradients[4 * l], r.gradients[4 * l + 1]);
  }
  return r;
}

void update_running_stats(MlpModel& model, const BatchStatistics& stats, std::size_t batch_size) {
  const double unbias =
      batch_size > 1 ? static_cast<double>(batch_size) / static_cast<double>(batch_size - 1) : 1.0;
  for (std::size_t l = 0; l < model.norms.size(); ++l) {
    BatchNormLayer& bn = model.norms[l];
    for (std::size_t u = 0; u < bn.running_mean.size(); ++u) {
      bn.running_mean[u] =
          (1.0 - kBatchNormMomentum) * bn.running_mean[u] + kBatchNormMomentum * stats.means[l][u];
      bn.running_var[u] =
          (1.0 - kBatchNormMomentum) * bn.running_var[u] + kBatchNormMomentum * stats.vars[l][u] * unbias;
    }
  }
}

AdamOptimizer::AdamOptimizer(MlpModel& model) {
  for (const auto& p : trainable_parameters(model)) {
    m_.emplace_back(p.size(), 0.0);
    v_.emplace_back(p.size(), 0.0);
  }
}

void AdamOptimizer::step(MlpModel& model, const MlpGradients& gradients, double learning_rate) {
  auto params = trainable_parameters(model);
  if (params.size() != gradients.size() || params.size() != m_.size()) {
    throw ValidationError("gradient layout does not match the model");
  }
  ++step_;
  const double c1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(step_));
  for (std::size_t a = 0; a < params.size(); ++a) {
    if (gradients[a].size() != params[a].size()) throw ValidationError("gradient array size mismatch");
    for (std::size_t i = 0; i < params[a].size(); ++i) {
      const double g = gradients[a][i];
      m_[a][i] = kAdamBeta1 * m_[a][i] + (1.0 - kAdamBeta1) * g;
      v_[a][i] = kAdamBeta2 * v_[a][i] + (1.0 - kAdamBeta2) * g * g;
      params[a][i] -= learning_rate * (m_[a][i] / c1) / (std::sqrt(v_[a][i] / c2) + kAdamEps);
    }
  }
}

MemberSplit member_split(std::size_t n_samples, std::size_t n_features, const TrainConfig& config,
                         int member_index) {
  config.validate();
  if (n_samples < 8) {
    throw ValidationError("too few samples to split: " + std::to_string(n_samples) + " < 8");
  }
  Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(member_index)));
  std::vector<std::size_t> rows(n_samples);
  std::iota(rows.begin(), rows.end(), 0);
  rng.shuffle(rows);
  auto n_train = static_cast<std::size_t>(std::lround(config.member_fraction * static_cast<double>(n_samples)));
  n_train = std::clamp<std::size_t>(n_train, 1, n_samples - 1);
  MemberSplit s;
  s.train.assign(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.validation.assign(rows.begin() + static_cast<std::ptrdiff_t>(n_train), rows.end());
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.validation.begin(), s.validation.end());

  std::vector<std::size_t> features(n_features);
  std::iota(features.begin(), features.end(), 0);
  rng.shuffle(features);
  features.resize(config.feature_subset_size(n_features));
  std::sort(features.begin(), features.end());
  s.feature_mask = std::move(features);
  return s;
}

MemberTrainingResult train_mlp_member(const Dataset& data, const TrainConfig& config, int member_index) {
  data.validate();
  const Dataset rows = data.canonical_order();
  const MemberSplit split = member_split(rows.size(), rows.width(), config, member_index);

  std::vector<double> means(split.feature_mask.size(), 0.0);
  std::vector<double> stds(split.feature_mask.size(), 1.0);
  for (std::size_t j = 0; j < split.feature_mask.size(); ++j) {
    const std::size_t f = split.feature_mask[j];
    double sum = 0.0;
    for (std::size_t i : split.train) sum += rows.features[i][f];
    means[j] = sum / static_cast<double>(split.train.size());
    double ss = 0.0;
    for (std::size_t i : split.train) ss += (rows.features[i][f] - means[j]) * (rows.features[i][f] - means[j]);
    const double sd = std::sqrt(ss / static_cast<double>(split.train.size()));
    stds[j] = sd < 1e-12 ? 1.0 : sd;
  }

  // Second member stream: weight init, batch sampling and noise.
  Rng rng(derive_seed(derive_seed(config.seed, static_cast<std::uint64_t>(member_index)), 1));
  MemberTrainingResult result;
  result.model = init_mlp(split.feature_mask, std::move(means), std::move(stds), config.noise_sigma, rng);
  AdamOptimizer adam(result.model);

  std::vector<std::vector<double>> val_rows;
  std::vector<Diagnosis> val_labels;
  for (std::size_t i : split.validation) {
    val_rows.push_back(rows.features[i]);
    val_labels.push_back(rows.labels[i]);
  }

  MlpModel best = result.model;
  long best_correct = -1;
  int since_best = 0;
  const auto batch_size = static_cast<std::size_t>(config.batch_size);
  std::vector<std::vector<double>> batch(batch_size);
  std::vector<Diagnosis> targets(batch_size);
  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    const double lr = config.learning_rate * std::pow(config.lr_decay, epoch);
    for (int b = 0; b < config.batches_per_epoch; ++b) {
      for (std::size_t s = 0; s < batch_size; ++s) {
        const std::size_t i = split.train[rng.index(split.train.size())];
        batch[s] = rows.features[i];
        targets[s] = rows.labels[i];
      }
      const MlpBackwardResult g = mlp_backward(result.model, batch, targets, &rng);
      adam.step(result.model, g.gradients, lr);
      update_running_stats(result.model, g.batch_stats, batch_size);
    }
    result.epochs_run = epoch + 1;
    const auto correct = static_cast<long>(count_correct(result.model, val_rows, val_labels));
    if (correct > best_correct) {
      best_correct = correct;
      best = result.model;
      result.best_epoch = epoch + 1;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  result.model = std::move(best);
  result.best_validation_accuracy =
      static_cast<double>(best_correct) / static_cast<double>(split.validation.size());
  return result;
}

}  // namespace cardiac
