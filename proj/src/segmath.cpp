#include "cardiac/segmath.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cardiac/core_model.hpp"

namespace cardiac {

namespace {

void check_same_shape(const ClassMatrix& u, const ClassMatrix& v) {
  if (u.pixels != v.pixels || u.classes != v.classes ||
      u.values.size() != u.pixels * u.classes || v.values.size() != v.pixels * v.classes) {
    throw ValidationError("shape mismatch between prediction and target");
  }
  if (u.classes == 0) throw ValidationError("class set must not be empty");
}

struct DiceTerms {
  std::vector<double> intersection;  // N_k
  std::vector<double> denominator;   // D_k
};

DiceTerms dice_terms(const ClassMatrix& u, const ClassMatrix& v) {
  DiceTerms t{std::vector<double>(u.classes, 0.0), std::vector<double>(u.classes, 0.0)};
  for (std::size_t i = 0; i < u.pixels; ++i) {
    for (std::size_t k = 0; k < u.classes; ++k) {
      t.intersection[k] += u(i, k) * v(i, k);
      t.denominator[k] += u(i, k) + v(i, k);
    }
  }
  return t;
}

}  // namespace

SoftPrediction::SoftPrediction(ClassMatrix u) : u_(std::move(u)) {
  if (u_.values.size() != u_.pixels * u_.classes) throw ValidationError("prediction shape mismatch");
  for (std::size_t i = 0; i < u_.pixels; ++i) {
    double sum = 0.0;
    for (std::size_t k = 0; k < u_.classes; ++k) {
      const double p = u_(i, k);
      if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("soft prediction entry outside [0, 1]");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-6) throw ValidationError("soft prediction row does not sum to 1");
  }
}

OneHotTarget::OneHotTarget(ClassMatrix v) : v_(std::move(v)) {
  if (v_.values.size() != v_.pixels * v_.classes) throw ValidationError("target shape mismatch");
  for (std::size_t i = 0; i < v_.pixels; ++i) {
    int ones = 0;
    for (std::size_t k = 0; k < v_.classes; ++k) {
      const double x = v_(i, k);
      if (x == 1.0) {
        ++ones;
      } else if (x != 0.0) {
        throw ValidationError("one-hot target entries must be 0 or 1");
      }
    }
    if (ones != 1) throw ValidationError("one-hot target row must contain exactly one 1");
  }
}

OneHotTarget OneHotTarget::from_labels(std::span<const int> labels, std::size_t n_classes) {
  ClassMatrix v(labels.size(), n_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= n_classes) {
      throw ValidationError("label outside class range");
    }
    v(i, static_cast<std::size_t>(labels[i])) = 1.0;
  }
  return OneHotTarget(std::move(v));
}

ClassMatrix softmax(const ClassMatrix& logits) {
  ClassMatrix out(logits.pixels, logits.classes);
  for (std::size_t i = 0; i < logits.pixels; ++i) {
    double mx = logits(i, 0);
    for (std::size_t k = 1; k < logits.classes; ++k) mx = std::max(mx, logits(i, k));
    double sum = 0.0;
    for (std::size_t k = 0; k < logits.classes; ++k) {
      out(i, k) = std::exp(logits(i, k) - mx);
      sum += out(i, k);
    }
    for (std::size_t k = 0; k < logits.classes; ++k) out(i, k) /= sum;
  }
  return out;
}

double dice_loss(const ClassMatrix& u, const ClassMatrix& v) {
  check_same_shape(u, v);
  const DiceTerms t = dice_terms(u, v);
  double sum = 0.0;
  for (std::size_t k = 0; k < u.classes; ++k) {
    if (t.denominator[k] != 0.0) sum += t.intersection[k] / t.denominator[k];
  }
  return -2.0 / static_cast<double>(u.classes) * sum;
}

double dice_loss(const SoftPrediction& u, const OneHotTarget& v) {
  return dice_loss(u.matrix(), v.matrix());
}

ClassMatrix dice_loss_grad(const ClassMatrix& u, const ClassMatrix& v) {
  check_same_shape(u, v);
  const DiceTerms t = dice_terms(u, v);
  const double scale = -2.0 / static_cast<double>(u.classes);
  ClassMatrix g(u.pixels, u.classes);
  for (std::size_t k = 0; k < u.classes; ++k) {
    const double d = t.denominator[k];
    if (d == 0.0) continue;
    for (std::size_t i = 0; i < u.pixels; ++i) {
      g(i, k) = scale * (v(i, k) * d - t.intersection[k]) / (d * d);
    }
  }
  return g;
}

double cross_entropy(const ClassMatrix& u, const ClassMatrix& v) {
  check_same_shape(u, v);
  double sum = 0.0;
  for (std::size_t i = 0; i < u.pixels; ++i) {
    for (std::size_t k = 0; k < u.classes; ++k) {
      if (v(i, k) != 0.0) sum -= v(i, k) * std::log(std::max(u(i, k), kCrossEntropyClamp));
    }
  }
  return u.pixels == 0 ? 0.0 : sum / static_cast<double>(u.pixels);
}

ClassMatrix cross_entropy_grad(const ClassMatrix& u, const ClassMatrix& v) {
  check_same_shape(u, v);
  ClassMatrix g(u.pixels, u.classes);
  const double n = static_cast<double>(u.pixels);
  for (std::size_t i = 0; i < u.pixels; ++i) {
    for (std::size_t k = 0; k < u.classes; ++k) {
      if (v(i, k) != 0.0) g(i, k) = -v(i, k) / (n * std::max(u(i, k), kCrossEntropyClamp));
    }
  }
  return g;
}

void UNetSpec::validate() const {
  if (input_dims.size() != 2 && input_dims.size() != 3) {
    throw ValidationError("UNet input must be 2D or 3D");
  }
  if (initial_features < 1) throw ValidationError("initial feature maps must be >= 1");
  if (pooling_stages < 1) throw ValidationError("pooling stages must be >= 1");
  if (num_classes < 1) throw ValidationError("num_classes must be >= 1");
  const int factor = 1 << pooling_stages;
  for (std::size_t a = 0; a < input_dims.size(); ++a) {
    if (input_dims[a] < 1) throw ValidationError("UNet input dims must be positive");
    const bool pooled = a < 2 || !in_plane_only;
    if (pooled && input_dims[a] % factor != 0) {
      throw ValidationError("input dim " + std::to_string(input_dims[a]) +
                            " is not divisible by 2^" + std::to_string(pooling_stages));
    }
  }
}

std::vector<int> UNetShapes::feature_ladder() const {
  std::vector<int> ladder;
  for (const auto& s : encoder) ladder.push_back(s.features);
  ladder.push_back(bottleneck.features);
  return ladder;
}

UNetShapes unet_shapes(const UNetSpec& spec) {
  spec.validate();
  auto stage = [&spec](int level, int channels) {
    StageShape s;
    s.level = level;
    for (std::size_t a = 0; a < spec.input_dims.size(); ++a) {
      const bool pooled = a < 2 || !spec.in_plane_only;
      s.spatial.push_back(pooled ? spec.input_dims[a] >> level : spec.input_dims[a]);
    }
    s.features = channels;
    return s;
  };
  const int p = spec.pooling_stages;
  UNetShapes shapes;
  for (int level = 0; level < p; ++level) {
    shapes.encoder.push_back(stage(level, spec.initial_features << level));
  }
  shapes.bottleneck = stage(p, spec.initial_features << p);
  for (int level = p - 1; level >= 0; --level) {
    shapes.decoder.push_back(stage(level, spec.initial_features << level));
  }
  // The upscaling from level l to l-1 reads the decoder output at level l;
  // the last two upscalings start from levels 2 and 1.
  for (int level = std::min(2, p); level >= 1; --level) {
    shapes.deep_supervision.push_back(stage(level, spec.num_classes));
  }
  return shapes;
}

}  // namespace cardiac
