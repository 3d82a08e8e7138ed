#include <doctest.h>

#include <cmath>
#include <random>

#include "cardiac/segmath.hpp"
#include "oracles.hpp"

using namespace cardiac;

namespace {

ClassMatrix random_logits(std::size_t n, std::size_t k, std::mt19937_64& gen) {
  std::normal_distribution<double> g(0.0, 2.0);
  ClassMatrix m(n, k);
  for (double& x : m.values) x = g(gen);
  return m;
}

ClassMatrix random_one_hot(std::size_t n, std::size_t k, std::mt19937_64& gen) {
  std::uniform_int_distribution<std::size_t> pick(0, k - 1);
  ClassMatrix m(n, k);
  for (std::size_t i = 0; i < n; ++i) m(i, pick(gen)) = 1.0;
  return m;
}

// Straight transcription of the loss definition, one class at a time.
double reference_dice(const ClassMatrix& u, const ClassMatrix& v) {
  double total = 0.0;
  for (std::size_t k = 0; k < u.classes; ++k) {
    double num = 0.0, su = 0.0, sv = 0.0;
    for (std::size_t i = 0; i < u.pixels; ++i) {
      num += u(i, k) * v(i, k);
      su += u(i, k);
      sv += v(i, k);
    }
    if (su + sv > 0.0) total += num / (su + sv);
  }
  return -2.0 / static_cast<double>(u.classes) * total;
}

}  // namespace

TEST_CASE("dice loss of a perfect one-hot prediction is exactly -1") {
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 20; ++trial) {
    const ClassMatrix v = random_one_hot(50, 4, gen);
    CHECK(dice_loss(v, v) == -1.0);
  }
  const std::vector<int> labels{0, 1, 2, 3, 3, 2};
  const OneHotTarget t = OneHotTarget::from_labels(labels, 4);
  CHECK(dice_loss(SoftPrediction(t.matrix()), t) == -1.0);
}

TEST_CASE("dice loss stays in [-1, 0] and matches the reference") {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 200; ++trial) {
    const ClassMatrix u = softmax(random_logits(30, 4, gen));
    const ClassMatrix v = random_one_hot(30, 4, gen);
    const double l = dice_loss(u, v);
    CHECK(l >= -1.0);
    CHECK(l <= 0.0);
    CHECK(l == doctest::Approx(reference_dice(u, v)).epsilon(1e-12));
  }
}

TEST_CASE("absent class contributes zero") {
  ClassMatrix u(2, 2), v(2, 2);
  u(0, 0) = u(1, 0) = 1.0;
  v(0, 0) = v(1, 0) = 1.0;
  CHECK(dice_loss(u, v) == -0.5);
  const ClassMatrix g = dice_loss_grad(u, v);
  CHECK(g(0, 1) == 0.0);
}

TEST_CASE("softmax rows") {
  std::mt19937_64 gen(5);
  ClassMatrix logits = random_logits(10, 4, gen);
  logits(0, 0) = 800.0;  // overflow-safe
  const ClassMatrix p = softmax(logits);
  for (std::size_t i = 0; i < p.pixels; ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < 4; ++k) {
      CHECK(p(i, k) >= 0.0);
      CHECK(p(i, k) <= 1.0);
      s += p(i, k);
    }
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(p(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("prediction and target invariants are enforced") {
  ClassMatrix bad(1, 2);
  bad(0, 0) = 0.7;
  bad(0, 1) = 0.7;
  CHECK_THROWS_AS(SoftPrediction{bad}, ValidationError);
  CHECK_THROWS_AS(OneHotTarget{bad}, ValidationError);
  ClassMatrix two(1, 2, 1.0);
  CHECK_THROWS_AS(OneHotTarget{two}, ValidationError);
  const std::vector<int> out_of_range{0, 4};
  CHECK_THROWS_AS(OneHotTarget::from_labels(out_of_range, 4), ValidationError);
}

TEST_CASE("dice gradient matches central differences") {
  std::mt19937_64 gen(21);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    ClassMatrix u = softmax(random_logits(12, 4, gen));
    const ClassMatrix v = random_one_hot(12, 4, gen);
    const ClassMatrix g = dice_loss_grad(u, v);
    const auto numeric = oracle::central_difference(u.values, [&] { return dice_loss(u, v); });
    for (std::size_t i = 0; i < numeric.size(); ++i)
      worst = std::max(worst, oracle::relative_error(g.values[i], numeric[i], 1e-6));
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("cross-entropy and its gradient") {
  ClassMatrix u(2, 2), v(2, 2);
  u(0, 0) = 0.25;
  u(0, 1) = 0.75;
  u(1, 0) = 0.5;
  u(1, 1) = 0.5;
  v(0, 1) = 1.0;
  v(1, 0) = 1.0;
  CHECK(cross_entropy(u, v) == doctest::Approx(-(std::log(0.75) + std::log(0.5)) / 2.0));
  u(0, 1) = 0.0;
  CHECK(cross_entropy(u, v) == doctest::Approx((-std::log(kCrossEntropyClamp) - std::log(0.5)) / 2.0));

  std::mt19937_64 gen(8);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    ClassMatrix p = softmax(random_logits(9, 4, gen));
    const ClassMatrix t = random_one_hot(9, 4, gen);
    const ClassMatrix g = cross_entropy_grad(p, t);
    const auto numeric = oracle::central_difference(p.values, [&] { return cross_entropy(p, t); }, 1e-7);
    for (std::size_t i = 0; i < numeric.size(); ++i)
      worst = std::max(worst, oracle::relative_error(g.values[i], numeric[i], 1e-6));
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("U-Net shape ladder") {
  UNetSpec spec;
  spec.input_dims = {224, 224, 10};
  const UNetShapes s = unet_shapes(spec);
  CHECK(s.feature_ladder() == std::vector<int>{26, 52, 104, 208, 416});
  CHECK(s.bottleneck.spatial == std::vector<int>{14, 14, 10});
  CHECK(s.bottleneck.level == 4);
  REQUIRE(s.encoder.size() == 4);
  CHECK(s.encoder[0].spatial == std::vector<int>{224, 224, 10});
  CHECK(s.encoder[3].spatial == std::vector<int>{28, 28, 10});
  REQUIRE(s.decoder.size() == 4);
  CHECK(s.decoder.back().spatial == std::vector<int>{224, 224, 10});
  CHECK(s.decoder.back().features == 26);
  REQUIRE(s.deep_supervision.size() == 2);
  for (const auto& d : s.deep_supervision) CHECK(d.features == 4);

  UNetSpec flat;
  flat.input_dims = {224, 224};
  CHECK(unet_shapes(flat).bottleneck.spatial == std::vector<int>{14, 14});

  UNetSpec iso;
  iso.input_dims = {64, 64, 32};
  iso.in_plane_only = false;
  CHECK(unet_shapes(iso).bottleneck.spatial == std::vector<int>{4, 4, 2});

  UNetSpec odd;
  odd.input_dims = {100, 100, 10};
  CHECK_THROWS_AS(unet_shapes(odd), ValidationError);
}
