#include <doctest.h>

#include <cmath>
#include <set>

#include "cardiac/preprocess.hpp"
#include "cardiac/rng.hpp"
#include "oracles.hpp"

using namespace cardiac;

namespace {

ImageVolume ramp_image(Dims d, Spacing sp) {
  std::vector<double> v(d.voxels());
  for (int z = 0; z < d.nz; ++z)
    for (int y = 0; y < d.ny; ++y)
      for (int x = 0; x < d.nx; ++x) v[x + d.nx * (y + d.ny * z)] = 0.5 + 0.01 * x + 0.02 * y + 0.1 * z;
  return ImageVolume(d, sp, v);
}

ProbabilityVolume one_hot_probabilities(const LabelVolume& labels) {
  std::vector<double> p(labels.dims().voxels() * 4, 0.0);
  for (std::size_t i = 0; i < labels.data().size(); ++i) p[i * 4 + labels.data()[i]] = 1.0;
  return ProbabilityVolume(labels.dims(), labels.spacing(), p);
}

}  // namespace

TEST_CASE("resampled dims and spec validation") {
  CHECK(resampled_dims(Dims{100, 80, 10}, Spacing{1.25, 1.25, 10}, Spacing{2.5, 2.5, 10}) == Dims{50, 40, 10});
  CHECK(resampled_dims(Dims{10, 10, 3}, Spacing{1.0, 1.0, 10}, Spacing{1.25, 1.25, 10}) == Dims{8, 8, 3});
  CHECK_THROWS_AS(ResampleSpec({{0.0, 1.0, 1.0}}).validate(), ValidationError);
  const Spacing s = ResampleSpec::grid_2d().target_for(Spacing{1.5, 1.5, 7.0});
  CHECK(s.sx == 1.25);
  CHECK(s.sz == 7.0);
}

TEST_CASE("identity resampling returns the input") {
  const LabelVolume v = oracle::random_blobs(Dims{9, 7, 3}, Spacing{1.25, 1.25, 10}, Structure::LVM, 5);
  CHECK(resample_labels(v, ResampleSpec::grid_3d()) == v);
  const ProbabilityVolume p = one_hot_probabilities(v);
  const ProbabilityVolume q = resample_probabilities(p, ResampleSpec::grid_3d());
  CHECK(std::equal(p.data().begin(), p.data().end(), q.data().begin(), q.data().end()));
}

TEST_CASE("nearest-neighbour downsampling picks the covering source voxel") {
  LabelVolume v(Dims{4, 4, 1}, Spacing{1, 1, 1});
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) v.mutable_data()[v.index(x, y, 0)] = static_cast<std::uint8_t>((x / 2 + 2 * (y / 2)) % 4);
  const LabelVolume r = resample_labels(v, ResampleSpec{{2.0, 2.0, 1.0}});
  REQUIRE(r.dims() == Dims{2, 2, 1});
  // Target centre (i + 0.5) * 2 mm lies in source voxel floor((i + 0.5) * 2) = 1 or 3.
  CHECK(r.at(0, 0, 0) == v.at(1, 1, 0));
  CHECK(r.at(1, 0, 0) == v.at(3, 1, 0));
  CHECK(r.at(0, 1, 0) == v.at(1, 3, 0));
  CHECK(r.at(1, 1, 0) == v.at(3, 3, 0));
  std::set<int> codes(r.data().begin(), r.data().end());
  for (int c : codes) CHECK(c < 4);
}

TEST_CASE("trilinear probability resampling stays normalized") {
  const LabelVolume v = oracle::random_blobs(Dims{10, 10, 2}, Spacing{1, 1, 5}, Structure::LVC, 9, 0.4);
  const ProbabilityVolume p = one_hot_probabilities(v);
  const ProbabilityVolume q = resample_probabilities(p, ResampleSpec{{0.7, 1.3, std::nullopt}});
  CHECK(q.dims().nz == 2);
  for (std::size_t i = 0; i < q.dims().voxels(); ++i) {
    double s = 0;
    for (double x : q.voxel(i)) {
      CHECK(x >= 0.0);
      s += x;
    }
    CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("intensity normalization") {
  const ImageVolume img = ramp_image(Dims{5, 4, 3}, Spacing{});
  const ImageVolume n = normalize_intensity(img);
  const auto m = oracle::moments(n.data);
  CHECK(m.mean == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(m.stddev == doctest::Approx(1.0).epsilon(1e-9));
  const ImageVolume flat(Dims{2, 2, 1}, Spacing{}, {3, 3, 3, 3});
  for (double x : normalize_intensity(flat).data) CHECK(x == 0.0);
}

TEST_CASE("mirroring twice is the identity") {
  const LabelVolume v = oracle::random_blobs(Dims{7, 5, 2}, Spacing{}, Structure::RVC, 2);
  const LabelVolume mx = mirror(v, InPlaneAxis::X);
  CHECK(mx.at(0, 1, 1) == v.at(6, 1, 1));
  CHECK(mirror(mx, InPlaneAxis::X) == v);
  CHECK(mirror(mirror(v, InPlaneAxis::Y), InPlaneAxis::Y) == v);
}

TEST_CASE("neutral augmentation is the identity") {
  const Dims d{24, 20, 3};
  const ImageVolume img = ramp_image(d, Spacing{1.25, 1.25, 10});
  const LabelVolume lab = oracle::random_blobs(d, Spacing{1.25, 1.25, 10}, Structure::LVM, 4, 0.3);
  const auto [ai, al] = augment(img, lab, AugmentSpec::neutral(), 99);
  CHECK(al == lab);
  REQUIRE(ai.data.size() == img.data.size());
  for (std::size_t i = 0; i < img.data.size(); ++i) CHECK(ai.data[i] == doctest::Approx(img.data[i]).epsilon(1e-12));
}

TEST_CASE("augmentation is deterministic and label-preserving") {
  const Dims d{32, 32, 2};
  const Spacing sp{1.25, 1.25, 10};
  const ImageVolume img = ramp_image(d, sp);
  oracle::RingPhantom ring;
  ring.n = 32;
  ring.nz = 2;
  ring.cx_mm = ring.cy_mm = 16;
  ring.r_in = 6;
  ring.r_out = 9;
  ring.rv_extent = 4;
  const LabelVolume lab = ring.build();
  const auto a = augment(img, LabelVolume(d, sp, std::vector<std::uint8_t>(lab.data().begin(), lab.data().end())),
                         AugmentSpec{}, 17);
  const auto b = augment(img, LabelVolume(d, sp, std::vector<std::uint8_t>(lab.data().begin(), lab.data().end())),
                         AugmentSpec{}, 17);
  CHECK(a.second == b.second);
  CHECK(a.first.data == b.first.data);
  for (auto c : a.second.data()) CHECK(c < 4);
  const auto other = augment(img, lab, AugmentSpec{}, 18);
  CHECK_FALSE(other.first.data == a.first.data);
}

TEST_CASE("motion offsets follow the requested distribution") {
  const auto offsets = motion_offsets(10000, 0.1, 20.0, 1234);
  std::vector<double> comp;
  int perturbed = 0;
  for (const auto& o : offsets) {
    if (!o.perturbed) {
      CHECK(o.dx == 0);
      CHECK(o.dy == 0);
      continue;
    }
    ++perturbed;
    comp.push_back(o.dx);
    comp.push_back(o.dy);
  }
  CHECK(perturbed / 10000.0 == doctest::Approx(0.1).epsilon(0.2));
  CHECK(oracle::moments(comp).stddev == doctest::Approx(20.0).epsilon(0.05));
  CHECK(motion_offsets(50, 0.5, 3.0, 1).size() == 50);
}

TEST_CASE("motion augmentation shifts whole slices") {
  const LabelVolume lab = oracle::random_blobs(Dims{16, 16, 40}, Spacing{}, Structure::LVC, 8, 0.3);
  const auto offsets = motion_offsets(40, 0.5, 3.0, 21);
  const LabelVolume moved = motion_augment(lab, 0.5, 3.0, 21);
  for (int z = 0; z < 40; ++z) {
    const auto& o = offsets[static_cast<std::size_t>(z)];
    for (int y = 0; y < 16; ++y)
      for (int x = 0; x < 16; ++x) {
        const int sx = x - o.dx, sy = y - o.dy;
        const std::uint8_t expect = lab.contains(sx, sy, z) ? lab.at(sx, sy, z) : 0;
        CHECK(moved.at(x, y, z) == expect);
      }
  }
  CHECK(motion_augment(lab, 0.0, 20.0, 5) == lab);
}

TEST_CASE("probability ensembling") {
  const Dims d{2, 1, 1};
  const ProbabilityVolume a(d, Spacing{}, {0.7, 0.1, 0.1, 0.1, 0.25, 0.25, 0.25, 0.25});
  const ProbabilityVolume b(d, Spacing{}, {0.1, 0.7, 0.1, 0.1, 0.25, 0.25, 0.25, 0.25});
  const ProbabilityVolume c(d, Spacing{}, {0.3, 0.3, 0.2, 0.2, 0.1, 0.2, 0.3, 0.4});
  const auto abc = average_probabilities({a, b, c});
  const auto cab = average_probabilities({c, a, b});
  CHECK(std::equal(abc.data().begin(), abc.data().end(), cab.data().begin()));
  CHECK(abc.voxel(0)[0] == doctest::Approx(1.1 / 3));
  const LabelVolume l = ensemble_probabilities({a, b});
  CHECK(l.at(0, 0, 0) == 0);  // tie 0.4 / 0.4 -> lower code
  CHECK(l.at(1, 0, 0) == 0);  // four-way tie -> BG
  CHECK(argmax_labels(c).at(1, 0, 0) == 3);
}
