#include "cardiac/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cardiac/rng.hpp"

namespace cardiac {

namespace {

constexpr double kNormalizeEps = 1e-8;

struct AxisMap {
  int out_size = 0;
  double ratio = 1.0;  // target / original spacing
  int in_size = 0;

  // Continuous source index of output voxel i on the voxel-centre grid.
  double source(int i) const { return (i + 0.5) * ratio - 0.5; }
  int nearest(int i) const {
    const auto v = static_cast<int>(std::floor((i + 0.5) * ratio));
    return std::clamp(v, 0, in_size - 1);
  }
};

std::array<AxisMap, 3> axis_maps(const Dims& in, const Spacing& from, const Spacing& to) {
  const Dims out = resampled_dims(in, from, to);
  return {AxisMap{out.nx, to.sx / from.sx, in.nx}, AxisMap{out.ny, to.sy / from.sy, in.ny},
          AxisMap{out.nz, to.sz / from.sz, in.nz}};
}

struct LinearTap {
  int i0 = 0;
  int i1 = 0;
  double w1 = 0.0;
};

LinearTap linear_tap(double c, int n) {
  c = std::clamp(c, 0.0, static_cast<double>(n - 1));
  LinearTap tap;
  tap.i0 = static_cast<int>(std::floor(c));
  tap.w1 = c - tap.i0;
  tap.i1 = std::min(tap.i0 + 1, n - 1);
  return tap;
}

double bilinear(const ImageVolume& img, double x, double y, int z) {
  const LinearTap tx = linear_tap(x, img.dims.nx);
  const LinearTap ty = linear_tap(y, img.dims.ny);
  const double v00 = img.data[img.index(tx.i0, ty.i0, z)];
  const double v10 = img.data[img.index(tx.i1, ty.i0, z)];
  const double v01 = img.data[img.index(tx.i0, ty.i1, z)];
  const double v11 = img.data[img.index(tx.i1, ty.i1, z)];
  const double top = v00 * (1.0 - tx.w1) + v10 * tx.w1;
  const double bottom = v01 * (1.0 - tx.w1) + v11 * tx.w1;
  return top * (1.0 - ty.w1) + bottom * ty.w1;
}

double cubic_bspline(int i, double t) {
  switch (i) {
    case 0: return (1.0 - t) * (1.0 - t) * (1.0 - t) / 6.0;
    case 1: return (3.0 * t * t * t - 6.0 * t * t + 4.0) / 6.0;
    case 2: return (-3.0 * t * t * t + 3.0 * t * t + 3.0 * t + 1.0) / 6.0;
    default: return t * t * t / 6.0;
  }
}

/// Smooth in-plane displacement field from a cubic B-spline control grid.
class ElasticField {
 public:
  ElasticField(int nx, int ny, double grid_spacing, double sigma, Rng& rng)
      : spacing_(grid_spacing),
        cx_(static_cast<int>(std::ceil((nx - 1) / grid_spacing)) + 4),
        cy_(static_cast<int>(std::ceil((ny - 1) / grid_spacing)) + 4),
        dx_(static_cast<std::size_t>(cx_) * cy_),
        dy_(dx_.size()) {
    for (std::size_t i = 0; i < dx_.size(); ++i) {
      dx_[i] = rng.normal(0.0, sigma);
      dy_[i] = rng.normal(0.0, sigma);
    }
  }

  std::pair<double, double> at(double x, double y) const {
    const double u = x / spacing_ + 1.0;
    const double v = y / spacing_ + 1.0;
    const int i0 = static_cast<int>(std::floor(u));
    const int j0 = static_cast<int>(std::floor(v));
    const double fu = u - i0;
    const double fv = v - j0;
    double ox = 0.0, oy = 0.0;
    for (int b = 0; b < 4; ++b) {
      const int j = std::clamp(j0 - 1 + b, 0, cy_ - 1);
      const double wv = cubic_bspline(b, fv);
      for (int a = 0; a < 4; ++a) {
        const int i = std::clamp(i0 - 1 + a, 0, cx_ - 1);
        const double w = wv * cubic_bspline(a, fu);
        ox += w * dx_[static_cast<std::size_t>(j) * cx_ + i];
        oy += w * dy_[static_cast<std::size_t>(j) * cx_ + i];
      }
    }
    return {ox, oy};
  }

 private:
  double spacing_;
  int cx_;
  int cy_;
  std::vector<double> dx_;
  std::vector<double> dy_;
};

template <typename Volume, typename Get, typename Put>
void shift_slices(const Volume& in, Volume& out, const Dims& d, const std::vector<SliceOffset>& offsets,
                  Get get, Put put) {
  for (int z = 0; z < d.nz; ++z) {
    const SliceOffset& o = offsets[z];
    for (int y = 0; y < d.ny; ++y) {
      for (int x = 0; x < d.nx; ++x) {
        put(out, x, y, z, get(in, x - o.dx, y - o.dy, z));
      }
    }
  }
}

}  // namespace

void ResampleSpec::validate() const {
  bool any = false;
  for (const auto& t : target) {
    if (!t) continue;
    any = true;
    if (!(std::isfinite(*t) && *t > 0.0)) throw ValidationError("resample target must be positive");
  }
  if (!any) throw ValidationError("resample spec must fix at least one axis");
}

Spacing ResampleSpec::target_for(const Spacing& original) const {
  validate();
  return Spacing{target[0].value_or(original.sx), target[1].value_or(original.sy),
                 target[2].value_or(original.sz)};
}

Dims resampled_dims(const Dims& dims, const Spacing& original, const Spacing& target) {
  auto axis = [](int n, double from, double to) {
    return std::max(1, static_cast<int>(std::lround(n * from / to)));
  };
  return Dims{axis(dims.nx, original.sx, target.sx), axis(dims.ny, original.sy, target.sy),
              axis(dims.nz, original.sz, target.sz)};
}

LabelVolume resample_labels(const LabelVolume& volume, const ResampleSpec& spec) {
  const Spacing target = spec.target_for(volume.spacing());
  const auto maps = axis_maps(volume.dims(), volume.spacing(), target);
  const Dims out_dims{maps[0].out_size, maps[1].out_size, maps[2].out_size};
  LabelVolume out(out_dims, target);
  auto data = out.mutable_data();
  std::size_t o = 0;
  for (int z = 0; z < out_dims.nz; ++z) {
    const int sz = maps[2].nearest(z);
    for (int y = 0; y < out_dims.ny; ++y) {
      const int sy = maps[1].nearest(y);
      for (int x = 0; x < out_dims.nx; ++x) {
        data[o++] = volume.at(maps[0].nearest(x), sy, sz);
      }
    }
  }
  return out;
}

ProbabilityVolume resample_probabilities(const ProbabilityVolume& volume, const ResampleSpec& spec) {
  const Spacing target = spec.target_for(volume.spacing());
  if (target == volume.spacing()) return volume;
  const Dims in = volume.dims();
  const auto maps = axis_maps(in, volume.spacing(), target);
  const Dims out_dims{maps[0].out_size, maps[1].out_size, maps[2].out_size};
  std::vector<double> data(out_dims.voxels() * kNumLabels);
  const auto src = volume.data();
  auto in_index = [&in](int x, int y, int z) {
    return (static_cast<std::size_t>(z) * in.ny + y) * in.nx + x;
  };
  std::size_t o = 0;
  for (int z = 0; z < out_dims.nz; ++z) {
    const LinearTap tz = linear_tap(maps[2].source(z), in.nz);
    for (int y = 0; y < out_dims.ny; ++y) {
      const LinearTap ty = linear_tap(maps[1].source(y), in.ny);
      for (int x = 0; x < out_dims.nx; ++x, ++o) {
        const LinearTap tx = linear_tap(maps[0].source(x), in.nx);
        double* dst = &data[o * kNumLabels];
        double sum = 0.0;
        for (int k = 0; k < kNumLabels; ++k) {
          double acc = 0.0;
          for (int c = 0; c < 8; ++c) {
            const int xi = (c & 1) ? tx.i1 : tx.i0;
            const int yi = (c & 2) ? ty.i1 : ty.i0;
            const int zi = (c & 4) ? tz.i1 : tz.i0;
            const double w = ((c & 1) ? tx.w1 : 1.0 - tx.w1) * ((c & 2) ? ty.w1 : 1.0 - ty.w1) *
                             ((c & 4) ? tz.w1 : 1.0 - tz.w1);
            acc += w * src[in_index(xi, yi, zi) * kNumLabels + k];
          }
          dst[k] = acc;
          sum += acc;
        }
        for (int k = 0; k < kNumLabels; ++k) dst[k] /= sum;
      }
    }
  }
  return ProbabilityVolume(out_dims, target, std::move(data));
}

ImageVolume normalize_intensity(const ImageVolume& image) {
  if (image.data.empty()) throw ValidationError("cannot normalize an empty volume");
  const double n = static_cast<double>(image.data.size());
  double mean = 0.0;
  for (double v : image.data) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : image.data) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / n);
  ImageVolume out = image;
  if (!(sd > kNormalizeEps)) {
    std::fill(out.data.begin(), out.data.end(), 0.0);
    return out;
  }
  for (double& v : out.data) v = (v - mean) / sd;
  return out;
}

void AugmentSpec::validate() const {
  if (!(rotation_max_deg >= 0.0)) throw ValidationError("rotation range must be >= 0");
  if (!(gamma_min > 0.0 && gamma_max >= gamma_min)) throw ValidationError("gamma range must be positive");
  if (!(elastic_sigma >= 0.0)) throw ValidationError("elastic sigma must be >= 0");
  if (!(elastic_grid_spacing > 0.0)) throw ValidationError("elastic grid spacing must be > 0");
  if (!(motion_probability >= 0.0 && motion_probability <= 1.0)) {
    throw ValidationError("motion probability must lie in [0, 1]");
  }
  if (!(motion_sigma >= 0.0)) throw ValidationError("motion sigma must be >= 0");
}

AugmentSpec AugmentSpec::neutral() {
  AugmentSpec s;
  s.mirror_x = false;
  s.mirror_y = false;
  s.rotation_max_deg = 0.0;
  s.gamma_min = 1.0;
  s.gamma_max = 1.0;
  s.elastic_sigma = 0.0;
  s.motion_probability = 0.0;
  return s;
}

LabelVolume mirror(const LabelVolume& labels, InPlaneAxis axis) {
  const Dims d = labels.dims();
  LabelVolume out(d, labels.spacing());
  auto data = out.mutable_data();
  for (int z = 0; z < d.nz; ++z) {
    for (int y = 0; y < d.ny; ++y) {
      for (int x = 0; x < d.nx; ++x) {
        const int sx = axis == InPlaneAxis::X ? d.nx - 1 - x : x;
        const int sy = axis == InPlaneAxis::Y ? d.ny - 1 - y : y;
        data[labels.index(x, y, z)] = labels.at(sx, sy, z);
      }
    }
  }
  return out;
}

ImageVolume mirror(const ImageVolume& image, InPlaneAxis axis) {
  const Dims d = image.dims;
  ImageVolume out = image;
  for (int z = 0; z < d.nz; ++z) {
    for (int y = 0; y < d.ny; ++y) {
      for (int x = 0; x < d.nx; ++x) {
        const int sx = axis == InPlaneAxis::X ? d.nx - 1 - x : x;
        const int sy = axis == InPlaneAxis::Y ? d.ny - 1 - y : y;
        out.data[image.index(x, y, z)] = image.data[image.index(sx, sy, z)];
      }
    }
  }
  return out;
}

std::pair<ImageVolume, LabelVolume> augment(const ImageVolume& image, const LabelVolume& labels,
                                            const AugmentSpec& spec, std::uint64_t seed) {
  spec.validate();
  const Dims d = labels.dims();
  if (image.dims != d) throw ValidationError("image and label dims differ");

  Rng rng(seed);
  const bool flip_x = spec.mirror_x && rng.bernoulli(0.5);
  const bool flip_y = spec.mirror_y && rng.bernoulli(0.5);
  const double angle =
      spec.rotation_max_deg > 0.0 ? rng.uniform(-spec.rotation_max_deg, spec.rotation_max_deg) : 0.0;
  const double gamma =
      spec.gamma_max > spec.gamma_min ? rng.uniform(spec.gamma_min, spec.gamma_max) : spec.gamma_min;
  std::optional<ElasticField> elastic;
  if (spec.elastic_sigma > 0.0) {
    elastic.emplace(d.nx, d.ny, spec.elastic_grid_spacing, spec.elastic_sigma, rng);
  }

  const double theta = angle * std::numbers::pi / 180.0;
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const double cx = (d.nx - 1) / 2.0;
  const double cy = (d.ny - 1) / 2.0;

  // In-plane source coordinate for every output pixel, shared by all slices.
  std::vector<std::pair<double, double>> source(d.slice_pixels());
  for (int y = 0; y < d.ny; ++y) {
    for (int x = 0; x < d.nx; ++x) {
      double px = x, py = y;
      if (elastic) {
        const auto [ox, oy] = elastic->at(px, py);
        px += ox;
        py += oy;
      }
      // Inverse rotation about the slice centre.
      double qx = cx + c * (px - cx) + s * (py - cy);
      double qy = cy - s * (px - cx) + c * (py - cy);
      if (flip_x) qx = (d.nx - 1) - qx;
      if (flip_y) qy = (d.ny - 1) - qy;
      source[static_cast<std::size_t>(y) * d.nx + x] = {qx, qy};
    }
  }

  ImageVolume out_image = image;
  LabelVolume out_labels(d, labels.spacing());
  auto label_data = out_labels.mutable_data();
  for (int z = 0; z < d.nz; ++z) {
    for (int y = 0; y < d.ny; ++y) {
      for (int x = 0; x < d.nx; ++x) {
        const auto [qx, qy] = source[static_cast<std::size_t>(y) * d.nx + x];
        const std::size_t o = labels.index(x, y, z);
        out_image.data[o] = bilinear(image, qx, qy, z);
        const auto nx = static_cast<int>(std::lround(qx));
        const auto ny = static_cast<int>(std::lround(qy));
        label_data[o] = labels.contains(nx, ny, z) ? labels.at(nx, ny, z) : code(Structure::BG);
      }
    }
  }

  if (gamma != 1.0) {
    const auto [lo_it, hi_it] = std::minmax_element(out_image.data.begin(), out_image.data.end());
    const double lo = *lo_it;
    const double range = *hi_it - lo;
    if (range > 0.0) {
      for (double& v : out_image.data) v = std::pow((v - lo) / range, gamma) * range + lo;
    }
  }
  return {std::move(out_image), std::move(out_labels)};
}

std::vector<SliceOffset> motion_offsets(int n_slices, double p, double sigma, std::uint64_t seed) {
  if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("motion probability must lie in [0, 1]");
  if (!(sigma >= 0.0)) throw ValidationError("motion sigma must be >= 0");
  Rng rng(seed);
  std::vector<SliceOffset> offsets(static_cast<std::size_t>(n_slices));
  for (auto& o : offsets) {
    if (!rng.bernoulli(p)) continue;
    o.perturbed = true;
    o.dx = static_cast<int>(std::lround(rng.normal(0.0, sigma)));
    o.dy = static_cast<int>(std::lround(rng.normal(0.0, sigma)));
  }
  return offsets;
}

LabelVolume motion_augment(const LabelVolume& labels, double p, double sigma, std::uint64_t seed) {
  const Dims d = labels.dims();
  const auto offsets = motion_offsets(d.nz, p, sigma, seed);
  LabelVolume out(d, labels.spacing());
  shift_slices(
      labels, out, d, offsets,
      [](const LabelVolume& v, int x, int y, int z) {
        return v.contains(x, y, z) ? v.at(x, y, z) : code(Structure::BG);
      },
      [](LabelVolume& v, int x, int y, int z, std::uint8_t value) {
        v.mutable_data()[v.index(x, y, z)] = value;
      });
  return out;
}

ImageVolume motion_augment(const ImageVolume& image, double p, double sigma, std::uint64_t seed) {
  const Dims d = image.dims;
  const auto offsets = motion_offsets(d.nz, p, sigma, seed);
  ImageVolume out = image;
  shift_slices(
      image, out, d, offsets,
      [&d](const ImageVolume& v, int x, int y, int z) {
        x = std::clamp(x, 0, d.nx - 1);
        y = std::clamp(y, 0, d.ny - 1);
        return v.data[v.index(x, y, z)];
      },
      [](ImageVolume& v, int x, int y, int z, double value) { v.data[v.index(x, y, z)] = value; });
  return out;
}

ProbabilityVolume average_probabilities(const std::vector<ProbabilityVolume>& maps) {
  if (maps.empty()) throw ValidationError("need at least one probability map");
  const Dims d = maps.front().dims();
  for (const auto& m : maps) {
    if (m.dims() != d) throw ValidationError("probability map dimension mismatch");
  }
  const std::size_t n = d.voxels() * kNumLabels;
  std::vector<double> data(n);
  std::vector<double> column(maps.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t m = 0; m < maps.size(); ++m) column[m] = maps[m].data()[i];
    std::sort(column.begin(), column.end());
    double sum = 0.0;
    for (double v : column) sum += v;
    data[i] = sum / static_cast<double>(maps.size());
  }
  return ProbabilityVolume(d, maps.front().spacing(), std::move(data));
}

LabelVolume argmax_labels(const ProbabilityVolume& map) {
  LabelVolume out(map.dims(), map.spacing());
  auto data = out.mutable_data();
  for (std::size_t v = 0; v < map.dims().voxels(); ++v) {
    const auto p = map.voxel(v);
    int best = 0;
    for (int k = 1; k < kNumLabels; ++k) {
      if (p[k] > p[best]) best = k;
    }
    data[v] = static_cast<std::uint8_t>(best);
  }
  return out;
}

LabelVolume ensemble_probabilities(const std::vector<ProbabilityVolume>& maps) {
  return argmax_labels(average_probabilities(maps));
}

}  // namespace cardiac
