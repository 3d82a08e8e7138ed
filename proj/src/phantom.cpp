#include "cardiac/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

#include "cardiac/classify_types.hpp"
#include "cardiac/rng.hpp"

namespace cardiac {

namespace {

constexpr double kPi = std::numbers::pi;

constexpr std::array<double, kPhantomParameters> kBaseMean = {25.0, 9.0, 0.62, 12.0, 0.55, 0.0};
constexpr std::array<double, kPhantomParameters> kBaseSigma = {1.5, 1.0, 0.03, 1.5, 0.03, 0.5};

// Class offsets in units of separation * sigma; rows follow kAllDiagnoses.
constexpr std::array<std::array<double, kPhantomParameters>, kNumClasses> kClassOffsets = {{
    {0.0, 0.0, 0.0, 0.0, 0.0, 0.0},    // NOR
    {1.0, 0.0, -2.0, 0.0, 0.0, 3.0},   // MINF: lower EF, thinned sector
    {2.0, 0.0, -4.0, 0.0, 0.0, 0.0},   // DCM: dilated, low EF
    {-0.5, 2.5, 1.0, 0.0, 0.0, 0.0},   // HCM: thick wall
    {0.0, 0.0, 0.0, 2.0, -3.0, 0.0},   // ARV: enlarged, hypokinetic RV
}};

// Base plane between slices 0 and 1.
constexpr int kBaseSlice = 1;

struct Layout {
  int cx = 0;
  int cy = 0;
  double z_base = 0.0;
};

Layout layout(const PhantomSpec& spec) {
  return Layout{static_cast<int>(std::lround(0.6 * (spec.dims.nx - 1))), (spec.dims.ny - 1) / 2,
                (kBaseSlice - 0.5) * spec.spacing.sz};
}

double cycle_factor(double ef, std::size_t t, int frames) {
  return 1.0 - ef * (1.0 - std::cos(2.0 * kPi * static_cast<double>(t) / frames)) / 2.0;
}

// Integral of R(z) = R0 * sqrt(1 - (z / C)^2) over [0, h].
double radius_integral(double r0, double c, double h) {
  const double u = h / c;
  return r0 * c * (u * std::sqrt(1.0 - u * u) + std::asin(u)) / 2.0;
}

// Crescent volume (mm^3) for radial extent d.
double crescent_volume(double alpha, double integral, double h, double d) {
  return alpha * d * integral + alpha / 2.0 * d * d * h;
}

double crescent_extent(double alpha, double integral, double h, double volume) {
  return (-alpha * integral + std::sqrt(alpha * alpha * integral * integral + 2.0 * alpha * h * volume)) /
         (alpha * h);
}

}  // namespace

ParameterDistribution class_distribution(Diagnosis d, double separation) {
  if (!(separation >= 0.0)) throw ValidationError("class separation must be >= 0");
  ParameterDistribution p;
  const auto& offsets = kClassOffsets[static_cast<std::size_t>(diagnosis_index(d))];
  for (std::size_t i = 0; i < kPhantomParameters; ++i) {
    p.sigma[i] = kBaseSigma[i];
    p.mean[i] = kBaseMean[i] + separation * offsets[i] * kBaseSigma[i];
  }
  return p;
}

double class_separation(double separation) {
  double worst = std::numeric_limits<double>::infinity();
  for (Diagnosis a : kAllDiagnoses) {
    for (Diagnosis b : kAllDiagnoses) {
      if (diagnosis_index(a) >= diagnosis_index(b)) continue;
      const auto pa = class_distribution(a, separation);
      const auto pb = class_distribution(b, separation);
      double best = 0.0;
      for (std::size_t i = 0; i < kPhantomParameters; ++i) {
        best = std::max(best, std::abs(pa.mean[i] - pb.mean[i]) / pa.sigma[i]);
      }
      worst = std::min(worst, best);
    }
  }
  return worst;
}

void PhantomGeometry::validate() const {
  if (!(lv_radius > 0.0 && lv_length > 0.0)) throw ValidationError("phantom radii must be positive");
  if (!(wall > 0.0)) throw ValidationError("phantom wall thickness must be positive");
  if (!(thinning >= 0.0 && thinning < wall)) throw ValidationError("wall thinning must lie in [0, wall)");
  if (!(lv_ef >= 0.0 && lv_ef < 1.0) || !(rv_ef >= 0.0 && rv_ef < 1.0)) {
    throw ValidationError("phantom ejection fractions must lie in [0, 1)");
  }
  if (!(rv_extent > 0.0)) throw ValidationError("RV extent must be positive");
  if (!(rv_angle_deg > 0.0 && infarct_angle_deg > 0.0 && rv_angle_deg + infarct_angle_deg <= 360.0)) {
    throw ValidationError("RV and infarct sectors must be positive and must not overlap");
  }
  if (!(rv_height_fraction > 0.0 && rv_height_fraction <= 1.0)) {
    throw ValidationError("RV height fraction must lie in (0, 1]");
  }
  if (!(height_cm > 50.0 && height_cm < 250.0 && weight_kg > 10.0 && weight_kg < 300.0)) {
    throw ValidationError("phantom body size out of range");
  }
}

void PhantomSpec::validate() const {
  if (dims.nx < 8 || dims.ny < 8 || dims.nz < 4) throw ValidationError("phantom grid too small");
  spacing.validate();
  if (frames < 2) throw ValidationError("phantom needs at least 2 frames");
  if (!(separation >= 0.0)) throw ValidationError("class separation must be >= 0");
}

PhantomSpec PhantomSpec::fine() {
  PhantomSpec s;
  s.dims = Dims{144, 144, 96};
  s.spacing = Spacing{1.0, 1.0, 1.0};
  return s;
}

PhantomGeometry draw_geometry(const PhantomSpec& spec, Diagnosis d, std::uint64_t seed) {
  const ParameterDistribution dist = class_distribution(d, spec.separation);
  Rng rng(seed);
  std::array<double, kPhantomParameters> v{};
  for (std::size_t i = 0; i < kPhantomParameters; ++i) v[i] = rng.normal(dist.mean[i], dist.sigma[i]);
  PhantomGeometry g;
  g.lv_radius = std::max(v[0], 5.0);
  g.wall = std::max(v[1], 3.0);
  g.lv_ef = std::clamp(v[2], 0.05, 0.9);
  g.rv_extent = std::max(v[3], 3.0);
  g.rv_ef = std::clamp(v[4], 0.05, 0.9);
  g.thinning = std::clamp(v[5], 0.0, g.wall - 1.0);
  g.height_cm = std::clamp(rng.normal(172.0, 8.0), 130.0, 215.0);
  g.weight_kg = std::clamp(rng.normal(75.0, 10.0), 40.0, 140.0);
  return g;
}

PhantomCase render_phantom(const PhantomSpec& spec, const PhantomGeometry& g, const std::string& id,
                           std::optional<Diagnosis> diagnosis) {
  spec.validate();
  g.validate();
  const Dims dims = spec.dims;
  const Spacing sp = spec.spacing;
  const Layout lay = layout(spec);
  const auto frames = static_cast<std::size_t>(spec.frames);

  const double c = g.lv_length;
  const double w = g.wall;
  const double w_thin = g.wall - g.thinning;
  const double alpha = g.rv_angle_deg * kPi / 180.0;
  const double infarct_half = g.infarct_angle_deg * kPi / 360.0;
  const double outer_c = c + w;
  const double h_rv = g.rv_height_fraction * outer_c;
  const double infarct_fraction = g.thinning > 0.0 ? g.infarct_angle_deg / 360.0 : 0.0;

  PhantomCase out;
  PhantomOracle& o = out.oracle;
  o.geometry = g;
  o.wall_mm = w;
  o.base_slice = kBaseSlice;
  o.apical_slice = static_cast<int>(std::floor((lay.z_base + outer_c) / sp.sz + 1e-9));

  // Closed-form curves.
  const double v_ed = 2.0 / 3.0 * kPi * g.lv_radius * g.lv_radius * c;
  const double rv_ed =
      crescent_volume(alpha, radius_integral(g.lv_radius + w, outer_c, h_rv), h_rv, g.rv_extent);
  std::vector<double> rv_extent(frames);
  for (std::size_t t = 0; t < frames; ++t) {
    const double v = v_ed * cycle_factor(g.lv_ef, t, spec.frames);
    const double r = std::sqrt(v / (2.0 / 3.0 * kPi * c));
    const double outer = 2.0 / 3.0 * kPi *
                         ((1.0 - infarct_fraction) * (r + w) * (r + w) * (c + w) +
                          infarct_fraction * (r + w_thin) * (r + w_thin) * (c + w_thin));
    const double rv = rv_ed * cycle_factor(g.rv_ef, t, spec.frames);
    rv_extent[t] = crescent_extent(alpha, radius_integral(r + w, outer_c, h_rv), h_rv, rv);
    o.lv_radius_mm.push_back(r);
    o.lvc_ml.push_back(v / 1000.0);
    o.lvm_ml.push_back((outer - v) / 1000.0);
    o.rvc_ml.push_back(rv / 1000.0);
  }
  o.ed_index = static_cast<std::size_t>(std::max_element(o.lvc_ml.begin(), o.lvc_ml.end()) - o.lvc_ml.begin());
  o.es_index = static_cast<std::size_t>(std::min_element(o.lvc_ml.begin(), o.lvc_ml.end()) - o.lvc_ml.begin());

  // Fit check against the largest frame.
  const double r_max = *std::max_element(o.lv_radius_mm.begin(), o.lv_radius_mm.end());
  const double d_max = *std::max_element(rv_extent.begin(), rv_extent.end());
  const double margin = std::max(sp.sx, sp.sy);
  const double left = r_max + w + d_max;
  const double right = r_max + w;
  const double half_y = std::max(right, left * std::sin(std::min(alpha / 2.0, kPi / 2.0)));
  if (left > lay.cx * sp.sx - margin || right > (dims.nx - 1 - lay.cx) * sp.sx - margin ||
      half_y > std::min(lay.cy, dims.ny - 1 - lay.cy) * sp.sy - margin ||
      lay.z_base + outer_c > (dims.nz - 1.5) * sp.sz) {
    throw ValidationError("phantom geometry exceeds grid");
  }

  // Per-pixel polar coordinates around the LV axis.
  const std::size_t plane = dims.slice_pixels();
  std::vector<double> rho(plane);
  std::vector<std::uint8_t> sector(plane);  // 1 infarct, 2 RV
  for (int y = 0; y < dims.ny; ++y) {
    for (int x = 0; x < dims.nx; ++x) {
      const double px = (x - lay.cx) * sp.sx;
      const double py = (y - lay.cy) * sp.sy;
      const std::size_t i = static_cast<std::size_t>(y) * dims.nx + x;
      rho[i] = std::hypot(px, py);
      const double phi = std::abs(std::atan2(py, px));
      sector[i] = phi <= infarct_half ? 1 : (phi >= kPi - alpha / 2.0 ? 2 : 0);
    }
  }

  std::vector<LabelVolume> series;
  series.reserve(frames);
  for (std::size_t t = 0; t < frames; ++t) {
    const double r = o.lv_radius_mm[t];
    const double d = rv_extent[t];
    std::vector<std::uint8_t> data(dims.voxels(), code(Structure::BG));
    for (int z = 0; z < dims.nz; ++z) {
      const double dz = z * sp.sz - lay.z_base;
      if (dz < 0.0 || dz > outer_c) continue;
      const double cavity_q = (dz / c) * (dz / c);
      const double outer_radius = (r + w) * std::sqrt(std::max(0.0, 1.0 - (dz / outer_c) * (dz / outer_c)));
      const double thin_c = c + w_thin;
      const double thin_q = (dz / thin_c) * (dz / thin_c);
      for (std::size_t i = 0; i < plane; ++i) {
        const double q = rho[i];
        std::uint8_t label = code(Structure::BG);
        if ((q / r) * (q / r) + cavity_q <= 1.0) {
          label = code(Structure::LVC);
        } else if (sector[i] == 1 && g.thinning > 0.0) {
          if ((q / (r + w_thin)) * (q / (r + w_thin)) + thin_q <= 1.0) label = code(Structure::LVM);
        } else if (q <= outer_radius) {
          label = code(Structure::LVM);
        } else if (sector[i] == 2 && dz <= h_rv && q <= outer_radius + d) {
          label = code(Structure::RVC);
        }
        data[static_cast<std::size_t>(z) * plane + i] = label;
      }
    }
    series.emplace_back(dims, sp, std::move(data));
  }

  PatientRecord& rec = out.record;
  rec.id = id;
  rec.series = CineLabelSeries(std::move(series));
  rec.height_cm = g.height_cm;
  rec.weight_kg = g.weight_kg;
  rec.ed_index = o.ed_index;
  rec.es_index = o.es_index;
  rec.diagnosis = diagnosis;
  validate_patient(rec);
  return out;
}

PhantomCase generate_patient(const PhantomSpec& spec, Diagnosis d, std::uint64_t seed, const std::string& id) {
  return render_phantom(spec, draw_geometry(spec, d, seed), id, d);
}

std::vector<PhantomCase> generate_cohort(const PhantomSpec& spec, int n_per_class, int threads) {
  if (n_per_class < 1) throw ValidationError("n_per_class must be >= 1");
  const auto n = static_cast<std::size_t>(n_per_class) * kNumClasses;
  std::vector<PhantomCase> cohort(n);
  parallel_for(n, threads, [&](std::size_t i) {
    char id[32];
    std::snprintf(id, sizeof id, "P%04zu", i + 1);
    cohort[i] = generate_patient(spec, kAllDiagnoses[i % kNumClasses], derive_seed(spec.seed, i), id);
  });
  return cohort;
}

}  // namespace cardiac
