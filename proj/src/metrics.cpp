#include "cardiac/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace cardiac {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_compatible(const LabelVolume& a, const LabelVolume& b) {
  if (a.dims() != b.dims()) throw ValidationError("dimension mismatch between label volumes");
  if (a.spacing() != b.spacing()) throw ValidationError("spacing mismatch between label volumes");
}

std::vector<std::uint8_t> boundary(const LabelVolume& v, Structure s) {
  const Dims d = v.dims();
  std::vector<std::uint8_t> out(d.voxels(), 0);
  const std::uint8_t c = code(s);
  constexpr int kOffsets[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
  for (int z = 0; z < d.nz; ++z) {
    for (int y = 0; y < d.ny; ++y) {
      for (int x = 0; x < d.nx; ++x) {
        if (v.at(x, y, z) != c) continue;
        for (const auto& o : kOffsets) {
          const int qx = x + o[0], qy = y + o[1], qz = z + o[2];
          if (!v.contains(qx, qy, qz) || v.at(qx, qy, qz) != c) {
            out[v.index(x, y, z)] = 1;
            break;
          }
        }
      }
    }
  }
  return out;
}

// Lower envelope of parabolas (Felzenszwalb and Huttenlocher) along one
// line, with sample positions i * step. Infinite entries carry no parabola.
void distance_1d(std::vector<double>& f, double step, std::vector<double>& out, std::vector<int>& v,
                 std::vector<double>& z) {
  const int n = static_cast<int>(f.size());
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (f[q] == kInf) continue;
    const double pq = q * step;
    while (k >= 0) {
      const double pv = v[k] * step;
      const double s = ((f[q] + pq * pq) - (f[v[k]] + pv * pv)) / (2.0 * (pq - pv));
      if (s <= z[k]) {
        --k;
      } else {
        break;
      }
    }
    ++k;
    v[k] = q;
    if (k == 0) {
      z[k] = -kInf;
    } else {
      const double pv = v[k - 1] * step;
      z[k] = ((f[q] + pq * pq) - (f[v[k - 1]] + pv * pv)) / (2.0 * (pq - pv));
    }
    z[k + 1] = kInf;
  }
  if (k < 0) {
    std::fill(out.begin(), out.end(), kInf);
    return;
  }
  int j = 0;
  for (int q = 0; q < n; ++q) {
    const double p = q * step;
    while (z[j + 1] < p) ++j;
    const double d = p - v[j] * step;
    out[q] = d * d + f[v[j]];
  }
}

// Squared physical distance from every voxel to the nearest seed voxel.
std::vector<double> squared_distance(const std::vector<std::uint8_t>& seeds, const Dims& d, const Spacing& sp) {
  std::vector<double> dist(seeds.size());
  for (std::size_t i = 0; i < seeds.size(); ++i) dist[i] = seeds[i] ? 0.0 : kInf;
  const int extent[3] = {d.nx, d.ny, d.nz};
  const double step[3] = {sp.sx, sp.sy, sp.sz};
  const std::size_t stride[3] = {1, static_cast<std::size_t>(d.nx), d.slice_pixels()};
  for (int axis = 0; axis < 3; ++axis) {
    const int n = extent[axis];
    std::vector<double> f(n), out(n), z(n + 1);
    std::vector<int> v(n);
    const int a1 = (axis + 1) % 3, a2 = (axis + 2) % 3;
    for (int j = 0; j < extent[a2]; ++j) {
      for (int i = 0; i < extent[a1]; ++i) {
        const std::size_t base = i * stride[a1] + j * stride[a2];
        for (int q = 0; q < n; ++q) f[q] = dist[base + q * stride[axis]];
        distance_1d(f, step[axis], out, v, z);
        for (int q = 0; q < n; ++q) dist[base + q * stride[axis]] = out[q];
      }
    }
  }
  return dist;
}

double directed(const std::vector<std::uint8_t>& from, const std::vector<double>& to_dist) {
  double worst = 0.0;
  for (std::size_t i = 0; i < from.size(); ++i) {
    if (from[i]) worst = std::max(worst, to_dist[i]);
  }
  return std::sqrt(worst);
}

std::string format_cell(const std::optional<double>& v, int precision) {
  if (!v) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", precision, *v);
  return buf;
}

std::optional<double> mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

double dice_score(const LabelVolume& a, const LabelVolume& b, Structure s) {
  check_compatible(a, b);
  const std::uint8_t c = code(s);
  std::size_t na = 0, nb = 0, both = 0;
  const auto da = a.data();
  const auto db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i) {
    const bool in_a = da[i] == c;
    const bool in_b = db[i] == c;
    na += in_a;
    nb += in_b;
    both += in_a && in_b;
  }
  if (na + nb == 0) return 1.0;
  return 2.0 * static_cast<double>(both) / static_cast<double>(na + nb);
}

double hausdorff_mm(const LabelVolume& a, const LabelVolume& b, Structure s) {
  check_compatible(a, b);
  if (a.count(s) == 0 || b.count(s) == 0) {
    throw ValidationError("Hausdorff distance undefined for empty mask (" + std::string(structure_name(s)) + ")");
  }
  const auto ba = boundary(a, s);
  const auto bb = boundary(b, s);
  const auto da = squared_distance(ba, a.dims(), a.spacing());
  const auto db = squared_distance(bb, b.dims(), b.spacing());
  return std::max(directed(ba, db), directed(bb, da));
}

SegScore score_segmentation(const LabelVolume& prediction, const LabelVolume& truth) {
  SegScore score;
  for (std::size_t i = 0; i < kForegroundStructures.size(); ++i) {
    const Structure s = kForegroundStructures[i];
    score.dice[i] = dice_score(prediction, truth, s);
    if (prediction.count(s) > 0 && truth.count(s) > 0) score.hausdorff_mm[i] = hausdorff_mm(prediction, truth, s);
  }
  return score;
}

SegReport aggregate_report(const std::vector<SegScore>& scores) {
  SegReport report;
  auto add_rows = [&](const std::string& group, auto in_group) {
    for (const char* phase : {"ED", "ES", "total"}) {
      ReportRow row{group, phase, 0, {}, {}};
      std::array<std::vector<double>, 3> dice, hd;
      for (const SegScore& s : scores) {
        if (!in_group(s)) continue;
        if (std::string(phase) != "total" && phase_name(s.phase) != phase) continue;
        ++row.n;
        for (std::size_t k = 0; k < 3; ++k) {
          dice[k].push_back(s.dice[k]);
          if (s.hausdorff_mm[k]) hd[k].push_back(*s.hausdorff_mm[k]);
        }
      }
      for (std::size_t k = 0; k < 3; ++k) {
        row.dice[k] = mean_of(dice[k]);
        row.hausdorff_mm[k] = mean_of(hd[k]);
      }
      report.rows.push_back(row);
    }
  };
  for (Diagnosis d : kAllDiagnoses) {
    add_rows(std::string(diagnosis_name(d)), [d](const SegScore& s) { return s.pathology == d; });
  }
  add_rows("ALL", [](const SegScore&) { return true; });
  return report;
}

std::string SegReport::to_csv() const {
  std::ostringstream out;
  out << "group,phase,n";
  for (Structure s : kForegroundStructures) out << ",dice_" << structure_name(s);
  for (Structure s : kForegroundStructures) out << ",hausdorff_mm_" << structure_name(s);
  out << '\n';
  for (const ReportRow& r : rows) {
    out << r.group << ',' << r.phase << ',' << r.n;
    for (const auto& v : r.dice) out << ',' << format_cell(v, 6);
    for (const auto& v : r.hausdorff_mm) out << ',' << format_cell(v, 6);
    out << '\n';
  }
  return out.str();
}

std::string SegReport::to_text() const {
  std::ostringstream out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-6s %-6s %4s | %7s %7s %7s | %7s %7s %7s\n", "group", "phase", "n", "RVC", "LVM",
                "LVC", "RVC", "LVM", "LVC");
  out << std::string(19, ' ') << "| dice" << std::string(20, ' ') << "| hausdorff (mm)\n" << buf;
  for (const ReportRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%-6s %-6s %4zu | %7s %7s %7s | %7s %7s %7s\n", r.group.c_str(), r.phase.c_str(),
                  r.n, format_cell(r.dice[0], 3).c_str(), format_cell(r.dice[1], 3).c_str(),
                  format_cell(r.dice[2], 3).c_str(), format_cell(r.hausdorff_mm[0], 2).c_str(),
                  format_cell(r.hausdorff_mm[1], 2).c_str(), format_cell(r.hausdorff_mm[2], 2).c_str());
    out << buf;
  }
  return out.str();
}

}  // namespace cardiac
