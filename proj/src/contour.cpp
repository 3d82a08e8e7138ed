#include "cardiac/contour.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace cardiac {

std::size_t SliceMask::count() const {
  return static_cast<std::size_t>(std::count_if(on.begin(), on.end(), [](auto v) { return v != 0; }));
}

SliceMask largest_component(const SliceMask& mask) {
  const std::size_t n = mask.on.size();
  std::vector<int> label(n, -1);
  std::vector<std::size_t> sizes;
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < n; ++start) {
    if (!mask.on[start] || label[start] >= 0) continue;
    const int id = static_cast<int>(sizes.size());
    std::size_t size = 0;
    label[start] = id;
    stack.push_back(start);
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      ++size;
      const int x = static_cast<int>(p % mask.nx);
      const int y = static_cast<int>(p / mask.nx);
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (!mask.at(x + dx, y + dy)) continue;
          const std::size_t q = static_cast<std::size_t>(y + dy) * mask.nx + (x + dx);
          if (label[q] < 0) {
            label[q] = id;
            stack.push_back(q);
          }
        }
      }
    }
    sizes.push_back(size);
  }
  SliceMask out{mask.nx, mask.ny, std::vector<std::uint8_t>(n, 0)};
  if (sizes.empty()) return out;
  const int best = static_cast<int>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
  for (std::size_t p = 0; p < n; ++p) out.on[p] = label[p] == best ? 1 : 0;
  return out;
}

SliceMask fill_holes(const SliceMask& mask) {
  const int w = mask.nx;
  const int h = mask.ny;
  std::vector<std::uint8_t> outside(mask.on.size(), 0);
  std::vector<std::size_t> stack;
  auto seed = [&](int x, int y) {
    const std::size_t p = static_cast<std::size_t>(y) * w + x;
    if (!mask.on[p] && !outside[p]) {
      outside[p] = 1;
      stack.push_back(p);
    }
  };
  for (int x = 0; x < w; ++x) {
    seed(x, 0);
    seed(x, h - 1);
  }
  for (int y = 0; y < h; ++y) {
    seed(0, y);
    seed(w - 1, y);
  }
  constexpr int kDx[4] = {1, -1, 0, 0};
  constexpr int kDy[4] = {0, 0, 1, -1};
  while (!stack.empty()) {
    const std::size_t p = stack.back();
    stack.pop_back();
    const int x = static_cast<int>(p % w);
    const int y = static_cast<int>(p / w);
    for (int d = 0; d < 4; ++d) {
      const int qx = x + kDx[d];
      const int qy = y + kDy[d];
      if (qx >= 0 && qy >= 0 && qx < w && qy < h) seed(qx, qy);
    }
  }
  SliceMask out = mask;
  for (std::size_t p = 0; p < out.on.size(); ++p) out.on[p] = outside[p] ? 0 : 1;
  return out;
}

double Contour::length() const {
  double len = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& a = points[i];
    const auto& b = points[(i + 1) % points.size()];
    len += std::hypot(b[0] - a[0], b[1] - a[1]);
  }
  return len;
}

double Contour::area() const {
  double twice = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& a = points[i];
    const auto& b = points[(i + 1) % points.size()];
    twice += a[0] * b[1] - b[0] * a[1];
  }
  return std::abs(twice) / 2.0;
}

std::vector<Contour> marching_squares(const SliceMask& mask) {
  // Padded grid so every region is closed; padded pixel (i, j) is mask
  // pixel (i - 1, j - 1).
  const int w = mask.nx + 2;
  const int h = mask.ny + 2;
  auto inside = [&mask](int i, int j) { return mask.at(i - 1, j - 1); };
  // Edge ids: horizontal edge from (i, j) to (i+1, j) -> 2*(j*w+i);
  // vertical edge from (i, j) to (i, j+1) -> 2*(j*w+i)+1.
  auto horizontal = [w](int i, int j) { return 2L * (static_cast<long>(j) * w + i); };
  auto vertical = [w](int i, int j) { return 2L * (static_cast<long>(j) * w + i) + 1; };
  auto midpoint = [w](long id) -> std::array<double, 2> {
    const long cell = id / 2;
    const double i = static_cast<double>(cell % w);
    const double j = static_cast<double>(cell / w);
    // Shift back to unpadded pixel coordinates.
    return (id % 2 == 0) ? std::array<double, 2>{i + 0.5 - 1.0, j - 1.0}
                         : std::array<double, 2>{i - 1.0, j + 0.5 - 1.0};
  };

  std::unordered_map<long, long> next;
  for (int j = 0; j + 1 < h; ++j) {
    for (int i = 0; i + 1 < w; ++i) {
      // Corners in cyclic order a(i,j) b(i+1,j) c(i+1,j+1) d(i,j+1); edge m
      // runs from corner m to corner m+1.
      const bool in[4] = {inside(i, j), inside(i + 1, j), inside(i + 1, j + 1), inside(i, j + 1)};
      const long edge[4] = {horizontal(i, j), vertical(i + 1, j), horizontal(i, j + 1), vertical(i, j)};
      for (int m = 0; m < 4; ++m) {
        const bool enter = !in[m] && in[(m + 1) % 4];
        if (!enter) continue;
        // Pair with the nearest preceding exit: background corners are cut
        // off, so diagonal foreground pixels stay joined.
        for (int back = 1; back < 4; ++back) {
          const int e = (m - back + 4) % 4;
          if (in[e] && !in[(e + 1) % 4]) {
            next[edge[m]] = edge[e];
            break;
          }
        }
      }
    }
  }

  std::vector<Contour> loops;
  std::unordered_map<long, bool> used;
  std::vector<long> starts;
  starts.reserve(next.size());
  for (const auto& [from, to] : next) starts.push_back(from);
  std::sort(starts.begin(), starts.end());
  for (long start : starts) {
    if (used[start]) continue;
    Contour loop;
    long cur = start;
    while (!used[cur]) {
      used[cur] = true;
      loop.points.push_back(midpoint(cur));
      auto it = next.find(cur);
      if (it == next.end()) break;
      cur = it->second;
    }
    loops.push_back(std::move(loop));
  }
  return loops;
}

Contour smooth_contour(const Contour& contour, int passes) {
  Contour cur = contour;
  const std::size_t n = cur.points.size();
  if (n < 3) return cur;
  for (int p = 0; p < passes; ++p) {
    Contour next = cur;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& prev = cur.points[(i + n - 1) % n];
      const auto& here = cur.points[i];
      const auto& after = cur.points[(i + 1) % n];
      for (int a = 0; a < 2; ++a) next.points[i][a] = 0.25 * prev[a] + 0.5 * here[a] + 0.25 * after[a];
    }
    cur = std::move(next);
  }
  return cur;
}

std::optional<Contour> outer_contour(const SliceMask& mask, double sx, double sy) {
  const SliceMask filled = fill_holes(largest_component(mask));
  if (filled.count() == 0) return std::nullopt;
  auto loops = marching_squares(filled);
  if (loops.empty()) return std::nullopt;
  for (auto& loop : loops) {
    for (auto& p : loop.points) {
      p[0] *= sx;
      p[1] *= sy;
    }
  }
  auto outer = std::max_element(loops.begin(), loops.end(), [](const Contour& a, const Contour& b) {
    return a.area() < b.area();
  });
  return smooth_contour(*outer, kContourSmoothingPasses);
}

}  // namespace cardiac
