#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace cardiac {

/// Binary in-plane mask, x fastest.
struct SliceMask {
  int nx = 0;
  int ny = 0;
  std::vector<std::uint8_t> on;

  bool at(int x, int y) const {
    return x >= 0 && y >= 0 && x < nx && y < ny && on[static_cast<std::size_t>(y) * nx + x] != 0;
  }
  std::size_t count() const;
};

/// Largest 8-connected component (first in scan order on ties).
SliceMask largest_component(const SliceMask& mask);

/// Sets every background pixel not 4-connected to the border.
SliceMask fill_holes(const SliceMask& mask);

/// Closed polygon in physical (mm) coordinates.
struct Contour {
  std::vector<std::array<double, 2>> points;

  double length() const;
  /// Shoelace area (absolute).
  double area() const;
};

/// Closed loops of the marching-squares iso-line through the pixel-edge
/// midpoints. Saddle cells join diagonal foreground pixels (8-connectivity).
/// Points are in pixel units.
std::vector<Contour> marching_squares(const SliceMask& mask);

/// One pass of [1/4, 1/2, 1/4] averaging over the polygon vertices.
Contour smooth_contour(const Contour& contour, int passes);

inline constexpr int kContourSmoothingPasses = 2;

/// Outer boundary of the largest 8-connected component (holes filled),
/// smoothed, in mm. nullopt for an empty mask.
std::optional<Contour> outer_contour(const SliceMask& mask, double sx, double sy);

}  // namespace cardiac
