#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "epgi/geometry.hpp"

namespace epgi {

/// Uniform 2-D bin geometry in the sample plane (um). origin is the lower
/// left corner of bin (0, 0); bin indices grow with x and y.
struct Binning {
  double origin_x_um = -20.0;
  double origin_y_um = -20.0;
  double bin_size_um = 0.5;
  int nx = 80;
  int ny = 80;

  static Binning centered(double field_um, double bin_size_um) {
    Binning b;
    b.bin_size_um = bin_size_um;
    b.nx = b.ny = std::max(1, static_cast<int>(std::round(field_um / bin_size_um)));
    b.origin_x_um = -0.5 * b.nx * bin_size_um;
    b.origin_y_um = -0.5 * b.ny * bin_size_um;
    return b;
  }

  int index_x(double x) const { return static_cast<int>(std::floor((x - origin_x_um) / bin_size_um)); }
  int index_y(double y) const { return static_cast<int>(std::floor((y - origin_y_um) / bin_size_um)); }
  bool contains(int ix, int iy) const { return ix >= 0 && iy >= 0 && ix < nx && iy < ny; }
  Vec2 center(int ix, int iy) const {
    return {origin_x_um + (ix + 0.5) * bin_size_um, origin_y_um + (iy + 0.5) * bin_size_um};
  }
  std::size_t size() const { return static_cast<std::size_t>(nx) * ny; }

  bool operator==(const Binning&) const = default;
};

/// Plain real-valued raster on a Binning grid, row-major (iy * nx + ix).
struct Image {
  Binning binning;
  std::vector<double> values;

  explicit Image(const Binning& b = {}) : binning(b), values(b.size(), 0.0) {}

  double& at(int ix, int iy) { return values[static_cast<std::size_t>(iy) * binning.nx + ix]; }
  double at(int ix, int iy) const { return values[static_cast<std::size_t>(iy) * binning.nx + ix]; }
};

/// Separable Gaussian blur with the kernel sampled at integer offsets,
/// truncated at 5 sigma, and renormalized where it overhangs the edge.
/// sigma_px = 0 returns the input unchanged.
void gaussian_blur_inplace(std::vector<double>& values, int nx, int ny, double sigma_px);

inline Image gaussian_blur(Image img, double sigma_px) {
  gaussian_blur_inplace(img.values, img.binning.nx, img.binning.ny, sigma_px);
  return img;
}

/// Otsu's threshold over a 256-level histogram of the value range.
double otsu_threshold(const std::vector<double>& values);

/// Dice overlap 2|A&B| / (|A|+|B|) of two equally shaped binary rasters.
double dice_coefficient(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b);

}  // namespace epgi
