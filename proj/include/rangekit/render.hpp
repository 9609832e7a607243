// SPDX-License-Identifier: Apache-2.0

#ifndef RANGEKIT_RENDER_HPP
#define RANGEKIT_RENDER_HPP

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "rangekit/core.hpp"
#include "rangekit/rasterize.hpp"

namespace rangekit {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  bool operator==(const Rgb& o) const { return r == o.r && g == o.g && b == o.b; }
};

inline constexpr Rgb kColorCorrect{128, 128, 128};
inline constexpr Rgb kColorWrong{200, 30, 30};
inline constexpr Rgb kColorEmpty{0, 0, 0};

struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // 3 bytes per pixel, row-major

  Image() = default;
  Image(int w, int h) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, 0) {}

  void set(int x, int y, Rgb c) {
    const std::size_t o = (static_cast<std::size_t>(y) * width + x) * 3;
    pixels[o] = c.r;
    pixels[o + 1] = c.g;
    pixels[o + 2] = c.b;
  }

  Rgb get(int x, int y) const {
    const std::size_t o = (static_cast<std::size_t>(y) * width + x) * 3;
    return {pixels[o], pixels[o + 1], pixels[o + 2]};
  }
};

inline void write_ppm(const Image& img, std::ostream& out) {
  out << "P6\n" << img.width << " " << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
}

inline void write_ppm(const Image& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  write_ppm(img, out);
  if (!out) throw IoError("write failure on " + path);
}

// Top-down error map over a square region of side extent_m centered on the
// sensor: +x right, +y up, the nearest point wins each pixel. Correct
// predictions paint gray, wrong ones red; ignore-labeled truth is skipped.
inline Image error_map_bev(const PointCloud& cloud, const std::vector<std::int32_t>& pred,
                           const std::vector<std::int32_t>& gt, double extent_m, int px,
                           std::int32_t ignore_id = 0) {
  if (pred.size() != cloud.size() || gt.size() != cloud.size()) {
    throw Error("error_map_bev: length mismatch");
  }
  if (!(extent_m > 0.0) || px < 1) throw Error("error_map_bev: bad extent or size");
  Image img(px, px);
  std::vector<double> best(static_cast<std::size_t>(px) * px,
                           std::numeric_limits<double>::infinity());
  const double half = extent_m / 2.0;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (gt[i] == ignore_id) continue;
    const Point& p = cloud.points[i];
    const int x = static_cast<int>(std::floor((p.x + half) / extent_m * px));
    const int y = static_cast<int>(std::floor((half - p.y) / extent_m * px));
    if (x < 0 || x >= px || y < 0 || y >= px) continue;
    const double d = depth(p);
    double& slot = best[static_cast<std::size_t>(y) * px + x];
    if (d >= slot) continue;
    slot = d;
    img.set(x, y, pred[i] == gt[i] ? kColorCorrect : kColorWrong);
  }
  return img;
}

// Range-view error map: one pixel per grid, black where the raster is empty.
inline Image error_map_range(const RangeImage& ri, const std::vector<std::int32_t>& grid_pred,
                             const std::vector<std::int32_t>& grid_gt) {
  if (grid_pred.size() != ri.grid_count() || grid_gt.size() != ri.grid_count()) {
    throw Error("error_map_range: grid shape mismatch");
  }
  Image img(ri.width, ri.height);
  for (int v = 0; v < ri.height; ++v) {
    for (int u = 0; u < ri.width; ++u) {
      if (!ri.occupied(v, u)) continue;
      const std::size_t g = static_cast<std::size_t>(v) * ri.width + u;
      img.set(u, v, grid_pred[g] == grid_gt[g] ? kColorCorrect : kColorWrong);
    }
  }
  return img;
}

}  // namespace rangekit

#endif  // RANGEKIT_RENDER_HPP
