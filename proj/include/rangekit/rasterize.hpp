// SPDX-License-Identifier: Apache-2.0

#ifndef RANGEKIT_RASTERIZE_HPP
#define RANGEKIT_RASTERIZE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "rangekit/core.hpp"

namespace rangekit {

inline double depth(const Point& p) {
  return std::sqrt(p.x * p.x + p.y * p.y + p.z * p.z);
}

// Horizontal angle about the sensor axis, two-argument arctangent convention.
inline double azimuth(const Point& p) {
  if (p.x == 0.0 && p.y == 0.0) throw Error("azimuth undefined at x = y = 0");
  return std::atan2(p.y, p.x);
}

// Vertical angle above/below the sensor plane.
inline double inclination(const Point& p) {
  if (p.x == 0.0 && p.y == 0.0) throw Error("inclination undefined at x = y = 0");
  return std::atan2(p.z, std::sqrt(p.x * p.x + p.y * p.y));
}

namespace detail {

// Forward projection shared by the panorama and azimuth-view paths. Columns
// wrap (azimuth is periodic), rows do not: the row index is kept unclamped
// and in_fov records whether it fell inside [0, H) before any clamping.
inline ProjectionResult project_unchecked(const Point& p, const SensorSpec& spec) {
  ProjectionResult pr;
  pr.defined = true;
  const double d = depth(p);
  pr.u = 0.5 * (1.0 - std::atan2(p.y, p.x) / kPi) * spec.width;
  pr.v = (1.0 - (std::asin(p.z / d) + spec.fov_down_rad) / spec.fov_rad) * spec.height;
  int ui = static_cast<int>(std::floor(pr.u)) % spec.width;
  if (ui < 0) ui += spec.width;
  pr.u_int = ui;
  pr.v_int = static_cast<int>(std::floor(pr.v));
  pr.in_fov = pr.v_int >= 0 && pr.v_int < spec.height;
  return pr;
}

inline bool is_origin(const Point& p) { return p.x == 0.0 && p.y == 0.0 && p.z == 0.0; }

}  // namespace detail

inline ProjectionResult project_point(const Point& p, const SensorSpec& spec) {
  if (detail::is_origin(p)) throw Error("projection undefined at the origin");
  return detail::project_unchecked(p, spec);
}

namespace detail {

// Grid competition: the nearest point claims the grid, previous holders move
// to the displaced list. Writes all six channels for the new winner.
inline void claim_grid(RangeImage& img, const PointCloud& cloud, std::uint32_t index,
                       const ProjectionResult& pr) {
  const std::size_t g = static_cast<std::size_t>(pr.v_int) * img.width + pr.u_int;
  const Point& p = cloud.points[index];
  const std::int32_t current = img.grid_winner[g];
  if (current >= 0) {
    const double held = img.at(Channel::Depth, pr.v_int, pr.u_int);
    const double mine = depth(p);
    if (mine >= held) {
      img.displaced.push_back(index);
      return;
    }
    img.displaced.push_back(static_cast<std::uint32_t>(current));
  }
  img.grid_winner[g] = static_cast<std::int32_t>(index);
  img.at(Channel::X, pr.v_int, pr.u_int) = p.x;
  img.at(Channel::Y, pr.v_int, pr.u_int) = p.y;
  img.at(Channel::Z, pr.v_int, pr.u_int) = p.z;
  img.at(Channel::Depth, pr.v_int, pr.u_int) = depth(p);
  img.at(Channel::Intensity, pr.v_int, pr.u_int) = p.intensity;
  img.at(Channel::Existence, pr.v_int, pr.u_int) = 1.0;
}

inline void fill_label_grid(RangeImage& img, const PointCloud& cloud, std::int32_t ignore_id) {
  if (!cloud.labels) return;
  std::vector<std::int32_t> grid(img.grid_count(), ignore_id);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const std::int32_t w = img.grid_winner[g];
    if (w >= 0) grid[g] = (*cloud.labels)[static_cast<std::size_t>(w)];
  }
  img.label_grid = std::move(grid);
}

}  // namespace detail

// Full-panorama rasterization. Origin points have no defined projection and
// are counted as out-of-FOV rather than erroring, so this is total over any
// valid cloud.
inline RangeImage rasterize(const PointCloud& cloud, const SensorSpec& spec,
                            std::int32_t ignore_id = 0) {
  RangeImage img(spec.height, spec.width);
  img.wrap_u = true;
  img.projections.resize(cloud.size());
  img.grid_winner.assign(img.grid_count(), -1);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Point& p = cloud.points[i];
    if (detail::is_origin(p)) {
      ++img.undefined_points;
      ++img.out_of_fov;
      continue;
    }
    const ProjectionResult pr = detail::project_unchecked(p, spec);
    img.projections[i] = pr;
    if (!pr.in_fov) {
      ++img.out_of_fov;
      continue;
    }
    detail::claim_grid(img, cloud, static_cast<std::uint32_t>(i), pr);
  }
  detail::fill_label_grid(img, cloud, ignore_id);
  return img;
}

// Inverse 2D -> 3D transfer: every point receives the label of the grid its
// projection falls in, with the column wrapped (or clamped for view rasters)
// and the row clamped so the map is total. Points with no defined projection
// fall back to grid (0, 0).
inline std::vector<std::int32_t> unproject(const RangeImage& img,
                                           const std::vector<std::int32_t>& grid_labels,
                                           const PointCloud& cloud) {
  if (grid_labels.size() != img.grid_count()) {
    throw Error("unproject: grid label shape does not match image");
  }
  if (img.projections.size() != cloud.size()) {
    throw Error("unproject: image bookkeeping does not match cloud");
  }
  std::vector<std::int32_t> out(cloud.size(), 0);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const ProjectionResult& pr = img.projections[i];
    int col = 0;
    int row = 0;
    if (pr.defined) {
      col = pr.u_int;
      if (!img.wrap_u) col = std::clamp(col, 0, img.width - 1);
      row = std::clamp(pr.v_int, 0, img.height - 1);
    }
    out[i] = grid_labels[static_cast<std::size_t>(row) * img.width + col];
  }
  return out;
}

}  // namespace rangekit

#endif  // RANGEKIT_RASTERIZE_HPP
