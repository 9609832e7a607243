// SPDX-License-Identifier: Apache-2.0

#ifndef RANGEKIT_OCCUPANCY_HPP
#define RANGEKIT_OCCUPANCY_HPP

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "rangekit/core.hpp"
#include "rangekit/rasterize.hpp"

namespace rangekit {

// One measurement of the grid/point occupancy trade-off: how full the raster
// is versus how many points survive the many-to-one competition. Every
// occupied grid holds exactly one winner, so winners == occupied grids.
struct OccupancyPoint {
  std::uint64_t occupied = 0;
  std::uint64_t winners = 0;
  std::uint64_t n = 0;
  double grid_fill = 0.0;        // occupied / (H * W)
  double point_retention = 1.0;  // winners / N; 1 for an empty cloud
};

inline OccupancyPoint occupancy_point(const PointCloud& cloud, const SensorSpec& spec) {
  const RangeImage img = rasterize(cloud, spec);
  OccupancyPoint out;
  out.occupied = img.occupied_count();
  out.winners = out.occupied;
  out.n = cloud.size();
  out.grid_fill = static_cast<double>(out.occupied) /
                  (static_cast<double>(spec.height) * static_cast<double>(spec.width));
  out.point_retention = out.n > 0 ? static_cast<double>(out.winners) / static_cast<double>(out.n) : 1.0;
  return out;
}

struct OccupancyRow {
  int width = 0;
  double grid_fill = 0.0;
  double point_retention = 0.0;
};

// Sweeps the raster width at fixed height and field of view; one row per
// width, widths must be given in ascending order.
inline std::vector<OccupancyRow> occupancy_curve(const PointCloud& cloud, double fov_up_deg,
                                                 double fov_down_deg, int height,
                                                 const std::vector<int>& widths) {
  if (widths.empty()) throw Error("occupancy curve: need at least one width");
  for (std::size_t i = 1; i < widths.size(); ++i) {
    if (widths[i] <= widths[i - 1]) throw Error("occupancy curve: widths must be ascending");
  }
  std::vector<OccupancyRow> rows;
  rows.reserve(widths.size());
  for (int w : widths) {
    const SensorSpec spec(fov_up_deg, fov_down_deg, height, w);
    const OccupancyPoint p = occupancy_point(cloud, spec);
    rows.push_back({w, p.grid_fill, p.point_retention});
  }
  return rows;
}

// Smallest width pair between which (grid_fill - point_retention) changes
// sign; a width where the difference is exactly zero is reported as a
// degenerate [w, w] interval. Nullopt when the curves never cross.
inline std::optional<std::pair<int, int>> find_crossover(const std::vector<OccupancyRow>& rows) {
  auto diff = [&](std::size_t i) { return rows[i].grid_fill - rows[i].point_retention; };
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (diff(i) == 0.0) return std::make_pair(rows[i].width, rows[i].width);
    if (i + 1 < rows.size()) {
      if ((diff(i) < 0.0 && diff(i + 1) > 0.0) || (diff(i) > 0.0 && diff(i + 1) < 0.0)) {
        return std::make_pair(rows[i].width, rows[i + 1].width);
      }
    }
  }
  return std::nullopt;
}

}  // namespace rangekit

#endif  // RANGEKIT_OCCUPANCY_HPP
