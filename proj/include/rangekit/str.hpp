// SPDX-License-Identifier: Apache-2.0

#ifndef RANGEKIT_STR_HPP
#define RANGEKIT_STR_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "rangekit/core.hpp"
#include "rangekit/rasterize.hpp"

namespace rangekit {

// Azimuth grouping of a cloud into Z disjoint views. Bins start at -pi and
// are half-open; the single angle +pi is folded into the last bin. Points at
// x = y = 0 take the IEEE atan2 convention and land in a bin like any other,
// so the assignment is total.
struct ViewPartition {
  int z = 1;
  std::vector<std::int32_t> assignments;

  double bin_span() const { return 2.0 * kPi / z; }
  double bin_lo(int view_id) const { return -kPi + view_id * bin_span(); }
  double bin_hi(int view_id) const { return -kPi + (view_id + 1) * bin_span(); }

  std::size_t view_size(int view_id) const {
    std::size_t n = 0;
    for (std::int32_t a : assignments)
      if (a == view_id) ++n;
    return n;
  }
};

inline ViewPartition partition(const PointCloud& cloud, int z) {
  if (z < 1) throw Error("partition: view count must be >= 1");
  ViewPartition part;
  part.z = z;
  part.assignments.resize(cloud.size());
  const double span = part.bin_span();
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Point& p = cloud.points[i];
    const double theta = std::atan2(p.y, p.x);
    const auto bin = static_cast<std::int32_t>(std::floor((theta + kPi) / span));
    part.assignments[i] = std::clamp(bin, 0, z - 1);
  }
  return part;
}

// One view rasterized at its own horizontal resolution. The image columns
// cover only this view's azimuth window, so they clamp instead of wrapping.
// point_indices maps local (image) point order back to the source cloud.
struct ViewRaster {
  int view_id = 0;
  RangeImage image;
  double theta_lo = 0.0;
  double theta_hi = 0.0;
  std::vector<std::uint32_t> point_indices;
};

// Rasterizes a single view at width `w_view`. Columns are computed exactly as
// a full panorama of width Z * w_view would compute them and then offset into
// the view's block, so Z = 1 reproduces plain rasterization bit for bit.
// Points whose column lands outside the view block (possible only on the
// floating-point boundary between bins) are clamped to the nearest edge.
inline ViewRaster rasterize_view(const PointCloud& cloud, const ViewPartition& part, int view_id,
                                 const SensorSpec& spec, int w_view, std::int32_t ignore_id = 0) {
  if (view_id < 0 || view_id >= part.z) throw Error("rasterize_view: view id out of range");
  if (w_view < 1) throw Error("rasterize_view: view width must be >= 1");
  if (part.assignments.size() != cloud.size()) {
    throw Error("rasterize_view: partition does not match cloud");
  }
  ViewRaster vr;
  vr.view_id = view_id;
  vr.theta_lo = part.bin_lo(view_id);
  vr.theta_hi = part.bin_hi(view_id);

  PointCloud local;
  if (cloud.labels) local.labels.emplace();
  if (cloud.instances) local.instances.emplace();
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (part.assignments[i] != view_id) continue;
    vr.point_indices.push_back(static_cast<std::uint32_t>(i));
    local.points.push_back(cloud.points[i]);
    if (cloud.labels) local.labels->push_back((*cloud.labels)[i]);
    if (cloud.instances) local.instances->push_back((*cloud.instances)[i]);
  }

  const SensorSpec panorama(spec.fov_up_deg, spec.fov_down_deg, spec.height, part.z * w_view);
  // Decreasing azimuth maps to increasing column, so view 0 (lowest angles)
  // owns the rightmost block of the equivalent panorama.
  const int col_offset = (part.z - 1 - view_id) * w_view;

  RangeImage img(spec.height, w_view);
  img.wrap_u = false;
  img.projections.resize(local.size());
  img.grid_winner.assign(img.grid_count(), -1);
  for (std::size_t i = 0; i < local.size(); ++i) {
    const Point& p = local.points[i];
    if (detail::is_origin(p)) {
      ++img.undefined_points;
      ++img.out_of_fov;
      continue;
    }
    ProjectionResult pr = detail::project_unchecked(p, panorama);
    pr.u -= col_offset;
    pr.u_int = std::clamp(pr.u_int - col_offset, 0, w_view - 1);
    img.projections[i] = pr;
    if (!pr.in_fov) {
      ++img.out_of_fov;
      continue;
    }
    detail::claim_grid(img, local, static_cast<std::uint32_t>(i), pr);
  }
  detail::fill_label_grid(img, local, ignore_id);
  vr.image = std::move(img);
  return vr;
}

// Splits a per-point array into per-view arrays, each ordered by ascending
// original index. Inverse of stitch.
inline std::vector<std::vector<std::int32_t>> split_by_view(const std::vector<std::int32_t>& values,
                                                            const ViewPartition& part) {
  if (values.size() != part.assignments.size()) throw Error("split_by_view: length mismatch");
  std::vector<std::vector<std::int32_t>> out(static_cast<std::size_t>(part.z));
  for (std::size_t i = 0; i < values.size(); ++i) {
    out[static_cast<std::size_t>(part.assignments[i])].push_back(values[i]);
  }
  return out;
}

// Reassembles per-view predictions into full-scan order: point i takes the
// next prediction of the view that contains it.
inline std::vector<std::int32_t> stitch(const std::vector<std::vector<std::int32_t>>& view_predictions,
                                        const ViewPartition& part) {
  if (view_predictions.size() != static_cast<std::size_t>(part.z)) {
    throw Error("stitch: expected " + std::to_string(part.z) + " views, got " +
                std::to_string(view_predictions.size()));
  }
  for (int v = 0; v < part.z; ++v) {
    if (view_predictions[static_cast<std::size_t>(v)].size() != part.view_size(v)) {
      throw Error("stitch: view " + std::to_string(v) + " prediction count does not match view size");
    }
  }
  std::vector<std::int32_t> out(part.assignments.size(), 0);
  std::vector<std::size_t> cursor(static_cast<std::size_t>(part.z), 0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto v = static_cast<std::size_t>(part.assignments[i]);
    out[i] = view_predictions[v][cursor[v]++];
  }
  return out;
}

// Per-source-point label transfer for a view raster.
inline std::vector<std::int32_t> unproject_view(const ViewRaster& vr,
                                                const std::vector<std::int32_t>& grid_labels) {
  if (grid_labels.size() != vr.image.grid_count()) {
    throw Error("unproject_view: grid label shape does not match image");
  }
  std::vector<std::int32_t> out(vr.image.projections.size(), 0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const ProjectionResult& pr = vr.image.projections[i];
    int col = 0;
    int row = 0;
    if (pr.defined) {
      col = std::clamp(pr.u_int, 0, vr.image.width - 1);
      row = std::clamp(pr.v_int, 0, vr.image.height - 1);
    }
    out[i] = grid_labels[static_cast<std::size_t>(row) * vr.image.width + col];
  }
  return out;
}

// Rasterizes every view, runs the grid predictor on each, transfers labels
// back to the view's points, and stitches the views into full-scan order.
// The predictor maps a ViewRaster to H * w_view grid labels.
template <typename PredictorFn>
std::vector<std::int32_t> infer_all_views(const PointCloud& cloud, int z, const SensorSpec& spec,
                                          int w_view, PredictorFn&& predict,
                                          std::int32_t ignore_id = 0) {
  const ViewPartition part = partition(cloud, z);
  std::vector<std::vector<std::int32_t>> per_view(static_cast<std::size_t>(z));
  for (int v = 0; v < z; ++v) {
    const ViewRaster vr = rasterize_view(cloud, part, v, spec, w_view, ignore_id);
    const std::vector<std::int32_t> grid = predict(vr);
    per_view[static_cast<std::size_t>(v)] = unproject_view(vr, grid);
  }
  return stitch(per_view, part);
}

}  // namespace rangekit

#endif  // RANGEKIT_STR_HPP
