// SPDX-License-Identifier: Apache-2.0

#ifndef RANGEKIT_POSTPROCESS_HPP
#define RANGEKIT_POSTPROCESS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <tuple>
#include <vector>

#include "rangekit/core.hpp"
#include "rangekit/rasterize.hpp"

namespace rangekit {

// Equal-interval index split: list j holds exactly the indices congruent to
// j modulo num_sub, in ascending order.
struct SubCloudSplit {
  int num_sub = 1;
  std::vector<std::vector<std::uint32_t>> indices;
};

inline SubCloudSplit subcloud_indices(std::size_t n, int num_sub) {
  if (num_sub < 1) throw Error("subcloud split: num_sub must be >= 1");
  SubCloudSplit split;
  split.num_sub = num_sub;
  split.indices.resize(static_cast<std::size_t>(num_sub));
  for (std::size_t i = 0; i < n; ++i) {
    split.indices[i % static_cast<std::size_t>(num_sub)].push_back(static_cast<std::uint32_t>(i));
  }
  return split;
}

inline std::vector<PointCloud> subcloud_split(const PointCloud& cloud, int num_sub) {
  const SubCloudSplit split = subcloud_indices(cloud.size(), num_sub);
  std::vector<PointCloud> out(split.indices.size());
  for (std::size_t j = 0; j < split.indices.size(); ++j) {
    PointCloud& sub = out[j];
    if (cloud.labels) sub.labels.emplace();
    if (cloud.instances) sub.instances.emplace();
    for (std::uint32_t i : split.indices[j]) {
      sub.points.push_back(cloud.points[i]);
      if (cloud.labels) sub.labels->push_back((*cloud.labels)[i]);
      if (cloud.instances) sub.instances->push_back((*cloud.instances)[i]);
    }
  }
  return out;
}

// Exact inverse of subcloud_split's index mapping.
inline std::vector<std::int32_t> subcloud_stitch(const std::vector<std::vector<std::int32_t>>& per_sub,
                                                 int num_sub, std::size_t n) {
  if (num_sub < 1) throw Error("subcloud stitch: num_sub must be >= 1");
  if (per_sub.size() != static_cast<std::size_t>(num_sub)) {
    throw Error("subcloud stitch: expected " + std::to_string(num_sub) + " parts");
  }
  std::vector<std::int32_t> out(n, 0);
  for (std::size_t j = 0; j < per_sub.size(); ++j) {
    std::size_t expected = 0;
    for (std::size_t i = j; i < n; i += static_cast<std::size_t>(num_sub)) ++expected;
    if (per_sub[j].size() != expected) {
      throw Error("subcloud stitch: part " + std::to_string(j) + " has " +
                  std::to_string(per_sub[j].size()) + " entries, expected " + std::to_string(expected));
    }
    std::size_t k = 0;
    for (std::size_t i = j; i < n; i += static_cast<std::size_t>(num_sub)) out[i] = per_sub[j][k++];
  }
  return out;
}

struct KnnParams {
  int k = 5;
  int window = 5;
  double range_cutoff = 1.0;  // meters of depth difference

  void validate() const {
    if (window < 1 || window % 2 == 0) throw Error("knn: window must be odd and >= 1");
    if (k < 1 || k > window * window) throw Error("knn: need 1 <= k <= window^2");
    if (!(range_cutoff >= 0.0)) throw Error("knn: range_cutoff must be >= 0");
  }
};

// Depth-nearest-neighbor label vote over the window around each point's
// projection. The k occupied grids with the smallest |depth difference|
// vote; candidates beyond the cutoff are discarded; ties between classes
// break on smaller depth difference, then smaller class id. When nothing
// survives, the point keeps the plain unprojected label, so window = 1
// reduces to unproject exactly.
inline std::vector<std::int32_t> knn_smooth(const RangeImage& img,
                                            const std::vector<std::int32_t>& grid_labels,
                                            const PointCloud& cloud, const KnnParams& params) {
  params.validate();
  if (grid_labels.size() != img.grid_count()) {
    throw Error("knn_smooth: grid label shape does not match image");
  }
  if (img.projections.size() != cloud.size()) {
    throw Error("knn_smooth: image bookkeeping does not match cloud");
  }
  const int half = params.window / 2;
  std::vector<std::int32_t> out(cloud.size(), 0);
  // (|depth delta|, row, col) sorted ascending; the trailing pair makes the
  // neighbor order deterministic when deltas tie.
  std::vector<std::tuple<double, int, int>> candidates;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const ProjectionResult& pr = img.projections[i];
    int col = 0;
    int row = 0;
    if (pr.defined) {
      col = pr.u_int;
      if (!img.wrap_u) col = std::clamp(col, 0, img.width - 1);
      row = std::clamp(pr.v_int, 0, img.height - 1);
    }
    const std::int32_t fallback = grid_labels[static_cast<std::size_t>(row) * img.width + col];
    if (!pr.defined) {
      out[i] = fallback;
      continue;
    }
    const double d = depth(cloud.points[i]);
    candidates.clear();
    for (int dv = -half; dv <= half; ++dv) {
      const int r = row + dv;
      if (r < 0 || r >= img.height) continue;
      for (int du = -half; du <= half; ++du) {
        int c = col + du;
        if (img.wrap_u) {
          c %= img.width;
          if (c < 0) c += img.width;
        } else if (c < 0 || c >= img.width) {
          continue;
        }
        if (!img.occupied(r, c)) continue;
        candidates.emplace_back(std::abs(img.at(Channel::Depth, r, c) - d), r, c);
      }
    }
    std::sort(candidates.begin(), candidates.end());
    if (candidates.size() > static_cast<std::size_t>(params.k)) {
      candidates.resize(static_cast<std::size_t>(params.k));
    }
    // class -> (votes, smallest delta seen)
    std::map<std::int32_t, std::pair<int, double>> tally;
    for (const auto& [delta, r, c] : candidates) {
      if (delta > params.range_cutoff) continue;
      const std::int32_t label = grid_labels[static_cast<std::size_t>(r) * img.width + c];
      auto it = tally.try_emplace(label, 0, delta).first;
      it->second.first += 1;
      it->second.second = std::min(it->second.second, delta);
    }
    if (tally.empty()) {
      out[i] = fallback;
      continue;
    }
    std::int32_t best = 0;
    int best_votes = -1;
    double best_delta = 0.0;
    for (const auto& [label, entry] : tally) {
      const auto [votes, delta] = entry;
      if (votes > best_votes || (votes == best_votes && delta < best_delta)) {
        best = label;
        best_votes = votes;
        best_delta = delta;
      }
    }
    out[i] = best;
  }
  return out;
}

// Supervised post-processing pass: stride-split the cloud, rasterize and
// predict each sub-cloud separately, smooth, and stitch the per-sub labels
// back to the original point order. Fewer points per rasterization means
// fewer grid collisions, so displaced points recover their own predictions.
template <typename PredictorFn>
std::vector<std::int32_t> range_post(const PointCloud& cloud, const SensorSpec& spec, int num_sub,
                                     PredictorFn&& predict, const KnnParams& knn,
                                     std::int32_t ignore_id = 0) {
  const std::vector<PointCloud> subs = subcloud_split(cloud, num_sub);
  std::vector<std::vector<std::int32_t>> per_sub;
  per_sub.reserve(subs.size());
  for (const PointCloud& sub : subs) {
    const RangeImage img = rasterize(sub, spec, ignore_id);
    const std::vector<std::int32_t> grid = predict(img);
    per_sub.push_back(knn_smooth(img, grid, sub, knn));
  }
  return subcloud_stitch(per_sub, num_sub, cloud.size());
}

}  // namespace rangekit

#endif  // RANGEKIT_POSTPROCESS_HPP
