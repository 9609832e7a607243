// SPDX-License-Identifier: Apache-2.0

#ifndef RANGEKIT_AUGMENT_HPP
#define RANGEKIT_AUGMENT_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <unordered_set>
#include <vector>

#include "rangekit/core.hpp"
#include "rangekit/io.hpp"
#include "rangekit/random.hpp"

namespace rangekit {

// Parameters for the cloud- and grid-level augmentations. Shift bounds are
// fractions of the raster width; probabilities gate the four grid ops.
struct AugmentConfig {
  double jitter_sigma = 0.3;
  double scale_rate = 0.05;
  double drop_rate = 0.1;
  std::vector<int> mix_bands = {2, 3, 4, 5, 6};
  double union_fill = 0.5;
  std::vector<std::int32_t> tail_classes = {};
  double shift_low = 0.25;
  double shift_high = 0.75;
  double p_mix = 0.9;
  double p_union = 0.2;
  double p_paste = 0.9;
  double p_shift = 1.0;

  void validate() const {
    auto rate = [](double v, const char* name) {
      if (!(v >= 0.0 && v <= 1.0)) throw Error(std::string("augment config: ") + name + " must be in [0, 1]");
    };
    rate(scale_rate, "scale_rate");
    rate(drop_rate, "drop_rate");
    rate(union_fill, "union_fill");
    rate(p_mix, "p_mix");
    rate(p_union, "p_union");
    rate(p_paste, "p_paste");
    rate(p_shift, "p_shift");
    if (jitter_sigma < 0.0) throw Error("augment config: jitter_sigma must be >= 0");
    if (!(shift_low >= 0.0 && shift_low <= shift_high && shift_high <= 1.0)) {
      throw Error("augment config: need 0 <= shift_low <= shift_high <= 1");
    }
    if (mix_bands.empty()) throw Error("augment config: mix_bands must not be empty");
    for (int k : mix_bands) {
      if (k < 1) throw Error("augment config: mix band counts must be >= 1");
    }
  }
};

inline AugmentConfig load_augment_config(const std::string& path) {
  const auto kv = read_key_values(path);
  AugmentConfig cfg;
  auto opt_double = [&](const char* key, double& slot) {
    if (kv.count(key)) slot = detail::parse_double(kv, key);
  };
  opt_double("jitter", cfg.jitter_sigma);
  opt_double("scale", cfg.scale_rate);
  opt_double("drop", cfg.drop_rate);
  opt_double("union_fill", cfg.union_fill);
  opt_double("shift_low", cfg.shift_low);
  opt_double("shift_high", cfg.shift_high);
  opt_double("p_mix", cfg.p_mix);
  opt_double("p_union", cfg.p_union);
  opt_double("p_paste", cfg.p_paste);
  opt_double("p_shift", cfg.p_shift);
  if (kv.count("mix_bands")) {
    cfg.mix_bands.clear();
    for (std::int32_t k : detail::parse_id_list(kv.at("mix_bands"))) cfg.mix_bands.push_back(k);
  }
  if (kv.count("tail_classes")) cfg.tail_classes = detail::parse_id_list(kv.at("tail_classes"));
  try {
    cfg.validate();
  } catch (const Error& e) {
    throw FormatError(path + ": " + e.what());
  }
  return cfg;
}

// ---- cloud-level ops ------------------------------------------------------
//
// Each op consumes a fixed, documented draw sequence so that runs are
// reproducible from the seed alone.

// Scales x and y by a common factor from [1, 1 + rate], inverted with
// probability 1/2. Draws: factor, inversion gate.
inline PointCloud random_scaling(const PointCloud& cloud, double rate, Rng& rng) {
  if (!(rate > 0.0 && rate <= 1.0)) throw Error("random_scaling: rate must be in (0, 1]");
  double s = rng.uniform(1.0, 1.0 + rate);
  if (rng.uniform() < 0.5) s = 1.0 / s;
  PointCloud out = cloud;
  for (Point& p : out.points) {
    p.x *= s;
    p.y *= s;
  }
  return out;
}

// Planar rotation about the sensor axis by an angle uniform in [0, 360)
// degrees. Draws: angle.
inline PointCloud global_rotation(const PointCloud& cloud, Rng& rng) {
  const double rad = rng.uniform() * 360.0 * kPi / 180.0;
  const double c = std::cos(rad);
  const double s = std::sin(rad);
  PointCloud out = cloud;
  for (Point& p : out.points) {
    const double x = p.x;
    const double y = p.y;
    p.x = c * x - s * y;
    p.y = s * x + c * y;
  }
  return out;
}

// One normal offset per axis, clipped to +-3 sigma, added to every point.
// Draws: three normals.
inline PointCloud random_jittering(const PointCloud& cloud, double sigma, Rng& rng) {
  if (sigma < 0.0) throw Error("random_jittering: sigma must be >= 0");
  const double lim = 3.0 * sigma;
  const double jx = std::clamp(rng.normal(0.0, sigma), -lim, lim);
  const double jy = std::clamp(rng.normal(0.0, sigma), -lim, lim);
  const double jz = std::clamp(rng.normal(0.0, sigma), -lim, lim);
  PointCloud out = cloud;
  for (Point& p : out.points) {
    p.x += jx;
    p.y += jy;
    p.z += jz;
  }
  return out;
}

// Four equiprobable cases: none, negate x, negate y, negate both.
// Draws: case index.
inline PointCloud random_flipping(const PointCloud& cloud, Rng& rng) {
  const std::int64_t flip = rng.uniform_int(0, 4);
  PointCloud out = cloud;
  for (Point& p : out.points) {
    if (flip == 1 || flip == 3) p.x = -p.x;
    if (flip == 2 || flip == 3) p.y = -p.y;
  }
  return out;
}

// Removes a random subset of at most floor(N * rate) points; the index draws
// may repeat and are deduplicated, so the realized count can be smaller.
// Labels and instances are dropped in lockstep; survivor order is preserved.
// Draws: count, then `count` indices in [0, N-1).
inline PointCloud random_dropping(const PointCloud& cloud, double rate, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw Error("random_dropping: rate must be in [0, 1)");
  const std::int64_t n = static_cast<std::int64_t>(cloud.size());
  const std::int64_t max_drop = static_cast<std::int64_t>(static_cast<double>(n) * rate);
  if (max_drop <= 0) return cloud;
  const std::int64_t count = rng.uniform_int(0, max_drop);
  if (count == 0) return cloud;
  std::vector<std::int64_t> drop(static_cast<std::size_t>(count));
  for (auto& d : drop) d = rng.uniform_int(0, n - 1);
  std::sort(drop.begin(), drop.end());
  drop.erase(std::unique(drop.begin(), drop.end()), drop.end());

  PointCloud out;
  if (cloud.labels) out.labels.emplace();
  if (cloud.instances) out.instances.emplace();
  std::size_t next = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    if (next < drop.size() && drop[next] == i) {
      ++next;
      continue;
    }
    out.points.push_back(cloud.points[static_cast<std::size_t>(i)]);
    if (cloud.labels) out.labels->push_back((*cloud.labels)[static_cast<std::size_t>(i)]);
    if (cloud.instances) out.instances->push_back((*cloud.instances)[static_cast<std::size_t>(i)]);
  }
  return out;
}

// ---- grid-level ops -------------------------------------------------------

namespace detail {

inline void require_same_shape(const RangeImage& a, const RangeImage& b, const char* op) {
  if (a.height != b.height || a.width != b.width) {
    throw Error(std::string(op) + ": image shapes differ");
  }
  if (a.label_grid.has_value() != b.label_grid.has_value()) {
    throw Error(std::string(op) + ": label grid present on only one input");
  }
}

// Grid augmentation mixes grids from two clouds, so the per-point
// bookkeeping of the base image no longer describes the result.
inline RangeImage grids_only(const RangeImage& src) {
  RangeImage out(src.height, src.width);
  out.wrap_u = src.wrap_u;
  out.channels = src.channels;
  out.label_grid = src.label_grid;
  return out;
}

inline void copy_grid(RangeImage& dst, const RangeImage& src, int v, int u) {
  for (int c = 0; c < kNumChannels; ++c) {
    dst.at(static_cast<Channel>(c), v, u) = src.at(static_cast<Channel>(c), v, u);
  }
  if (dst.label_grid && src.label_grid) {
    (*dst.label_grid)[static_cast<std::size_t>(v) * dst.width + u] =
        (*src.label_grid)[static_cast<std::size_t>(v) * src.width + u];
  }
}

}  // namespace detail

// Splits the rows into `bands` contiguous blocks of near-equal height
// (remainder rows go to the earliest blocks); even-indexed blocks keep a's
// rows, odd-indexed blocks take b's. Rows are copied whole, never blended.
inline RangeImage range_mix(const RangeImage& a, const RangeImage& b, int bands) {
  detail::require_same_shape(a, b, "range_mix");
  if (bands < 1) throw Error("range_mix: band count must be >= 1");
  RangeImage out = detail::grids_only(a);
  const int base = a.height / bands;
  const int rem = a.height % bands;
  int row = 0;
  for (int band = 0; band < bands; ++band) {
    const int h = base + (band < rem ? 1 : 0);
    if (band % 2 == 1) {
      for (int v = row; v < row + h; ++v) {
        for (int u = 0; u < a.width; ++u) detail::copy_grid(out, b, v, u);
      }
    }
    row += h;
  }
  return out;
}

// Fills a random subset of the grids that are empty in `a` and occupied in
// `b` with b's values; ceil(fill * |eligible|) grids are chosen uniformly.
// Occupied grids of `a` are never touched. Draws: one index per filled grid.
inline RangeImage range_union(const RangeImage& a, const RangeImage& b, double fill, Rng& rng) {
  detail::require_same_shape(a, b, "range_union");
  if (!(fill >= 0.0 && fill <= 1.0)) throw Error("range_union: fill must be in [0, 1]");
  std::vector<std::uint32_t> eligible;
  for (int v = 0; v < a.height; ++v) {
    for (int u = 0; u < a.width; ++u) {
      if (!a.occupied(v, u) && b.occupied(v, u)) {
        eligible.push_back(static_cast<std::uint32_t>(v) * a.width + u);
      }
    }
  }
  const auto take = static_cast<std::size_t>(
      std::ceil(fill * static_cast<double>(eligible.size())));
  RangeImage out = detail::grids_only(a);
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t j = static_cast<std::size_t>(
        rng.uniform_int(static_cast<std::int64_t>(i), static_cast<std::int64_t>(eligible.size())));
    std::swap(eligible[i], eligible[j]);
    const int v = static_cast<int>(eligible[i]) / a.width;
    const int u = static_cast<int>(eligible[i]) % a.width;
    detail::copy_grid(out, b, v, u);
  }
  return out;
}

// Copies every grid whose label in `b` belongs to one of the given classes,
// overwriting a's channels and label at the same position.
inline RangeImage range_paste(const RangeImage& a, const RangeImage& b,
                              const std::vector<std::int32_t>& classes) {
  if (!b.label_grid) throw Error("range_paste: source image has no labels");
  if (!a.label_grid) throw Error("range_paste: target image has no labels");
  if (a.height != b.height || a.width != b.width) throw Error("range_paste: image shapes differ");
  const std::unordered_set<std::int32_t> wanted(classes.begin(), classes.end());
  RangeImage out = detail::grids_only(a);
  if (wanted.empty()) return out;
  for (int v = 0; v < a.height; ++v) {
    for (int u = 0; u < a.width; ++u) {
      if (wanted.count((*b.label_grid)[static_cast<std::size_t>(v) * b.width + u])) {
        detail::copy_grid(out, b, v, u);
      }
    }
  }
  return out;
}

// Circular column shift: output column j = input column (j + shift) mod W,
// all channels and labels together.
inline RangeImage range_shift(const RangeImage& a, int shift) {
  if (shift < 0 || shift > a.width) throw Error("range_shift: shift outside [0, W]");
  RangeImage out = detail::grids_only(a);
  if (shift == a.width) shift = 0;
  if (shift == 0) return out;
  for (int v = 0; v < a.height; ++v) {
    for (int u = 0; u < a.width; ++u) {
      const int src = (u + shift) % a.width;
      for (int c = 0; c < kNumChannels; ++c) {
        out.at(static_cast<Channel>(c), v, u) = a.at(static_cast<Channel>(c), v, src);
      }
      if (out.label_grid) {
        (*out.label_grid)[static_cast<std::size_t>(v) * a.width + u] =
            (*a.label_grid)[static_cast<std::size_t>(v) * a.width + src];
      }
    }
  }
  return out;
}

// Applies the four grid ops in fixed order (mix, paste, union, shift), each
// gated by its own probability draw. The second scan is requested from the
// sampler at most once, and only if an op that needs it fires.
// Draw order: mix gate [, band pick], paste gate, union gate [, union picks],
// shift gate [, shift amount].
template <typename SamplerFn>
RangeImage apply_range_combo(const RangeImage& a, SamplerFn&& sample_b,
                             const AugmentConfig& cfg, Rng& rng) {
  cfg.validate();
  RangeImage img = detail::grids_only(a);
  std::optional<RangeImage> b;
  auto other = [&]() -> const RangeImage& {
    if (!b) b = sample_b();
    return *b;
  };
  if (rng.uniform() < cfg.p_mix) {
    const auto pick = static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(cfg.mix_bands.size())));
    img = range_mix(img, other(), cfg.mix_bands[pick]);
  }
  if (rng.uniform() < cfg.p_paste) {
    img = range_paste(img, other(), cfg.tail_classes);
  }
  if (rng.uniform() < cfg.p_union) {
    img = range_union(img, other(), cfg.union_fill, rng);
  }
  if (rng.uniform() < cfg.p_shift) {
    const auto lo = static_cast<std::int64_t>(cfg.shift_low * img.width);
    const auto hi = static_cast<std::int64_t>(cfg.shift_high * img.width);
    const int shift = static_cast<int>(rng.uniform_int(lo, hi + 1));
    img = range_shift(img, shift);
  }
  return img;
}

inline RangeImage apply_range_combo(const RangeImage& a, const RangeImage& b,
                                    const AugmentConfig& cfg, Rng& rng) {
  return apply_range_combo(a, [&]() -> const RangeImage& { return b; }, cfg, rng);
}

}  // namespace rangekit

#endif  // RANGEKIT_AUGMENT_HPP
