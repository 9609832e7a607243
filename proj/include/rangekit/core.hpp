// SPDX-License-Identifier: Apache-2.0

#ifndef RANGEKIT_CORE_HPP
#define RANGEKIT_CORE_HPP

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace rangekit {

// Base error for all library failures. I/O and parse failures get their
// own types so callers can map them to distinct exit codes.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
public:
  using Error::Error;
};

class FormatError : public Error {
public:
  using Error::Error;
};

inline constexpr double kPi = 3.141592653589793238462643383279502884;

// Single LiDAR return: position in meters, reflectance, and a binary
// existence flag (1 = valid return).
struct Point {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double intensity = 0.0;
  std::uint8_t existence = 1;
};

// Ordered, index-addressable scan. Labels/instances are optional and, when
// present, must run parallel to the point array.
struct PointCloud {
  std::vector<Point> points;
  std::optional<std::vector<std::int32_t>> labels;
  std::optional<std::vector<std::int32_t>> instances;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

struct Violation {
  std::string what;
  std::optional<std::size_t> index;
};

struct ValidationResult {
  std::optional<Violation> violation;

  bool ok() const { return !violation.has_value(); }
};

// Total check of the PointCloud invariants; reports the first violation
// found (array lengths first, then points in index order).
inline ValidationResult validate(const PointCloud& cloud) {
  const std::size_t n = cloud.size();
  if (cloud.labels && cloud.labels->size() != n) {
    return {Violation{"label count " + std::to_string(cloud.labels->size()) +
                          " does not match point count " + std::to_string(n),
                      std::nullopt}};
  }
  if (cloud.instances && cloud.instances->size() != n) {
    return {Violation{"instance count " + std::to_string(cloud.instances->size()) +
                          " does not match point count " + std::to_string(n),
                      std::nullopt}};
  }
  for (std::size_t i = 0; i < n; ++i) {
    const Point& p = cloud.points[i];
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z)) {
      return {Violation{"non-finite coordinate", i}};
    }
    if (p.existence != 0 && p.existence != 1) {
      return {Violation{"existence flag not in {0, 1}", i}};
    }
  }
  return {};
}

// Sensor geometry: vertical field-of-view limits as positive magnitudes in
// degrees, plus the raster dimensions (height = beam count). Angles are
// converted to radians once, here, so projection code never touches degrees.
struct SensorSpec {
  double fov_up_deg = 0.0;
  double fov_down_deg = 0.0;
  int height = 0;
  int width = 0;
  double fov_up_rad = 0.0;
  double fov_down_rad = 0.0;
  double fov_rad = 0.0;

  SensorSpec() = default;

  SensorSpec(double up_deg, double down_deg, int h, int w)
      : fov_up_deg(up_deg), fov_down_deg(down_deg), height(h), width(w) {
    if (!(fov_up_deg + fov_down_deg > 0.0)) {
      throw Error("sensor spec: fov_up + fov_down must be positive");
    }
    if (height < 1 || width < 1) {
      throw Error("sensor spec: height and width must be >= 1");
    }
    fov_up_rad = fov_up_deg * kPi / 180.0;
    fov_down_rad = fov_down_deg * kPi / 180.0;
    fov_rad = fov_up_rad + fov_down_rad;
  }

  bool operator==(const SensorSpec& o) const {
    return fov_up_deg == o.fov_up_deg && fov_down_deg == o.fov_down_deg &&
           height == o.height && width == o.width;
  }
};

// Class id partition: every id in [0, num_classes) is the ignore id, a
// "thing" (instanced) class, or a "stuff" (amorphous) class.
class ClassTaxonomy {
public:
  ClassTaxonomy(std::int32_t num_classes, std::int32_t ignore_id,
                std::vector<std::int32_t> things, std::vector<std::int32_t> stuff,
                std::vector<std::string> names = {})
      : num_classes_(num_classes), ignore_id_(ignore_id), things_(std::move(things)),
        stuff_(std::move(stuff)), names_(std::move(names)), kind_(static_cast<std::size_t>(num_classes), 0) {
    if (num_classes_ < 1) throw Error("taxonomy: need at least one class id");
    if (ignore_id_ < 0 || ignore_id_ >= num_classes_) throw Error("taxonomy: ignore id out of range");
    for (std::int32_t id : things_) mark(id, 1);
    for (std::int32_t id : stuff_) mark(id, 2);
    for (std::int32_t id = 0; id < num_classes_; ++id) {
      if (id == ignore_id_) {
        if (kind_[static_cast<std::size_t>(id)] != 0) {
          throw Error("taxonomy: ignore id listed as thing or stuff");
        }
        continue;
      }
      if (kind_[static_cast<std::size_t>(id)] == 0) {
        throw Error("taxonomy: class id " + std::to_string(id) + " is neither thing nor stuff");
      }
    }
    if (names_.empty()) {
      for (std::int32_t id = 0; id < num_classes_; ++id) names_.push_back("class-" + std::to_string(id));
    }
    if (names_.size() != static_cast<std::size_t>(num_classes_)) {
      throw Error("taxonomy: name count does not match class count");
    }
  }

  std::int32_t num_classes() const { return num_classes_; }
  std::int32_t ignore_id() const { return ignore_id_; }
  const std::vector<std::int32_t>& things() const { return things_; }
  const std::vector<std::int32_t>& stuff() const { return stuff_; }
  const std::string& name(std::int32_t id) const { return names_.at(static_cast<std::size_t>(id)); }

  bool is_ignore(std::int32_t id) const { return id == ignore_id_; }
  bool is_thing(std::int32_t id) const { return in_range(id) && kind_[static_cast<std::size_t>(id)] == 1; }
  bool is_stuff(std::int32_t id) const { return in_range(id) && kind_[static_cast<std::size_t>(id)] == 2; }
  bool in_range(std::int32_t id) const { return id >= 0 && id < num_classes_; }

private:
  void mark(std::int32_t id, std::uint8_t kind) {
    if (id < 0 || id >= num_classes_) throw Error("taxonomy: class id out of range");
    std::uint8_t& slot = kind_[static_cast<std::size_t>(id)];
    if (slot != 0 && slot != kind) throw Error("taxonomy: class id listed as both thing and stuff");
    slot = kind;
  }

  std::int32_t num_classes_;
  std::int32_t ignore_id_;
  std::vector<std::int32_t> things_;
  std::vector<std::int32_t> stuff_;
  std::vector<std::string> names_;
  std::vector<std::uint8_t> kind_;
};

struct GridCoord {
  int u = 0;
  int v = 0;

  bool operator==(const GridCoord& o) const { return u == o.u && v == o.v; }
};

// Continuous and quantized image coordinates of one projected point.
// `defined` is false only for points with no projection at all (the sensor
// origin); `in_fov` reflects the row check before any clamping.
struct ProjectionResult {
  double u = 0.0;
  double v = 0.0;
  int u_int = 0;
  int v_int = 0;
  bool in_fov = false;
  bool defined = false;
};

enum class Channel : int { X = 0, Y = 1, Z = 2, Depth = 3, Intensity = 4, Existence = 5 };

inline constexpr int kNumChannels = 6;

// Six-channel raster plus the full point<->grid bookkeeping produced by
// rasterization. Grid-level augmentation returns images whose bookkeeping
// vectors are empty: the grids no longer originate from a single cloud.
struct RangeImage {
  int height = 0;
  int width = 0;
  // Panoramas wrap columns (azimuth is periodic); azimuth-window view
  // rasters clamp them instead.
  bool wrap_u = true;
  std::vector<double> channels;                          // kNumChannels * H * W
  std::optional<std::vector<std::int32_t>> label_grid;   // H * W
  std::vector<ProjectionResult> projections;             // one per source point
  std::vector<std::int32_t> grid_winner;                 // H * W, -1 = empty
  std::vector<std::uint32_t> displaced;                  // losers of grid collisions
  std::uint32_t out_of_fov = 0;                          // includes undefined projections
  std::uint32_t undefined_points = 0;

  RangeImage() = default;
  RangeImage(int h, int w)
      : height(h), width(w), channels(static_cast<std::size_t>(kNumChannels) * h * w, 0.0) {}

  std::size_t grid_count() const { return static_cast<std::size_t>(height) * width; }

  double& at(Channel c, int v, int u) { return channels[flat(c, v, u)]; }
  double at(Channel c, int v, int u) const { return channels[flat(c, v, u)]; }

  bool occupied(int v, int u) const { return at(Channel::Existence, v, u) != 0.0; }

  std::size_t occupied_count() const {
    std::size_t n = 0;
    for (int v = 0; v < height; ++v)
      for (int u = 0; u < width; ++u)
        if (occupied(v, u)) ++n;
    return n;
  }

  bool has_bookkeeping() const { return !grid_winner.empty(); }

  // Winning source point of a grid, if any.
  std::optional<std::uint32_t> winner(int v, int u) const {
    const std::int32_t idx = grid_winner[static_cast<std::size_t>(v) * width + u];
    if (idx < 0) return std::nullopt;
    return static_cast<std::uint32_t>(idx);
  }

  // Quantized grid of a source point, or nullopt when it fell outside the
  // vertical field of view (or had no defined projection).
  std::optional<GridCoord> point_grid(std::size_t point_index) const {
    const ProjectionResult& pr = projections[point_index];
    if (!pr.defined || !pr.in_fov) return std::nullopt;
    return GridCoord{pr.u_int, pr.v_int};
  }

private:
  std::size_t flat(Channel c, int v, int u) const {
    return (static_cast<std::size_t>(c) * height + v) * static_cast<std::size_t>(width) + u;
  }
};

}  // namespace rangekit

#endif  // RANGEKIT_CORE_HPP
