// Shared cloud generators and comparison utilities for the test suites.

#ifndef RANGEKIT_TESTS_HELPERS_HPP
#define RANGEKIT_TESTS_HELPERS_HPP

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "rangekit/core.hpp"
#include "rangekit/random.hpp"

namespace testutil {

// Scratch directory removed on scope exit.
struct TempDir {
  std::filesystem::path path;

  TempDir() {
    static std::atomic<int> counter{0};
    path = std::filesystem::temp_directory_path() /
           ("rangekit-test-" + std::to_string(std::chrono::steady_clock::now().time_since_epoch().count()) +
            "-" + std::to_string(counter++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }

  std::string file(const std::string& name) const { return (path / name).string(); }
};

inline void write_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

// Points scattered in a box around the sensor; some fall outside any
// realistic vertical FOV, which the bookkeeping tests rely on. Degenerate
// x = y = 0 positions are nudged away.
inline rangekit::PointCloud random_cloud(rangekit::Rng& rng, std::size_t n, bool with_labels,
                                         int num_classes = 20) {
  rangekit::PointCloud cloud;
  if (with_labels) {
    cloud.labels.emplace();
    cloud.instances.emplace();
  }
  for (std::size_t i = 0; i < n; ++i) {
    rangekit::Point p;
    p.x = rng.uniform(-50.0, 50.0);
    p.y = rng.uniform(-50.0, 50.0);
    p.z = rng.uniform(-4.0, 8.0);
    if (std::abs(p.x) < 0.05 && std::abs(p.y) < 0.05) p.x = 0.5;
    p.intensity = rng.uniform();
    cloud.points.push_back(p);
    if (with_labels) {
      cloud.labels->push_back(static_cast<std::int32_t>(rng.uniform_int(1, num_classes)));
      cloud.instances->push_back(static_cast<std::int32_t>(rng.uniform_int(0, 8)));
    }
  }
  return cloud;
}

// Points sampled strictly inside the vertical FOV of `spec`.
inline rangekit::PointCloud random_cloud_in_fov(rangekit::Rng& rng, std::size_t n,
                                                const rangekit::SensorSpec& spec, bool with_labels,
                                                int num_classes = 20) {
  rangekit::PointCloud cloud;
  if (with_labels) {
    cloud.labels.emplace();
    cloud.instances.emplace();
  }
  const double margin = 0.02 * spec.fov_rad;
  for (std::size_t i = 0; i < n; ++i) {
    const double theta = rng.uniform(-rangekit::kPi, rangekit::kPi);
    const double phi = rng.uniform(-spec.fov_down_rad + margin, spec.fov_up_rad - margin);
    const double r = rng.uniform(2.0, 60.0);
    rangekit::Point p;
    p.x = r * std::cos(phi) * std::cos(theta);
    p.y = r * std::cos(phi) * std::sin(theta);
    p.z = r * std::sin(phi);
    p.intensity = rng.uniform();
    cloud.points.push_back(p);
    if (with_labels) {
      cloud.labels->push_back(static_cast<std::int32_t>(rng.uniform_int(1, num_classes)));
      cloud.instances->push_back(static_cast<std::int32_t>(rng.uniform_int(0, 8)));
    }
  }
  return cloud;
}

// Dense in-FOV cloud averaging `per_grid` points per raster cell, to force
// plenty of many-to-one collisions.
inline rangekit::PointCloud dense_cloud(rangekit::Rng& rng, const rangekit::SensorSpec& spec,
                                        double per_grid, bool with_labels, int num_classes = 20) {
  const auto n = static_cast<std::size_t>(per_grid * spec.height * spec.width);
  return random_cloud_in_fov(rng, n, spec, with_labels, num_classes);
}

inline bool same_channels(const rangekit::RangeImage& a, const rangekit::RangeImage& b) {
  return a.height == b.height && a.width == b.width && a.channels == b.channels;
}

inline bool same_labels(const rangekit::RangeImage& a, const rangekit::RangeImage& b) {
  return a.label_grid == b.label_grid;
}

}  // namespace testutil

#endif
