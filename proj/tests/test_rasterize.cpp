#include <catch2/catch.hpp>

#include <cmath>
#include <set>

#include "helpers.hpp"
#include "oracles.hpp"
#include "rangekit/rasterize.hpp"

using namespace rangekit;

TEST_CASE("depth") {
  CHECK(depth({3, 4, 0}) == 5.0);
  CHECK(depth({0, 0, 0}) == 0.0);
  CHECK(depth({1, 2, 2}) == 3.0);
}

TEST_CASE("azimuth") {
  CHECK(azimuth({1, 0, 0}) == 0.0);
  CHECK(azimuth({0, 1, 0}) == Approx(kPi / 2));
  CHECK(azimuth({-1, 0, 0}) == Approx(kPi));
  CHECK_THROWS_AS(azimuth({0, 0, 5}), Error);
}

TEST_CASE("inclination") {
  CHECK(inclination({1, 0, 0}) == 0.0);
  CHECK(inclination({1, 0, 1}) == Approx(kPi / 4));
  CHECK(inclination({0, 1, -1}) == Approx(-kPi / 4));
  CHECK_THROWS_AS(inclination({0, 0, 1}), Error);
}

TEST_CASE("project_point hits the symmetric-FOV landmarks exactly") {
  const SensorSpec spec(15.0, 15.0, 64, 2048);
  const ProjectionResult fwd = project_point({1, 0, 0}, spec);
  CHECK(fwd.u == 1024.0);
  CHECK(fwd.v == 32.0);
  CHECK(fwd.u_int == 1024);
  CHECK(fwd.v_int == 32);
  CHECK(fwd.in_fov);

  const ProjectionResult back = project_point({-1, 0, 0}, spec);
  CHECK(back.u == 0.0);
  CHECK(back.u_int == 0);

  CHECK_THROWS_AS(project_point({0, 0, 0}, spec), Error);
}

TEST_CASE("project_point tracks the high-precision evaluation") {
  const SensorSpec spec(3.0, 25.0, 64, 2048);
  {
    const ProjectionResult pr = project_point({3, 4, 1}, spec);
    const oracle::UV uv = oracle::project({3, 4, 1}, spec);
    CHECK(std::abs(pr.u - static_cast<double>(uv.u)) < 1e-9);
    CHECK(std::abs(pr.v - static_cast<double>(uv.v)) < 1e-9);
  }
  Rng rng(42);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const PointCloud cloud = testutil::random_cloud(rng, 1, false);
    const Point& p = cloud.points[0];
    const ProjectionResult pr = project_point(p, spec);
    const oracle::UV uv = oracle::project(p, spec);
    worst = std::max(worst, std::abs(pr.u - static_cast<double>(uv.u)));
    worst = std::max(worst, std::abs(pr.v - static_cast<double>(uv.v)));
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("vertical FOV check happens before any clamping") {
  const SensorSpec spec(3.0, 25.0, 64, 512);
  // Far above the upward limit.
  const ProjectionResult pr = project_point({10, 0, 40}, spec);
  CHECK_FALSE(pr.in_fov);
  CHECK(pr.v_int < 0);
}

TEST_CASE("rasterize keeps the nearest point on a collision") {
  SensorSpec spec(10.0, 10.0, 32, 256);
  PointCloud cloud;
  cloud.points.push_back({5.0, 0.5, 0.1, 0.0, 1});  // same direction, nearer
  cloud.points.push_back({7.0, 0.7, 0.14, 0.0, 1}); // scaled by 1.4, farther
  const RangeImage img = rasterize(cloud, spec);
  REQUIRE(img.point_grid(0).has_value());
  REQUIRE(img.point_grid(1).has_value());
  REQUIRE(img.point_grid(0)->u == img.point_grid(1)->u);
  REQUIRE(img.point_grid(0)->v == img.point_grid(1)->v);
  const GridCoord g = *img.point_grid(0);
  REQUIRE(img.winner(g.v, g.u).has_value());
  CHECK(*img.winner(g.v, g.u) == 0);
  REQUIRE(img.displaced.size() == 1);
  CHECK(img.displaced[0] == 1);
  CHECK(img.at(Channel::Depth, g.v, g.u) == Approx(depth(cloud.points[0])));
}

TEST_CASE("distinct grids leave no displaced points") {
  const SensorSpec spec(10.0, 10.0, 16, 64);
  PointCloud cloud;
  // One point per distinct azimuth column at zero inclination.
  for (int u = 0; u < 32; ++u) {
    const double theta = kPi - (2.0 * kPi) * (u + 0.5) / 64.0;
    cloud.points.push_back({10.0 * std::cos(theta), 10.0 * std::sin(theta), 0.0, 0.0, 1});
  }
  const RangeImage img = rasterize(cloud, spec);
  CHECK(img.displaced.empty());
  CHECK(img.out_of_fov == 0);
  double existence_sum = 0.0;
  for (int v = 0; v < spec.height; ++v)
    for (int u = 0; u < spec.width; ++u) existence_sum += img.at(Channel::Existence, v, u);
  CHECK(existence_sum == static_cast<double>(cloud.size()));
}

TEST_CASE("bookkeeping partition identity on random clouds") {
  Rng rng(7);
  const SensorSpec spec(3.0, 25.0, 32, 256);
  for (int trial = 0; trial < 20; ++trial) {
    const PointCloud cloud = testutil::random_cloud(rng, 500, true);
    const RangeImage img = rasterize(cloud, spec);

    // exhaustive recount
    std::size_t occupied = 0;
    std::set<std::uint32_t> winners;
    for (int v = 0; v < spec.height; ++v) {
      for (int u = 0; u < spec.width; ++u) {
        if (const auto w = img.winner(v, u)) {
          ++occupied;
          winners.insert(*w);
          CHECK(img.at(Channel::Existence, v, u) == 1.0);
        } else {
          CHECK(img.at(Channel::Existence, v, u) == 0.0);
        }
      }
    }
    CHECK(winners.size() == occupied);
    CHECK(img.displaced.size() + occupied + img.out_of_fov == cloud.size());
    CHECK(img.occupied_count() == occupied);

    // every winner round-trips through its own projection
    for (int v = 0; v < spec.height; ++v) {
      for (int u = 0; u < spec.width; ++u) {
        if (const auto w = img.winner(v, u)) {
          REQUIRE(img.point_grid(*w).has_value());
          CHECK(img.point_grid(*w)->u == u);
          CHECK(img.point_grid(*w)->v == v);
        }
      }
    }
  }
}

TEST_CASE("label grid carries winner labels and ignore elsewhere") {
  Rng rng(11);
  const SensorSpec spec(5.0, 20.0, 16, 128);
  const PointCloud cloud = testutil::random_cloud(rng, 300, true);
  const RangeImage img = rasterize(cloud, spec, 0);
  REQUIRE(img.label_grid.has_value());
  for (int v = 0; v < spec.height; ++v) {
    for (int u = 0; u < spec.width; ++u) {
      const std::int32_t label = (*img.label_grid)[static_cast<std::size_t>(v) * spec.width + u];
      if (const auto w = img.winner(v, u)) {
        CHECK(label == (*cloud.labels)[*w]);
      } else {
        CHECK(label == 0);
      }
    }
  }
}

TEST_CASE("unproject is total and recovers winner labels exactly") {
  Rng rng(13);
  const SensorSpec spec(3.0, 25.0, 32, 256);
  PointCloud cloud = testutil::random_cloud(rng, 800, true);
  cloud.points[5] = {0, 0, 0, 0, 1};  // undefined projection
  const RangeImage img = rasterize(cloud, spec);
  REQUIRE(img.label_grid.has_value());
  const std::vector<std::int32_t> recovered = unproject(img, *img.label_grid, cloud);
  REQUIRE(recovered.size() == cloud.size());

  for (int v = 0; v < spec.height; ++v) {
    for (int u = 0; u < spec.width; ++u) {
      if (const auto w = img.winner(v, u)) {
        CHECK(recovered[*w] == (*cloud.labels)[*w]);
      }
    }
  }
  // displaced points take the label of the grid they lost
  for (std::uint32_t d : img.displaced) {
    const GridCoord g = *img.point_grid(d);
    CHECK(recovered[d] == (*img.label_grid)[static_cast<std::size_t>(g.v) * spec.width + g.u]);
  }
  // undefined projections fall back to grid (0, 0)
  CHECK(recovered[5] == (*img.label_grid)[0]);
}

TEST_CASE("unproject with constant grid labels paints every point") {
  Rng rng(17);
  const SensorSpec spec(3.0, 25.0, 16, 64);
  const PointCloud cloud = testutil::random_cloud(rng, 200, false);
  const RangeImage img = rasterize(cloud, spec);
  const std::vector<std::int32_t> grid(img.grid_count(), 9);
  for (std::int32_t label : unproject(img, grid, cloud)) CHECK(label == 9);
}

TEST_CASE("unproject validates shapes") {
  Rng rng(19);
  const SensorSpec spec(3.0, 25.0, 8, 32);
  const PointCloud cloud = testutil::random_cloud(rng, 10, false);
  const RangeImage img = rasterize(cloud, spec);
  CHECK_THROWS_AS(unproject(img, std::vector<std::int32_t>(7, 0), cloud), Error);
}

TEST_CASE("column index is invariant under a full-circle rotation") {
  Rng rng(23);
  const SensorSpec spec(3.0, 25.0, 32, 512);
  const double c = std::cos(2.0 * kPi);
  const double s = std::sin(2.0 * kPi);
  for (int i = 0; i < 1000; ++i) {
    PointCloud cloud = testutil::random_cloud(rng, 1, false);
    Point p = cloud.points[0];
    Point q{c * p.x - s * p.y, s * p.x + c * p.y, p.z, p.intensity, 1};
    CHECK(project_point(p, spec).u_int == project_point(q, spec).u_int);
  }
}
