#include <catch2/catch.hpp>

#include <cmath>
#include <limits>

#include "helpers.hpp"
#include "rangekit/core.hpp"
#include "rangekit/random.hpp"

using namespace rangekit;

TEST_CASE("validate accepts an empty cloud") {
  PointCloud cloud;
  CHECK(validate(cloud).ok());
}

TEST_CASE("validate reports the first bad point with its index") {
  Rng rng(1);
  PointCloud cloud = testutil::random_cloud(rng, 12, false);
  cloud.points[7].y = std::numeric_limits<double>::quiet_NaN();
  const ValidationResult r = validate(cloud);
  REQUIRE_FALSE(r.ok());
  REQUIRE(r.violation->index.has_value());
  CHECK(*r.violation->index == 7);
}

TEST_CASE("validate rejects label arrays of the wrong length") {
  Rng rng(2);
  PointCloud cloud = testutil::random_cloud(rng, 3, false);
  cloud.labels = std::vector<std::int32_t>{1, 2};
  const ValidationResult r = validate(cloud);
  REQUIRE_FALSE(r.ok());
  CHECK(r.violation->what.find("label count") != std::string::npos);
}

TEST_CASE("validate rejects non-binary existence flags") {
  Rng rng(3);
  PointCloud cloud = testutil::random_cloud(rng, 4, false);
  cloud.points[2].existence = 7;
  const ValidationResult r = validate(cloud);
  REQUIRE_FALSE(r.ok());
  CHECK(*r.violation->index == 2);
}

TEST_CASE("validate acceptance matches validity on random instances") {
  Rng rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    PointCloud cloud = testutil::random_cloud(rng, 1 + rng.uniform_int(0, 30), rng.uniform() < 0.5);
    bool corrupted = false;
    if (rng.uniform() < 0.5) {
      corrupted = true;
      const auto kind = rng.uniform_int(0, cloud.labels ? 4 : 3);
      const auto i = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(cloud.size())));
      switch (kind) {
        case 0: cloud.points[i].x = std::numeric_limits<double>::infinity(); break;
        case 1: cloud.points[i].z = std::numeric_limits<double>::quiet_NaN(); break;
        case 2: cloud.points[i].existence = 2; break;
        default: cloud.labels->pop_back(); break;
      }
    }
    CHECK(validate(cloud).ok() == !corrupted);
  }
}

TEST_CASE("sensor spec validates its invariants and precomputes radians") {
  const SensorSpec spec(3.0, 25.0, 64, 2048);
  CHECK(spec.fov_rad == Approx(28.0 * kPi / 180.0));
  CHECK(spec.fov_down_rad == Approx(25.0 * kPi / 180.0));
  CHECK_THROWS_AS(SensorSpec(0.0, 0.0, 64, 2048), Error);
  CHECK_THROWS_AS(SensorSpec(3.0, -25.0, 64, 2048), Error);
  CHECK_THROWS_AS(SensorSpec(3.0, 25.0, 0, 2048), Error);
  CHECK_THROWS_AS(SensorSpec(3.0, 25.0, 64, 0), Error);
}

TEST_CASE("taxonomy enforces the thing/stuff partition") {
  const ClassTaxonomy tax(6, 0, {1, 2}, {3, 4, 5});
  CHECK(tax.is_thing(1));
  CHECK(tax.is_stuff(4));
  CHECK(tax.is_ignore(0));
  CHECK_FALSE(tax.is_thing(0));
  CHECK_FALSE(tax.is_thing(99));

  // overlapping sets
  CHECK_THROWS_AS(ClassTaxonomy(6, 0, {1, 2}, {2, 3, 4, 5}), Error);
  // id 5 uncovered
  CHECK_THROWS_AS(ClassTaxonomy(6, 0, {1, 2}, {3, 4}), Error);
  // ignore listed as a thing
  CHECK_THROWS_AS(ClassTaxonomy(6, 0, {0, 1, 2}, {3, 4, 5}), Error);
  // out-of-range id
  CHECK_THROWS_AS(ClassTaxonomy(6, 0, {1, 2, 9}, {3, 4, 5}), Error);
}

TEST_CASE("range image accessors expose bookkeeping as optionals") {
  RangeImage img(2, 3);
  img.grid_winner.assign(img.grid_count(), -1);
  img.projections.resize(1);
  CHECK_FALSE(img.winner(0, 0).has_value());
  img.grid_winner[4] = 0;
  img.at(Channel::Existence, 1, 1) = 1.0;
  REQUIRE(img.winner(1, 1).has_value());
  CHECK(*img.winner(1, 1) == 0);
  CHECK_FALSE(img.point_grid(0).has_value());
  img.projections[0].defined = true;
  img.projections[0].in_fov = true;
  img.projections[0].u_int = 1;
  img.projections[0].v_int = 1;
  REQUIRE(img.point_grid(0).has_value());
  CHECK(img.point_grid(0)->u == 1);
}
