#include <catch2/catch.hpp>

#include <sstream>

#include "helpers.hpp"
#include "rangekit/rasterize.hpp"
#include "rangekit/render.hpp"

using namespace rangekit;

namespace {

std::size_t count_color(const Image& img, Rgb color) {
  std::size_t n = 0;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      if (img.get(x, y) == color) ++n;
  return n;
}

}  // namespace

TEST_CASE("bev error map colors") {
  Rng rng(1);
  PointCloud cloud = testutil::random_cloud(rng, 200, true);
  // keep all points inside the 50 m extent
  for (Point& p : cloud.points) {
    p.x *= 0.4;
    p.y *= 0.4;
  }
  const std::vector<std::int32_t>& gt = *cloud.labels;

  SECTION("matching predictions produce no red pixels") {
    const Image img = error_map_bev(cloud, gt, gt, 50.0, 128);
    CHECK(count_color(img, kColorWrong) == 0);
    CHECK(count_color(img, kColorCorrect) > 0);
  }
  SECTION("fully wrong predictions produce no gray pixels") {
    std::vector<std::int32_t> wrong = gt;
    for (auto& l : wrong) l += 1;
    const Image img = error_map_bev(cloud, wrong, gt, 50.0, 128);
    CHECK(count_color(img, kColorCorrect) == 0);
    CHECK(count_color(img, kColorWrong) > 0);
  }
  SECTION("ignore-labeled truth is skipped") {
    std::vector<std::int32_t> all_ignore(cloud.size(), 0);
    const Image img = error_map_bev(cloud, gt, all_ignore, 50.0, 128);
    CHECK(count_color(img, kColorCorrect) == 0);
    CHECK(count_color(img, kColorWrong) == 0);
  }
  SECTION("length mismatch is rejected") {
    CHECK_THROWS_AS(error_map_bev(cloud, {1, 2}, gt, 50.0, 128), Error);
  }
}

TEST_CASE("bev binning puts a known point in the expected pixel") {
  PointCloud one;
  one.points.push_back({10.0, 10.0, 0.0, 0.0, 1});
  const std::vector<std::int32_t> label{3};
  const int px = 100;
  const Image img = error_map_bev(one, label, label, 50.0, px);
  // col = floor((10 + 25) / 50 * 100) = 70; row = floor((25 - 10) / 50 * 100) = 30
  CHECK(img.get(70, 30) == kColorCorrect);
  CHECK(count_color(img, kColorCorrect) == 1);
}

TEST_CASE("the nearest point wins a bev pixel") {
  PointCloud two;
  two.points.push_back({10.0, 10.0, 0.0, 0.0, 1});
  two.points.push_back({10.1, 9.9, 4.0, 0.0, 1});  // same bin, farther
  const std::vector<std::int32_t> gt{1, 1};
  const std::vector<std::int32_t> pred{1, 2};  // near point right, far point wrong
  const Image img = error_map_bev(two, pred, gt, 50.0, 20);
  CHECK(count_color(img, kColorCorrect) == 1);
  CHECK(count_color(img, kColorWrong) == 0);
}

TEST_CASE("red pixel count grows with the error count on fixed geometry") {
  Rng rng(2);
  PointCloud cloud = testutil::random_cloud(rng, 300, true);
  for (Point& p : cloud.points) {
    p.x *= 0.4;
    p.y *= 0.4;
  }
  const std::vector<std::int32_t>& gt = *cloud.labels;
  std::vector<std::int32_t> pred = gt;
  std::size_t previous = 0;
  for (std::size_t flip = 0; flip < cloud.size(); flip += 60) {
    for (std::size_t i = 0; i < flip; ++i) pred[i] = gt[i] + 1;
    const Image img = error_map_bev(cloud, pred, gt, 50.0, 64);
    const std::size_t red = count_color(img, kColorWrong);
    CHECK(red >= previous);
    previous = red;
  }
}

TEST_CASE("range-view error map") {
  const SensorSpec spec(10.0, 10.0, 2, 4);

  SECTION("an empty raster renders black") {
    const RangeImage img(2, 4);
    RangeImage with_book = img;
    const std::vector<std::int32_t> grid(8, 1);
    const Image out = error_map_range(img, grid, grid);
    CHECK(count_color(out, kColorEmpty) == 8);
  }
  SECTION("constructed 2x4 case is pixel-exact") {
    RangeImage img(2, 4);
    img.at(Channel::Existence, 0, 1) = 1.0;
    img.at(Channel::Existence, 1, 2) = 1.0;
    img.at(Channel::Existence, 1, 3) = 1.0;
    std::vector<std::int32_t> gt(8, 0), pred(8, 0);
    gt[0 * 4 + 1] = 1;
    pred[0 * 4 + 1] = 1;  // correct
    gt[1 * 4 + 2] = 2;
    pred[1 * 4 + 2] = 3;  // wrong
    gt[1 * 4 + 3] = 4;
    pred[1 * 4 + 3] = 4;  // correct
    const Image out = error_map_range(img, pred, gt);
    CHECK(out.get(1, 0) == kColorCorrect);
    CHECK(out.get(2, 1) == kColorWrong);
    CHECK(out.get(3, 1) == kColorCorrect);
    CHECK(count_color(out, kColorEmpty) == 5);
  }
  SECTION("perfect predictions are gray exactly on occupied grids") {
    Rng rng(3);
    const PointCloud cloud = testutil::random_cloud_in_fov(rng, 50, spec, true);
    const RangeImage img = rasterize(cloud, spec);
    const Image out = error_map_range(img, *img.label_grid, *img.label_grid);
    CHECK(count_color(out, kColorCorrect) == img.occupied_count());
    CHECK(count_color(out, kColorWrong) == 0);
  }
  SECTION("shape mismatch is rejected") {
    const RangeImage img(2, 4);
    CHECK_THROWS_AS(error_map_range(img, std::vector<std::int32_t>(3, 0),
                                    std::vector<std::int32_t>(8, 0)),
                    Error);
  }
}

TEST_CASE("ppm output is the P6 header plus raw bytes") {
  Image img(3, 2);
  img.set(0, 0, kColorWrong);
  img.set(2, 1, kColorCorrect);
  std::ostringstream out;
  write_ppm(img, out);
  const std::string bytes = out.str();
  REQUIRE(bytes.substr(0, 9) == "P6\n3 2\n25");
  const std::string payload = bytes.substr(bytes.find("255\n") + 4);
  REQUIRE(payload.size() == 3 * 2 * 3);
  CHECK(static_cast<unsigned char>(payload[0]) == 200);
  CHECK(static_cast<unsigned char>(payload[1]) == 30);
  CHECK(static_cast<unsigned char>(payload[2]) == 30);
  CHECK(static_cast<unsigned char>(payload[payload.size() - 3]) == 128);
}
