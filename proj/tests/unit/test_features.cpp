#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "shapetalk/error.hpp"
#include "shapetalk/features.hpp"
#include "shapetalk/scene.hpp"

using namespace shapetalk;

namespace {

ShapeSpec shape(int id, ShapeKind kind, int cx, int cy, int w, int h, Rgb color, int z = 0) {
  ShapeSpec s;
  s.id = id;
  s.kind = kind;
  s.cx = cx;
  s.cy = cy;
  s.w = w;
  s.h = h;
  s.color = color;
  s.z = z;
  return s;
}

Scene scene_of(std::vector<ShapeSpec> shapes) {
  Scene s;
  s.id = "t";
  s.width = 400;
  s.height = 300;
  s.shapes = std::move(shapes);
  s.selected = s.shapes.front().id;
  return s;
}

FeatureVector features_of(const Scene& s, int id) {
  for (const auto& o : scene_objects(s, SegmentMode::ground_truth))
    if (o.id == id) return o.features;
  FAIL("object not found");
  return {};
}

std::vector<std::vector<std::size_t>> pixel_sets(const std::vector<RegionMask>& masks) {
  std::vector<std::vector<std::size_t>> out;
  for (const auto& m : masks) {
    std::vector<std::size_t> px;
    m.for_each([&](int x, int y) { px.push_back(static_cast<std::size_t>(y) * m.width() + x); });
    out.push_back(std::move(px));
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_CASE("feature names round-trip") {
  for (std::size_t i = 0; i < kFeatureCount; ++i) CHECK(feature_index(feature_name(i)) == i);
  CHECK_FALSE(feature_index("nope").has_value());
  FeatureVector f;
  for (std::size_t i = 0; i < kFeatureCount; ++i) f[i] = 0.01 * static_cast<double>(i);
  CHECK(feature_vector_from_json(to_json(f)) == f);
}

TEST_CASE("YCbCr follows BT.601 full range") {
  std::mt19937 rng(3);
  std::uniform_int_distribution<int> channel(0, 255);
  for (int i = 0; i < 200; ++i) {
    const double r = channel(rng), g = channel(rng), b = channel(rng);
    const auto c = rgb_to_ycbcr(r, g, b);
    const double y = 0.299 * r + 0.587 * g + 0.114 * b;
    CHECK(c.y == doctest::Approx(std::clamp(y, 0.0, 255.0)).epsilon(1e-9));
    CHECK(c.cb == doctest::Approx(std::clamp(128 + 0.564 * (b - y), 0.0, 255.0)).epsilon(0.003));
    CHECK(c.cr == doctest::Approx(std::clamp(128 + 0.713 * (r - y), 0.0, 255.0)).epsilon(0.003));
  }
}

TEST_CASE("circle extent is pi/4") {
  const auto f = features_of(scene_of({shape(1, ShapeKind::circle, 200, 150, 120, 120, {200, 40, 40})}), 1);
  CHECK(std::abs(f[Feature::ext] - std::numbers::pi / 4) <= 0.02);
  CHECK(f[Feature::hw_ratio] == doctest::Approx(1.0));
  CHECK(f[Feature::holes] == 0.0);
}

TEST_CASE("80x20 rectangle moment ellipse has axis ratio 4") {
  const auto s = scene_of({shape(1, ShapeKind::rectangle, 200, 150, 80, 20, {40, 200, 40})});
  const auto masks = segment(rasterize(s), SegmentMode::ground_truth, &s);
  REQUIRE(masks.size() == 1);
  const auto e = moment_ellipse(masks[0]);
  CHECK(std::abs(e.major / e.minor - 4.0) <= 0.1);
  CHECK(std::abs(e.orientation) < 1e-6);
  const auto f = features_of(s, 1);
  CHECK(f[Feature::ext] == doctest::Approx(1.0));
  CHECK(f[Feature::hw_ratio] == doctest::Approx(0.25));
  CHECK(f[Feature::area] == doctest::Approx(1600.0 / (400 * 300)));
  CHECK(f[Feature::width] == doctest::Approx(80.0 / 400));
  CHECK(f[Feature::bbox_x0] == doctest::Approx(160.0 / 400));
  CHECK(f[Feature::cg_x] == doctest::Approx(0.5));
}

TEST_CASE("a tall rectangle's major axis is vertical") {
  const auto s = scene_of({shape(1, ShapeKind::rectangle, 200, 150, 20, 80, {40, 200, 40})});
  const auto masks = segment(rasterize(s), SegmentMode::ground_truth, &s);
  const auto e = moment_ellipse(masks.at(0));
  CHECK(std::abs(std::abs(e.orientation) - std::numbers::pi / 2) < 1e-6);
}

TEST_CASE("an inner shape makes a hole") {
  const auto s = scene_of({shape(1, ShapeKind::square, 200, 150, 120, 120, {40, 40, 200}, 0),
                           shape(2, ShapeKind::square, 200, 150, 40, 40, {200, 200, 40}, 1)});
  const auto f = features_of(s, 1);
  const double visible = 120.0 * 120 - 40 * 40;
  CHECK(f[Feature::holes] == doctest::Approx(1.0 - visible / (120.0 * 120)));
  CHECK(f[Feature::ext] == doctest::Approx(visible / (120.0 * 120)));
  CHECK(features_of(s, 2)[Feature::holes] == 0.0);
}

TEST_CASE("mean color features") {
  const auto f = features_of(scene_of({shape(1, ShapeKind::square, 100, 100, 50, 50, {51, 102, 204})}), 1);
  CHECK(f[Feature::r] == doctest::Approx(0.2));
  CHECK(f[Feature::g] == doctest::Approx(0.4));
  CHECK(f[Feature::b] == doctest::Approx(0.8));
  CHECK(f[Feature::y] == doctest::Approx((0.299 * 51 + 0.587 * 102 + 0.114 * 204) / 255));
}

TEST_CASE("color segmentation equals ground truth on hard-edged scenes with distinct colors") {
  int compared = 0;
  for (std::uint64_t seed = 1; compared < 100; ++seed) {
    REQUIRE(seed < 400);
    SceneConfig cfg;
    cfg.overlap_probability = 0.5;
    const auto s = generate_scene(cfg, seed);
    std::set<Rgb> colors;
    for (const auto& sh : s.shapes) colors.insert(sh.color);
    if (colors.size() != s.shapes.size() || colors.count(kBackground)) continue;
    const auto r = rasterize(s);
    const auto a = pixel_sets(segment(r, SegmentMode::color_regions));
    const auto b = pixel_sets(segment(r, SegmentMode::ground_truth, &s));
    CHECK_MESSAGE(a == b, "seed " << seed);
    ++compared;
  }
}

TEST_CASE("occluded pieces of one shape are rejoined") {
  // A bar in front splits the back square into two same-colored pieces.
  const auto s = scene_of({shape(1, ShapeKind::square, 200, 150, 120, 120, {40, 40, 200}, 0),
                           shape(2, ShapeKind::rectangle, 200, 150, 200, 20, {200, 200, 40}, 1)});
  const auto masks = segment(rasterize(s), SegmentMode::color_regions);
  CHECK(masks.size() == 2);
  const auto objects = scene_objects(s);
  REQUIRE(objects.size() == 2);
  CHECK(objects[0].id == 1);
  CHECK(objects[1].id == 2);
}

TEST_CASE("ground-truth segmentation needs the scene") {
  const auto s = scene_of({shape(1, ShapeKind::square, 200, 150, 50, 50, {40, 40, 200})});
  CHECK_THROWS_AS(segment(rasterize(s), SegmentMode::ground_truth), Error);
}
