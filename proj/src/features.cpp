#include <algorithm>
#include <cmath>
#include <numbers>

#include "shapetalk/error.hpp"
#include "shapetalk/features.hpp"

namespace shapetalk {

namespace {

constexpr std::array<std::string_view, kFeatureCount> kFeatureNames{
    "r",      "g",      "b",     "y",     "cb",         "cr",    "bbox_x0",
    "bbox_y0", "bbox_x1", "bbox_y1", "width", "height",     "cg_x",  "cg_y",
    "ell_orient", "major", "minor", "ext",   "hw_ratio",  "area",  "holes",
};

/// Pixels enclosed by the mask but not part of it (background reachable from
/// outside the bbox is excluded).
long hole_pixels(const RegionMask& mask) {
  const int x0 = mask.min_x() - 1;
  const int y0 = mask.min_y() - 1;
  const int w = mask.max_x() - mask.min_x() + 3;
  const int h = mask.max_y() - mask.min_y() + 3;
  auto inside_mask = [&](int lx, int ly) {
    const int x = lx + x0;
    const int y = ly + y0;
    return x >= 0 && y >= 0 && x < mask.width() && y < mask.height() && mask.contains(x, y);
  };
  std::vector<std::uint8_t> outside(static_cast<std::size_t>(w) * h, 0);
  std::vector<std::pair<int, int>> stack{{0, 0}};
  outside[0] = 1;
  while (!stack.empty()) {
    const auto [x, y] = stack.back();
    stack.pop_back();
    const std::pair<int, int> nbrs[4] = {{x - 1, y}, {x + 1, y}, {x, y - 1}, {x, y + 1}};
    for (const auto& [nx, ny] : nbrs) {
      if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
      auto& seen = outside[static_cast<std::size_t>(ny) * w + nx];
      if (seen || inside_mask(nx, ny)) continue;
      seen = 1;
      stack.emplace_back(nx, ny);
    }
  }
  long holes = 0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (!outside[static_cast<std::size_t>(y) * w + x] && !inside_mask(x, y)) ++holes;
  return holes;
}

}  // namespace

std::string_view feature_name(std::size_t index) { return kFeatureNames.at(index); }

std::optional<std::size_t> feature_index(std::string_view name) {
  for (std::size_t i = 0; i < kFeatureNames.size(); ++i)
    if (kFeatureNames[i] == name) return i;
  return std::nullopt;
}

nlohmann::json to_json(const FeatureVector& f) {
  nlohmann::json j = nlohmann::json::object();
  for (std::size_t i = 0; i < kFeatureCount; ++i) j[std::string(kFeatureNames[i])] = f[i];
  return j;
}

FeatureVector feature_vector_from_json(const nlohmann::json& j) {
  FeatureVector f;
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    const auto it = j.find(std::string(kFeatureNames[i]));
    if (it == j.end() || !it->is_number()) throw DataError("feature '" + std::string(kFeatureNames[i]) + "' missing");
    f[i] = it->get<double>();
  }
  return f;
}

RegionMask::RegionMask(int id, int width, int height, Rgb color)
    : id_(id),
      width_(width),
      height_(height),
      color_(color),
      bits_(static_cast<std::size_t>(width) * height, 0),
      min_x_(width),
      min_y_(height) {}

void RegionMask::add(int x, int y) {
  auto& bit = bits_[index(x, y)];
  if (bit) return;
  bit = 1;
  ++area_;
  min_x_ = std::min(min_x_, x);
  min_y_ = std::min(min_y_, y);
  max_x_ = std::max(max_x_, x);
  max_y_ = std::max(max_y_, y);
}

void RegionMask::merge(const RegionMask& other) {
  other.for_each([&](int x, int y) { add(x, y); });
}

YCbCr rgb_to_ycbcr(double r, double g, double b) {
  auto clamp = [](double v) { return std::clamp(v, 0.0, 255.0); };
  return {clamp(0.299 * r + 0.587 * g + 0.114 * b), clamp(128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b),
          clamp(128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b)};
}

MomentEllipse moment_ellipse(const RegionMask& mask) {
  if (mask.area() < 2) throw Error("moment ellipse needs at least two pixels");
  double sx = 0, sy = 0;
  mask.for_each([&](int x, int y) {
    sx += x;
    sy += y;
  });
  const double n = static_cast<double>(mask.area());
  const double mx = sx / n;
  const double my = sy / n;
  double sxx = 0, syy = 0, sxy = 0;
  mask.for_each([&](int x, int y) {
    const double dx = x - mx;
    const double dy = y - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  });
  // The 1/12 terms account for each pixel being a unit square, not a point.
  const double mu20 = sxx / n + 1.0 / 12.0;
  const double mu02 = syy / n + 1.0 / 12.0;
  const double mu11 = sxy / n;
  const double mean = 0.5 * (mu20 + mu02);
  const double spread = std::sqrt(0.25 * (mu20 - mu02) * (mu20 - mu02) + mu11 * mu11);
  const double l1 = mean + spread;
  const double l2 = std::max(0.0, mean - spread);
  double orientation = 0.5 * std::atan2(2.0 * mu11, mu20 - mu02);
  if (orientation <= -std::numbers::pi / 2) orientation += std::numbers::pi;
  return {orientation, 4.0 * std::sqrt(l1), std::max(1.0, 4.0 * std::sqrt(l2))};
}

FeatureVector extract_features(const RegionMask& mask, const Raster& raster) {
  if (mask.empty()) throw Error("cannot extract features from an empty mask");
  if (mask.width() != raster.width || mask.height() != raster.height)
    throw Error("mask and raster dimensions differ");

  double sr = 0, sg = 0, sb = 0, sy = 0, scb = 0, scr = 0, cx = 0, cy = 0;
  mask.for_each([&](int x, int y) {
    const Rgb c = raster.at(x, y);
    sr += c[0];
    sg += c[1];
    sb += c[2];
    const auto ycc = rgb_to_ycbcr(c[0], c[1], c[2]);
    sy += ycc.y;
    scb += ycc.cb;
    scr += ycc.cr;
    cx += x;
    cy += y;
  });
  const double n = static_cast<double>(mask.area());
  const double W = raster.width;
  const double H = raster.height;
  const int wpx = mask.max_x() - mask.min_x() + 1;
  const int hpx = mask.max_y() - mask.min_y() + 1;

  FeatureVector f;
  f[Feature::r] = sr / n / 255.0;
  f[Feature::g] = sg / n / 255.0;
  f[Feature::b] = sb / n / 255.0;
  f[Feature::y] = sy / n / 255.0;
  f[Feature::cb] = scb / n / 255.0;
  f[Feature::cr] = scr / n / 255.0;
  f[Feature::bbox_x0] = mask.min_x() / W;
  f[Feature::bbox_y0] = mask.min_y() / H;
  f[Feature::bbox_x1] = (mask.max_x() + 1) / W;
  f[Feature::bbox_y1] = (mask.max_y() + 1) / H;
  f[Feature::width] = wpx / W;
  f[Feature::height] = hpx / H;
  f[Feature::cg_x] = (cx / n + 0.5) / W;
  f[Feature::cg_y] = (cy / n + 0.5) / H;
  if (mask.area() >= 2) {
    const auto e = moment_ellipse(mask);
    const double diag = std::hypot(W, H);
    f[Feature::ell_orient] = e.orientation;
    f[Feature::major] = e.major / diag;
    f[Feature::minor] = e.minor / diag;
  } else {
    f[Feature::minor] = f[Feature::major] = 1.0 / std::hypot(W, H);
  }
  f[Feature::ext] = n / (static_cast<double>(wpx) * hpx);
  f[Feature::hw_ratio] = static_cast<double>(hpx) / std::max(1, wpx);
  f[Feature::area] = n / (W * H);
  f[Feature::holes] = 1.0 - n / (n + static_cast<double>(hole_pixels(mask)));
  return f;
}

}  // namespace shapetalk
