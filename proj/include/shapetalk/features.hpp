#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "shapetalk/scene.hpp"

namespace shapetalk {

/// Canonical feature order; names are the serialized JSON keys.
enum class Feature : std::size_t {
  r, g, b, y, cb, cr,
  bbox_x0, bbox_y0, bbox_x1, bbox_y1,
  width, height, cg_x, cg_y,
  ell_orient, major, minor,
  ext, hw_ratio, area, holes,
};

inline constexpr std::size_t kFeatureCount = 21;

std::string_view feature_name(std::size_t index);
inline std::string_view feature_name(Feature f) { return feature_name(static_cast<std::size_t>(f)); }
std::optional<std::size_t> feature_index(std::string_view name);

struct FeatureVector {
  std::array<double, kFeatureCount> values{};

  double operator[](Feature f) const { return values[static_cast<std::size_t>(f)]; }
  double& operator[](Feature f) { return values[static_cast<std::size_t>(f)]; }
  double operator[](std::size_t i) const { return values[i]; }
  double& operator[](std::size_t i) { return values[i]; }
  bool operator==(const FeatureVector&) const = default;
};

nlohmann::json to_json(const FeatureVector& f);
FeatureVector feature_vector_from_json(const nlohmann::json& j);

/// A set of canvas pixels believed to belong to one object.
class RegionMask {
 public:
  RegionMask(int id, int width, int height, Rgb color);

  void add(int x, int y);
  bool contains(int x, int y) const { return bits_[index(x, y)] != 0; }
  void merge(const RegionMask& other);

  int id() const { return id_; }
  void set_id(int id) { id_ = id; }
  int width() const { return width_; }
  int height() const { return height_; }
  Rgb color() const { return color_; }
  long area() const { return area_; }
  bool empty() const { return area_ == 0; }
  int min_x() const { return min_x_; }
  int min_y() const { return min_y_; }
  int max_x() const { return max_x_; }
  int max_y() const { return max_y_; }

  /// Calls fn(x, y) for every pixel, row-major.
  template <typename Fn>
  void for_each(Fn&& fn) const {
    for (int y = min_y_; y <= max_y_; ++y)
      for (int x = min_x_; x <= max_x_; ++x)
        if (contains(x, y)) fn(x, y);
  }

 private:
  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width_ + x; }

  int id_;
  int width_;
  int height_;
  Rgb color_;
  std::vector<std::uint8_t> bits_;
  long area_ = 0;
  int min_x_;
  int min_y_;
  int max_x_ = -1;
  int max_y_ = -1;
};

enum class SegmentMode { color_regions, ground_truth };

inline constexpr long kMinRegionPixels = 30;

/// Exact-color 4-connected components, with same-color pieces re-joined when a
/// row, column or sampled straight segment crosses from one to the other
/// through occluding foreground or a background gap of at most two pixels.
std::vector<RegionMask> segment_color_regions(const Raster& raster);

/// One mask per visible shape, from z-order pixel ownership. Mask id = shape id.
std::vector<RegionMask> segment_ground_truth(const Raster& raster, const Scene& scene);

std::vector<RegionMask> segment(const Raster& raster, SegmentMode mode, const Scene* scene = nullptr);

struct YCbCr {
  double y;
  double cb;
  double cr;
};

/// BT.601 full range, each channel clamped to [0, 255].
YCbCr rgb_to_ycbcr(double r, double g, double b);

struct MomentEllipse {
  double orientation;  ///< radians in (-pi/2, pi/2]
  double major;        ///< pixels
  double minor;        ///< pixels, >= 1
};

/// Ellipse with the same second central moments as the mask. Needs area >= 2.
MomentEllipse moment_ellipse(const RegionMask& mask);

FeatureVector extract_features(const RegionMask& mask, const Raster& raster);

/// A segmented object, keyed by the id of the scene shape it shows.
struct SceneObject {
  int id = 0;
  FeatureVector features;
};

/// Rasterizes and segments a scene, attributing each mask to the shape that
/// owns most of its pixels. Objects are sorted by id.
std::vector<SceneObject> scene_objects(const Scene& scene, SegmentMode mode = SegmentMode::color_regions);

}  // namespace shapetalk
