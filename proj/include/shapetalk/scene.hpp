#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace shapetalk {

using Rgb = std::array<std::uint8_t, 3>;

enum class ShapeKind { circle, ellipse, triangle, rectangle, square };

std::string_view to_string(ShapeKind kind);
std::optional<ShapeKind> shape_kind_from_string(std::string_view name);

/// A named fill color. Every palette entry shares the same base luma so that
/// hue lives entirely in the chroma plane and shade entirely in luma.
struct PaletteColor {
  std::string name;
  double cb;  ///< chroma offset from 128, 0-255 scale
  double cr;
};

inline constexpr double kPaletteLuma = 160.0;
inline constexpr double kMinShade = 0.45;
inline constexpr double kMaxShade = 1.0;
inline constexpr int kColorJitter = 12;
inline constexpr Rgb kBackground{245, 245, 245};

const std::vector<PaletteColor>& palette();
const PaletteColor* find_palette_color(std::string_view name);

/// Fill for a palette color at a luminance factor, before jitter.
Rgb shaded_color(const PaletteColor& color, double shade);

struct ShapeSpec {
  int id = 0;
  ShapeKind kind = ShapeKind::square;
  Rgb color{0, 0, 0};
  int cx = 0;  ///< bbox is [cx - w/2, cx - w/2 + w)
  int cy = 0;
  int w = 8;
  int h = 8;
  int z = 0;

  int x0() const { return cx - w / 2; }
  int y0() const { return cy - h / 2; }
  int x1() const { return x0() + w; }  ///< exclusive
  int y1() const { return y0() + h; }
  long bbox_area() const { return static_cast<long>(w) * h; }

  /// Whether the pixel (px, py) is painted by this shape, ignoring occlusion.
  bool covers(int px, int py) const;
};

struct Scene {
  std::string id;
  int width = 800;
  int height = 600;
  std::vector<ShapeSpec> shapes;
  int selected = 0;

  const ShapeSpec* find(int shape_id) const;
};

struct SceneConfig {
  int width = 800;
  int height = 600;
  int min_shapes = 3;
  int max_shapes = 8;
  double overlap_probability = 0.3;
  /// Largest share of a shape's bbox that a single higher shape may cover.
  double max_overlap = 0.5;
  /// Chance that one other shape copies the selected shape's color and kind.
  double twin_probability = 0.0;
  /// Side range; elongated kinds sample the shorter side and stretch the other.
  int min_size = 40;
  int max_size = 150;
  int max_retries = 400;
  std::vector<std::string> palette;  ///< empty = every palette color
};

struct Raster {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  ///< row-major RGB

  Rgb at(int x, int y) const {
    const auto i = 3 * (static_cast<std::size_t>(y) * width + x);
    return {pixels[i], pixels[i + 1], pixels[i + 2]};
  }
  bool is_background(int x, int y) const { return at(x, y) == kBackground; }
};

/// Throws GenerationError when placement fails or the config is unusable.
Scene generate_scene(const SceneConfig& config, std::uint64_t seed);

/// Checks the Scene invariants; returns a description of the first violation.
std::optional<std::string> validate_scene(const Scene& scene, double max_overlap = 1.0);

Raster rasterize(const Scene& scene);

/// Per-pixel id of the topmost shape covering it, -1 for background.
std::vector<int> ownership_map(const Scene& scene);

/// Fraction of `lower`'s bbox covered by `upper`'s bbox.
double bbox_overlap_fraction(const ShapeSpec& lower, const ShapeSpec& upper);

nlohmann::json to_json(const Scene& scene);
Scene scene_from_json(const nlohmann::json& j);

std::vector<Scene> read_scenes_jsonl(const std::filesystem::path& path);
void write_scenes_jsonl(const std::filesystem::path& path, const std::vector<Scene>& scenes);

std::string encode_png(const Raster& raster);

}  // namespace shapetalk
