#include "shapetalk/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include "shapetalk/error.hpp"

namespace shapetalk {

namespace {

constexpr std::array<std::string_view, 5> kKindNames{"circle", "ellipse", "triangle", "rectangle", "square"};
constexpr int kMaxShapes = 12;
constexpr long kMinVisiblePixels = 60;

std::uint8_t clamp_channel(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

struct Attributes {
  ShapeKind kind;
  const PaletteColor* color;
  double shade;
  std::array<int, 3> jitter;
  int w;
  int h;
};

class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : rng_(seed) {}

  int uniform_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  bool chance(double p) { return p > 0.0 && uniform(0.0, 1.0) < p; }
  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

void sample_size(Sampler& s, const SceneConfig& cfg, Attributes& a) {
  const int lo = cfg.min_size;
  const int hi = cfg.max_size;
  switch (a.kind) {
    case ShapeKind::circle:
    case ShapeKind::square:
      a.w = a.h = s.uniform_int(lo, hi);
      break;
    case ShapeKind::rectangle:
    case ShapeKind::ellipse: {
      const int short_hi = std::max(lo, static_cast<int>(hi * 0.6));
      const int shorter = s.uniform_int(lo, short_hi);
      const double aspect = a.kind == ShapeKind::rectangle ? s.uniform(1.5, 2.5) : s.uniform(1.3, 2.4);
      const int longer = static_cast<int>(std::lround(shorter * aspect));
      if (s.chance(0.5)) {
        a.w = longer;
        a.h = shorter;
      } else {
        a.w = shorter;
        a.h = longer;
      }
      break;
    }
    case ShapeKind::triangle:
      a.w = s.uniform_int(lo, hi);
      a.h = std::max(8, static_cast<int>(std::lround(a.w * s.uniform(0.7, 1.3))));
      break;
  }
  a.w = std::min(a.w, cfg.width);
  a.h = std::min(a.h, cfg.height);
}

bool bboxes_intersect(const ShapeSpec& a, const ShapeSpec& b) {
  return a.x0() < b.x1() && b.x0() < a.x1() && a.y0() < b.y1() && b.y0() < a.y1();
}

bool placement_ok(const ShapeSpec& cand, const std::vector<ShapeSpec>& placed, const SceneConfig& cfg) {
  if (cand.x0() < 0 || cand.y0() < 0 || cand.x1() > cfg.width || cand.y1() > cfg.height) return false;
  for (const auto& other : placed) {
    if (!bboxes_intersect(cand, other)) continue;
    const auto& lower = cand.z < other.z ? cand : other;
    const auto& upper = cand.z < other.z ? other : cand;
    if (bbox_overlap_fraction(lower, upper) > cfg.max_overlap) return false;
  }
  return true;
}

std::vector<long> visible_counts(const Scene& scene) {
  const auto owner = ownership_map(scene);
  std::vector<long> counts(scene.shapes.size(), 0);
  for (int id : owner) {
    if (id < 0) continue;
    for (std::size_t i = 0; i < scene.shapes.size(); ++i) {
      if (scene.shapes[i].id == id) {
        ++counts[i];
        break;
      }
    }
  }
  return counts;
}

bool try_place(Sampler& s, const SceneConfig& cfg, std::vector<ShapeSpec>& shapes) {
  std::vector<ShapeSpec> placed;
  placed.reserve(shapes.size());
  for (auto shape : shapes) {
    const bool want_overlap = !placed.empty() && s.chance(cfg.overlap_probability);
    const ShapeSpec* anchor =
        want_overlap ? &placed[static_cast<std::size_t>(s.uniform_int(0, static_cast<int>(placed.size()) - 1))]
                     : nullptr;
    bool ok = false;
    for (int attempt = 0; attempt < cfg.max_retries && !ok; ++attempt) {
      const bool preferred = attempt < cfg.max_retries / 2;
      if (anchor && preferred) {
        const int dx = (anchor->w + shape.w) / 2 - 1;
        const int dy = (anchor->h + shape.h) / 2 - 1;
        shape.cx = anchor->cx + s.uniform_int(-dx, dx);
        shape.cy = anchor->cy + s.uniform_int(-dy, dy);
      } else {
        shape.cx = s.uniform_int(shape.w / 2, cfg.width - (shape.w - shape.w / 2));
        shape.cy = s.uniform_int(shape.h / 2, cfg.height - (shape.h - shape.h / 2));
      }
      if (!placement_ok(shape, placed, cfg)) continue;
      if (preferred) {
        const bool touches = std::any_of(placed.begin(), placed.end(),
                                         [&](const ShapeSpec& o) { return bboxes_intersect(shape, o); });
        if (anchor ? !bboxes_intersect(shape, *anchor) : touches) continue;
      }
      ok = true;
    }
    if (!ok) return false;
    placed.push_back(shape);
  }
  shapes = std::move(placed);
  return true;
}

}  // namespace

std::string_view to_string(ShapeKind kind) { return kKindNames[static_cast<std::size_t>(kind)]; }

std::optional<ShapeKind> shape_kind_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == name) return static_cast<ShapeKind>(i);
  }
  return std::nullopt;
}

const std::vector<PaletteColor>& palette() {
  // Chroma points are spread at least ~33 units apart and stay inside the RGB
  // gamut for every luma in [kMinShade, kMaxShade] * kPaletteLuma.
  static const std::vector<PaletteColor> colors{
      {"pink", 15.0, 62.0},   {"blue", 50.0, -35.0},   {"green", -35.0, -45.0},
      {"orange", -40.0, 45.0}, {"red", -20.0, 67.0},    {"yellow", -40.0, 5.0},
      {"purple", 50.0, 5.0},   {"violet", 40.0, 40.0},  {"brown", -5.0, 25.0},
  };
  return colors;
}

const PaletteColor* find_palette_color(std::string_view name) {
  for (const auto& c : palette()) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

Rgb shaded_color(const PaletteColor& color, double shade) {
  const double y = kPaletteLuma * shade;
  return {clamp_channel(y + 1.402 * color.cr), clamp_channel(y - 0.344136 * color.cb - 0.714136 * color.cr),
          clamp_channel(y + 1.772 * color.cb)};
}

bool ShapeSpec::covers(int px, int py) const {
  if (px < x0() || px >= x1() || py < y0() || py >= y1()) return false;
  const double x = px + 0.5;
  const double y = py + 0.5;
  const double half_w = w / 2.0;
  const double half_h = h / 2.0;
  switch (kind) {
    case ShapeKind::rectangle:
    case ShapeKind::square:
      return true;
    case ShapeKind::circle:
    case ShapeKind::ellipse: {
      const double u = (x - (x0() + half_w)) / half_w;
      const double v = (y - (y0() + half_h)) / half_h;
      return u * u + v * v <= 1.0;
    }
    case ShapeKind::triangle: {
      const double t = (y - y0()) / h;
      return std::abs(x - (x0() + half_w)) <= half_w * t;
    }
  }
  return false;
}

const ShapeSpec* Scene::find(int shape_id) const {
  for (const auto& s : shapes) {
    if (s.id == shape_id) return &s;
  }
  return nullptr;
}

double bbox_overlap_fraction(const ShapeSpec& lower, const ShapeSpec& upper) {
  const long ix = std::max(0, std::min(lower.x1(), upper.x1()) - std::max(lower.x0(), upper.x0()));
  const long iy = std::max(0, std::min(lower.y1(), upper.y1()) - std::max(lower.y0(), upper.y0()));
  return static_cast<double>(ix * iy) / static_cast<double>(lower.bbox_area());
}

Scene generate_scene(const SceneConfig& cfg, std::uint64_t seed) {
  if (cfg.min_shapes < 1 || cfg.max_shapes < cfg.min_shapes || cfg.max_shapes > kMaxShapes)
    throw GenerationError("shape count range must lie within [1, 12]");
  if (cfg.min_size < 8 || cfg.max_size < cfg.min_size)
    throw GenerationError("shape size range must be non-empty with a minimum of 8 px");
  if (cfg.min_size > cfg.width || cfg.min_size > cfg.height)
    throw GenerationError("canvas smaller than the minimum shape size");

  std::vector<const PaletteColor*> colors;
  if (cfg.palette.empty()) {
    for (const auto& c : palette()) colors.push_back(&c);
  } else {
    for (const auto& name : cfg.palette) {
      const auto* c = find_palette_color(name);
      if (!c) throw GenerationError("unknown palette color '" + name + "'");
      colors.push_back(c);
    }
  }

  Sampler s(seed);
  const int n = s.uniform_int(cfg.min_shapes, cfg.max_shapes);
  std::vector<Attributes> attrs(static_cast<std::size_t>(n));
  for (auto& a : attrs) {
    a.kind = static_cast<ShapeKind>(s.uniform_int(0, 4));
    a.color = colors[static_cast<std::size_t>(s.uniform_int(0, static_cast<int>(colors.size()) - 1))];
    a.shade = s.uniform(kMinShade, kMaxShade);
    for (auto& j : a.jitter) j = s.uniform_int(-kColorJitter, kColorJitter);
    sample_size(s, cfg, a);
  }
  const int selected = s.uniform_int(0, n - 1);
  if (n >= 2 && s.chance(cfg.twin_probability)) {
    int twin = s.uniform_int(0, n - 2);
    if (twin >= selected) ++twin;
    auto& t = attrs[static_cast<std::size_t>(twin)];
    t.kind = attrs[static_cast<std::size_t>(selected)].kind;
    t.color = attrs[static_cast<std::size_t>(selected)].color;
    sample_size(s, cfg, t);
  }
  std::vector<int> z(static_cast<std::size_t>(n));
  std::iota(z.begin(), z.end(), 0);
  std::shuffle(z.begin(), z.end(), s.engine());

  std::vector<ShapeSpec> shapes;
  for (int i = 0; i < n; ++i) {
    const auto& a = attrs[static_cast<std::size_t>(i)];
    ShapeSpec spec;
    spec.id = i + 1;
    spec.kind = a.kind;
    const Rgb base = shaded_color(*a.color, a.shade);
    for (std::size_t c = 0; c < 3; ++c) spec.color[c] = clamp_channel(base[c] + a.jitter[c]);
    spec.w = a.w;
    spec.h = a.h;
    spec.z = z[static_cast<std::size_t>(i)];
    shapes.push_back(spec);
  }

  Scene scene;
  scene.id = "scene-" + std::to_string(seed);
  scene.width = cfg.width;
  scene.height = cfg.height;
  scene.selected = selected + 1;
  constexpr int kLayoutAttempts = 20;
  for (int layout = 0; layout < kLayoutAttempts; ++layout) {
    auto candidate = shapes;
    if (!try_place(s, cfg, candidate)) continue;
    scene.shapes = std::move(candidate);
    const auto counts = visible_counts(scene);
    if (std::all_of(counts.begin(), counts.end(), [](long c) { return c >= kMinVisiblePixels; })) return scene;
  }
  throw GenerationError("could not place " + std::to_string(n) + " shapes on a " + std::to_string(cfg.width) +
                        "x" + std::to_string(cfg.height) + " canvas");
}

std::optional<std::string> validate_scene(const Scene& scene, double max_overlap) {
  if (scene.shapes.empty() || scene.shapes.size() > kMaxShapes) return "shape count outside [1, 12]";
  std::set<int> ids;
  for (const auto& s : scene.shapes) {
    if (!ids.insert(s.id).second) return "duplicate shape id " + std::to_string(s.id);
    if (s.w < 8 || s.h < 8) return "shape " + std::to_string(s.id) + " smaller than 8 px";
    if ((s.kind == ShapeKind::square || s.kind == ShapeKind::circle) && s.w != s.h)
      return "shape " + std::to_string(s.id) + " must have equal sides";
    if (s.x0() < 0 || s.y0() < 0 || s.x1() > scene.width || s.y1() > scene.height)
      return "shape " + std::to_string(s.id) + " leaves the canvas";
  }
  if (!ids.count(scene.selected)) return "selected id not among shapes";
  for (const auto& a : scene.shapes) {
    for (const auto& b : scene.shapes) {
      if (a.id == b.id || a.z > b.z) continue;
      if (bbox_overlap_fraction(a, b) > max_overlap + 1e-12)
        return "overlap between " + std::to_string(a.id) + " and " + std::to_string(b.id) + " too large";
    }
  }
  return std::nullopt;
}

namespace {

std::vector<std::size_t> paint_order(const Scene& scene) {
  std::vector<std::size_t> order(scene.shapes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scene.shapes[a].z < scene.shapes[b].z; });
  return order;
}

template <typename Paint>
void paint_back_to_front(const Scene& scene, Paint&& paint) {
  for (std::size_t idx : paint_order(scene)) {
    const auto& s = scene.shapes[idx];
    const int ya = std::max(0, s.y0());
    const int yb = std::min(scene.height, s.y1());
    const int xa = std::max(0, s.x0());
    const int xb = std::min(scene.width, s.x1());
    for (int y = ya; y < yb; ++y) {
      for (int x = xa; x < xb; ++x) {
        if (s.covers(x, y)) paint(static_cast<std::size_t>(y) * scene.width + x, s);
      }
    }
  }
}

}  // namespace

Raster rasterize(const Scene& scene) {
  Raster r;
  r.width = scene.width;
  r.height = scene.height;
  r.pixels.resize(3 * static_cast<std::size_t>(r.width) * r.height);
  for (std::size_t i = 0; i < r.pixels.size(); i += 3) {
    std::copy(kBackground.begin(), kBackground.end(), r.pixels.begin() + static_cast<std::ptrdiff_t>(i));
  }
  paint_back_to_front(scene, [&](std::size_t p, const ShapeSpec& s) {
    std::copy(s.color.begin(), s.color.end(), r.pixels.begin() + static_cast<std::ptrdiff_t>(3 * p));
  });
  return r;
}

std::vector<int> ownership_map(const Scene& scene) {
  std::vector<int> owner(static_cast<std::size_t>(scene.width) * scene.height, -1);
  paint_back_to_front(scene, [&](std::size_t p, const ShapeSpec& s) { owner[p] = s.id; });
  return owner;
}

nlohmann::json to_json(const Scene& scene) {
  nlohmann::json shapes = nlohmann::json::array();
  for (const auto& s : scene.shapes) {
    shapes.push_back({{"id", s.id},
                      {"kind", to_string(s.kind)},
                      {"color", {s.color[0], s.color[1], s.color[2]}},
                      {"center", {s.cx, s.cy}},
                      {"size", {s.w, s.h}},
                      {"z", s.z}});
  }
  return {{"id", scene.id},
          {"width", scene.width},
          {"height", scene.height},
          {"selected", scene.selected},
          {"shapes", std::move(shapes)}};
}

Scene scene_from_json(const nlohmann::json& j) {
  try {
    Scene scene;
    scene.id = j.at("id").get<std::string>();
    scene.width = j.at("width").get<int>();
    scene.height = j.at("height").get<int>();
    scene.selected = j.at("selected").get<int>();
    for (const auto& js : j.at("shapes")) {
      ShapeSpec s;
      s.id = js.at("id").get<int>();
      const auto kind_name = js.at("kind").get<std::string>();
      const auto kind = shape_kind_from_string(kind_name);
      if (!kind) throw DataError("unknown shape kind '" + kind_name + "'");
      s.kind = *kind;
      const auto& color = js.at("color");
      for (std::size_t c = 0; c < 3; ++c) s.color[c] = static_cast<std::uint8_t>(color.at(c).get<int>());
      s.cx = js.at("center").at(0).get<int>();
      s.cy = js.at("center").at(1).get<int>();
      s.w = js.at("size").at(0).get<int>();
      s.h = js.at("size").at(1).get<int>();
      s.z = js.at("z").get<int>();
      scene.shapes.push_back(s);
    }
    if (auto problem = validate_scene(scene)) throw DataError("invalid scene '" + scene.id + "': " + *problem);
    return scene;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed scene JSON: ") + e.what());
  }
}

std::vector<Scene> read_scenes_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open scenes file " + path.string());
  std::vector<Scene> scenes;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      scenes.push_back(scene_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw DataError("bad line in " + path.string() + ": " + e.what());
    }
  }
  return scenes;
}

void write_scenes_jsonl(const std::filesystem::path& path, const std::vector<Scene>& scenes) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write scenes file " + path.string());
  for (const auto& s : scenes) out << to_json(s).dump() << '\n';
}

}  // namespace shapetalk
