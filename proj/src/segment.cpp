#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>

#include "shapetalk/error.hpp"
#include "shapetalk/features.hpp"

namespace shapetalk {

namespace {

constexpr int kMaxBackgroundGap = 2;

class DisjointSet {
 public:
  explicit DisjointSet(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }
  std::size_t add() {
    parent_.push_back(parent_.size());
    return parent_.size() - 1;
  }

 private:
  std::vector<std::size_t> parent_;
};

struct Run {
  Rgb color;
  std::size_t component;
};

/// Walks one scanline (given as a pixel index sequence) and joins same-colored
/// components that are only separated by other foreground or a short gap.
template <typename IndexAt>
void bridge_scanline(int length, IndexAt&& index_at, const Raster& raster, const std::vector<long>& label,
                     DisjointSet& sets) {
  std::vector<Run> open;
  int gap = 0;
  long previous = -1;
  for (int i = 0; i < length; ++i) {
    const std::size_t p = index_at(i);
    const long l = label[p];
    if (l < 0) {
      if (++gap > kMaxBackgroundGap) open.clear();
      previous = -1;
      continue;
    }
    gap = 0;
    if (l == previous) continue;
    previous = l;
    const Rgb color{raster.pixels[3 * p], raster.pixels[3 * p + 1], raster.pixels[3 * p + 2]};
    for (const auto& run : open) {
      if (run.color == color && run.component != static_cast<std::size_t>(l))
        sets.unite(run.component, static_cast<std::size_t>(l));
    }
    open.push_back({color, static_cast<std::size_t>(l)});
  }
}

/// Whether the straight segment from a to b crosses no background run longer
/// than the allowed gap. Shapes are convex, so pieces of one occluded shape
/// always pass; pieces of two different shapes rarely do.
bool sees_through(const std::vector<long>& label, int w, std::size_t a, std::size_t b) {
  const int ax = static_cast<int>(a % w), ay = static_cast<int>(a / w);
  const int bx = static_cast<int>(b % w), by = static_cast<int>(b / w);
  const int steps = std::max(std::abs(bx - ax), std::abs(by - ay));
  int gap = 0;
  for (int i = 1; i < steps; ++i) {
    const double t = static_cast<double>(i) / steps;
    const auto x = static_cast<long>(std::lround(ax + t * (bx - ax)));
    const auto y = static_cast<long>(std::lround(ay + t * (by - ay)));
    if (label[static_cast<std::size_t>(y * w + x)] < 0) {
      if (++gap > kMaxBackgroundGap) return false;
    } else {
      gap = 0;
    }
  }
  return true;
}

std::vector<RegionMask> drop_small(std::vector<RegionMask> masks) {
  std::erase_if(masks, [](const RegionMask& m) { return m.area() < kMinRegionPixels; });
  return masks;
}

}  // namespace

std::vector<RegionMask> segment_color_regions(const Raster& raster) {
  const int w = raster.width;
  const int h = raster.height;
  const auto n = static_cast<std::size_t>(w) * h;
  std::vector<long> label(n, -1);
  auto same = [&](std::size_t a, std::size_t b) {
    return raster.pixels[3 * a] == raster.pixels[3 * b] && raster.pixels[3 * a + 1] == raster.pixels[3 * b + 1] &&
           raster.pixels[3 * a + 2] == raster.pixels[3 * b + 2];
  };

  // Exact-color 4-connected labelling, breadth first.
  long next = 0;
  std::vector<std::size_t> queue;
  for (std::size_t start = 0; start < n; ++start) {
    const int sx = static_cast<int>(start % w);
    const int sy = static_cast<int>(start / w);
    if (label[start] >= 0 || raster.is_background(sx, sy)) continue;
    label[start] = next;
    queue.assign(1, start);
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const std::size_t p = queue[head];
      const int x = static_cast<int>(p % w);
      const int y = static_cast<int>(p / w);
      const std::size_t nbrs[4] = {x > 0 ? p - 1 : p, x + 1 < w ? p + 1 : p, y > 0 ? p - w : p,
                                   y + 1 < h ? p + w : p};
      for (std::size_t q : nbrs) {
        if (q != p && label[q] < 0 && same(p, q)) {
          label[q] = next;
          queue.push_back(q);
        }
      }
    }
    ++next;
  }

  DisjointSet sets(static_cast<std::size_t>(next));
  for (int y = 0; y < h; ++y) {
    bridge_scanline(w, [&](int i) { return static_cast<std::size_t>(y) * w + i; }, raster, label, sets);
  }
  for (int x = 0; x < w; ++x) {
    bridge_scanline(h, [&](int i) { return static_cast<std::size_t>(i) * w + x; }, raster, label, sets);
  }

  // Pieces cut off diagonally share no scanline through their occluder; join
  // same-colored groups with a sampled pixel pair that sees across.
  std::map<std::size_t, std::vector<std::size_t>> members;
  for (std::size_t p = 0; p < n; ++p)
    if (label[p] >= 0) members[sets.find(static_cast<std::size_t>(label[p]))].push_back(p);
  // Samples: the pixel nearest the centroid, then the first, middle and last
  // pixel. Pieces of one shape may meet the canvas grid at shallow angles, so
  // a single clear pair is enough.
  std::vector<std::pair<std::size_t, std::array<std::size_t, 4>>> groups;
  for (const auto& [root, px] : members) {
    double mx = 0, my = 0;
    for (std::size_t p : px) {
      mx += static_cast<double>(p % w);
      my += static_cast<double>(p / w);
    }
    mx /= static_cast<double>(px.size());
    my /= static_cast<double>(px.size());
    std::size_t centre = px.front();
    double best = 1e300;
    for (std::size_t p : px) {
      const double dx = static_cast<double>(p % w) - mx, dy = static_cast<double>(p / w) - my;
      if (dx * dx + dy * dy < best) {
        best = dx * dx + dy * dy;
        centre = p;
      }
    }
    groups.push_back({root, {centre, px.front(), px[px.size() / 2], px.back()}});
  }
  for (std::size_t i = 0; i < groups.size(); ++i) {
    for (std::size_t j = i + 1; j < groups.size(); ++j) {
      const auto& a = groups[i].second;
      const auto& b = groups[j].second;
      if (!same(a[0], b[0]) || sets.find(groups[i].first) == sets.find(groups[j].first)) continue;
      bool joined = false;
      for (std::size_t k = 0; k < a.size() && !joined; ++k) joined = sees_through(label, w, a[k], b[k]);
      if (joined) sets.unite(groups[i].first, groups[j].first);
    }
  }

  std::map<std::size_t, std::size_t> root_to_mask;
  std::vector<RegionMask> masks;
  for (std::size_t p = 0; p < n; ++p) {
    if (label[p] < 0) continue;
    const std::size_t root = sets.find(static_cast<std::size_t>(label[p]));
    auto [it, inserted] = root_to_mask.try_emplace(root, masks.size());
    const int x = static_cast<int>(p % w);
    const int y = static_cast<int>(p / w);
    if (inserted) masks.emplace_back(static_cast<int>(masks.size()), w, h, raster.at(x, y));
    masks[it->second].add(x, y);
  }
  masks = drop_small(std::move(masks));
  for (std::size_t i = 0; i < masks.size(); ++i) masks[i].set_id(static_cast<int>(i));
  return masks;
}

std::vector<RegionMask> segment_ground_truth(const Raster& raster, const Scene& scene) {
  const auto owner = ownership_map(scene);
  std::map<int, RegionMask> by_id;
  for (const auto& s : scene.shapes) by_id.emplace(s.id, RegionMask(s.id, raster.width, raster.height, s.color));
  for (std::size_t p = 0; p < owner.size(); ++p) {
    if (owner[p] < 0) continue;
    by_id.at(owner[p]).add(static_cast<int>(p % raster.width), static_cast<int>(p / raster.width));
  }
  std::vector<RegionMask> masks;
  for (auto& [id, m] : by_id) masks.push_back(std::move(m));
  return drop_small(std::move(masks));
}

std::vector<RegionMask> segment(const Raster& raster, SegmentMode mode, const Scene* scene) {
  if (mode == SegmentMode::color_regions) return segment_color_regions(raster);
  if (!scene) throw Error("ground-truth segmentation needs the originating scene");
  return segment_ground_truth(raster, *scene);
}

std::vector<SceneObject> scene_objects(const Scene& scene, SegmentMode mode) {
  const Raster raster = rasterize(scene);
  auto masks = segment(raster, mode, &scene);
  std::map<int, std::pair<long, FeatureVector>> best;  // shape id -> (pixels, features)
  if (mode == SegmentMode::ground_truth) {
    for (const auto& m : masks) best[m.id()] = {m.area(), extract_features(m, raster)};
  } else {
    const auto owner = ownership_map(scene);
    for (const auto& m : masks) {
      std::map<int, long> votes;
      m.for_each([&](int x, int y) { ++votes[owner[static_cast<std::size_t>(y) * scene.width + x]]; });
      const auto top = std::max_element(votes.begin(), votes.end(),
                                        [](const auto& a, const auto& b) { return a.second < b.second; });
      if (top->first < 0) continue;
      auto it = best.find(top->first);
      if (it == best.end() || it->second.first < m.area())
        best[top->first] = {m.area(), extract_features(m, raster)};
    }
  }
  std::vector<SceneObject> objects;
  for (auto& [id, entry] : best) objects.push_back({id, entry.second});
  return objects;
}

}  // namespace shapetalk
