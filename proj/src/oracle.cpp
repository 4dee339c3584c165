#include "shapetalk/oracle.hpp"

#include <algorithm>
#include <limits>
#include <random>

#include "shapetalk/error.hpp"
#include "shapetalk/features.hpp"

namespace shapetalk {

namespace {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) { return mix(a ^ mix(b)); }

std::string shape_word(const ShapeSpec& s) {
  switch (s.kind) {
    case ShapeKind::circle: return "circle";
    case ShapeKind::square: return "square";
    case ShapeKind::rectangle: return "rectangle";
    case ShapeKind::triangle: return "triangle";
    case ShapeKind::ellipse: {
      const double aspect = static_cast<double>(std::max(s.w, s.h)) / std::min(s.w, s.h);
      return aspect < kOvalAspect ? "oval" : "ellipse";
    }
  }
  return "circle";
}

}  // namespace

std::string nearest_color(Rgb color) {
  const auto ycc = rgb_to_ycbcr(color[0], color[1], color[2]);
  // Channel clamping bends chroma at the extremes, so compare against the
  // palette at the same shade.
  const double shade = std::clamp(ycc.y / kPaletteLuma, kMinShade, kMaxShade);
  std::string best;
  double best_d = std::numeric_limits<double>::max();
  for (const auto& p : palette()) {
    const auto ref = shaded_color(p, shade);
    const auto r = rgb_to_ycbcr(ref[0], ref[1], ref[2]);
    const double d = (r.cb - ycc.cb) * (r.cb - ycc.cb) + (r.cr - ycc.cr) * (r.cr - ycc.cr);
    if (d < best_d) {
      best_d = d;
      best = p.name;
    }
  }
  return best;
}

std::map<int, GoldFacts> gold_facts(const Scene& scene) {
  const auto owner = ownership_map(scene);
  std::map<int, GoldFacts> out;
  std::map<int, bool> occludes, occluded;
  for (const auto& a : scene.shapes) {
    for (const auto& b : scene.shapes) {
      if (a.id == b.id || a.z <= b.z) continue;
      const int x0 = std::max({a.x0(), b.x0(), 0});
      const int y0 = std::max({a.y0(), b.y0(), 0});
      const int x1 = std::min({a.x1(), b.x1(), scene.width});
      const int y1 = std::min({a.y1(), b.y1(), scene.height});
      long hidden = 0;
      for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x)
          if (b.covers(x, y) && owner[static_cast<std::size_t>(y) * scene.width + x] == a.id) ++hidden;
      if (hidden >= kOcclusionPixels) {
        occludes[a.id] = true;
        occluded[b.id] = true;
      }
    }
  }
  for (const auto& s : scene.shapes) {
    GoldFacts f;
    f.color = nearest_color(s.color);
    f.shape = shape_word(s);
    const auto ycc = rgb_to_ycbcr(s.color[0], s.color[1], s.color[2]);
    f.shade = ycc.y / kPaletteLuma >= kShadeThreshold ? "light" : "dark";
    if (occluded[s.id])
      f.depth = "background";
    else if (occludes[s.id])
      f.depth = "front";
    const double cx = s.x0() + s.w / 2.0;
    const double cy = s.y0() + s.h / 2.0;
    if (cx < scene.width / 3.0) f.horizontal = "left";
    if (cx > 2.0 * scene.width / 3.0) f.horizontal = "right";
    if (cy < scene.height / 3.0) f.vertical = "top";
    if (cy > 2.0 * scene.height / 3.0) f.vertical = "bottom";
    out.emplace(s.id, std::move(f));
  }
  return out;
}

GoldGrounding::GoldGrounding(const Scene& scene, const Lexicon& lexicon)
    : facts_(gold_facts(scene)), lexicon_(&lexicon) {}

double GoldGrounding::membership(int cls, std::string_view word, const SceneObject& object) const {
  const auto c = lexicon_->class_of(word);
  if (!c || *c != cls) throw LookupError("word '" + std::string(word) + "' is not in class " + std::to_string(cls));
  if (cls == 1 || cls == 4) return 1.0;
  const auto it = facts_.find(object.id);
  if (it == facts_.end()) return 0.0;
  const auto& f = it->second;
  auto is = [&](const std::optional<std::string>& v) { return v && *v == word; };
  switch (cls) {
    case 2: return is(f.depth) ? 1.0 : 0.0;
    case 3: return f.shape == word ? 1.0 : 0.0;
    case 5: return f.shade == word ? 1.0 : 0.0;
    case 6: return is(f.vertical) || is(f.horizontal) ? 1.0 : 0.0;
    case 7: return f.color == word ? 1.0 : 0.0;
    default: return 0.0;
  }
}

bool fillable(const Pattern& pattern, const GoldFacts& facts) {
  int positions = 0;
  for (int c : pattern) {
    if (c == 2 && !facts.depth) return false;
    if (c == 6) ++positions;
  }
  const int available = (facts.vertical ? 1 : 0) + (facts.horizontal ? 1 : 0);
  return positions <= available && !pattern.empty();
}

std::string misspell(const std::string& word, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> letter(0, 25);
  const int n = static_cast<int>(word.size());
  const int op = n <= 1 ? static_cast<int>(rng() % 2) : static_cast<int>(rng() % 3);
  std::string out = word;
  if (op == 0) {  // substitution
    const auto pos = static_cast<std::size_t>(rng() % static_cast<std::uint64_t>(n));
    char c;
    do c = static_cast<char>('a' + letter(rng));
    while (c == word[pos]);
    out[pos] = c;
  } else if (op == 1) {  // insertion
    const auto pos = static_cast<std::size_t>(rng() % static_cast<std::uint64_t>(n + 1));
    out.insert(out.begin() + static_cast<std::ptrdiff_t>(pos), static_cast<char>('a' + letter(rng)));
  } else {  // deletion
    out.erase(static_cast<std::size_t>(rng() % static_cast<std::uint64_t>(n)), 1);
  }
  return out;
}

OracleTrace oracle_describe_traced(const Scene& scene, int target_id, const OracleNoise& noise,
                                   const PatternTable& table, std::uint64_t seed) {
  const auto facts = gold_facts(scene);
  const auto it = facts.find(target_id);
  if (it == facts.end()) throw LookupError("scene '" + scene.id + "' has no shape " + std::to_string(target_id));
  const GoldFacts& f = it->second;

  std::vector<const PatternEntry*> options;
  std::vector<double> weights;
  for (const auto& e : table.entries()) {
    if (!fillable(e.pattern, f)) continue;
    options.push_back(&e);
    weights.push_back(e.frequency);
  }
  std::mt19937_64 rng(mix(seed, static_cast<std::uint64_t>(target_id)));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  OracleTrace t;
  if (options.empty()) {
    t.pattern = {3};
  } else {
    std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
    t.pattern = options[pick(rng)]->pattern;
  }

  const Lexicon& lex = default_lexicon();
  std::vector<std::string> positions;
  if (f.vertical) positions.push_back(*f.vertical);
  if (f.horizontal) positions.push_back(*f.horizontal);
  const int position_slots = static_cast<int>(std::count(t.pattern.begin(), t.pattern.end(), 6));
  if (position_slots == 1 && positions.size() == 2)
    positions = {positions[static_cast<std::size_t>(rng() % 2)]};
  std::size_t next_position = 0;

  for (int c : t.pattern) {
    std::string w;
    switch (c) {
      case 1: w = unit(rng) < 0.85 ? "the" : "a"; break;
      case 2: w = *f.depth; break;
      case 3: w = f.shape; break;
      case 4: {
        const double u = unit(rng);
        w = u < 0.85 ? "in" : u < 0.95 ? "at" : "on";
        break;
      }
      case 5: w = f.shade; break;
      case 6: w = positions.at(next_position++ % positions.size()); break;
      case 7: w = f.color; break;
      default: break;
    }
    if (c != 1 && c != 4 && noise.slip_rate > 0 && unit(rng) < noise.slip_rate) {
      const auto& members = lex.words(c);
      w = members[static_cast<std::size_t>(rng() % members.size())];
    }
    t.intended.push_back(w);
    const bool typo = noise.misspell_rate > 0 && unit(rng) < noise.misspell_rate;
    t.misspelled.push_back(typo);
    t.emitted.push_back(typo ? misspell(w, rng()) : w);
  }
  for (std::size_t i = 0; i < t.emitted.size(); ++i) t.text += (i ? " " : "") + t.emitted[i];
  return t;
}

std::string oracle_describe(const Scene& scene, int target_id, const OracleNoise& noise, const PatternTable& table,
                            std::uint64_t seed) {
  return oracle_describe_traced(scene, target_id, noise, table, seed).text;
}

std::vector<CorpusRow> synthesize_corpus(const std::vector<Scene>& scenes, const PatternTable& table,
                                         const CorpusOptions& options) {
  std::vector<CorpusRow> rows;
  for (std::size_t s = 0; s < scenes.size(); ++s) {
    const auto& scene = scenes[s];
    const auto objects = scene_objects(scene, options.mode);
    for (const auto& o : objects) {
      for (int k = 0; k < options.per_object; ++k) {
        const auto seed = mix(mix(options.seed, s), static_cast<std::uint64_t>(o.id) * 131 + static_cast<std::uint64_t>(k));
        rows.push_back({scene.id, o.id, oracle_describe(scene, o.id, options.noise, table, seed), "oracle", "oracle"});
      }
    }
  }
  return rows;
}

}  // namespace shapetalk
