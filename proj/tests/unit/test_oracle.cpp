#include <doctest.h>

#include <numeric>

#include "shapetalk/error.hpp"
#include "shapetalk/lexicon.hpp"
#include "shapetalk/oracle.hpp"

using namespace shapetalk;

namespace {

ShapeSpec shape(int id, ShapeKind kind, const char* color, double shade, int cx, int cy, int w, int h, int z) {
  ShapeSpec s;
  s.id = id;
  s.kind = kind;
  s.color = shaded_color(*find_palette_color(color), shade);
  s.cx = cx;
  s.cy = cy;
  s.w = w;
  s.h = h;
  s.z = z;
  return s;
}

// Hand-placed scene whose gold words are known by construction.
Scene layout() {
  Scene s;
  s.id = "layout";
  s.width = 600;
  s.height = 300;
  s.shapes = {
      shape(1, ShapeKind::circle, "red", 1.0, 60, 50, 60, 60, 0),            // top left, alone
      shape(2, ShapeKind::square, "blue", 0.5, 300, 150, 100, 100, 1),       // middle, behind 3
      shape(3, ShapeKind::triangle, "green", 1.0, 330, 170, 80, 80, 2),      // in front of 2
      shape(4, ShapeKind::ellipse, "yellow", 0.9, 540, 260, 100, 40, 3),     // bottom right, flat
      shape(5, ShapeKind::ellipse, "purple", 0.6, 300, 270, 50, 40, 4),      // bottom, round
  };
  s.selected = 3;
  return s;
}

std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  std::iota(prev.begin(), prev.end(), 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

}  // namespace

TEST_CASE("gold facts of a hand-placed scene") {
  const auto f = gold_facts(layout());
  CHECK(f.at(1).color == "red");
  CHECK(f.at(1).shape == "circle");
  CHECK(f.at(1).shade == "light");
  CHECK(f.at(1).vertical == "top");
  CHECK(f.at(1).horizontal == "left");
  CHECK_FALSE(f.at(1).depth.has_value());

  CHECK(f.at(2).color == "blue");
  CHECK(f.at(2).shade == "dark");
  CHECK(f.at(2).depth == "background");
  CHECK_FALSE(f.at(2).vertical.has_value());
  CHECK_FALSE(f.at(2).horizontal.has_value());

  CHECK(f.at(3).shape == "triangle");
  CHECK(f.at(3).depth == "front");

  CHECK(f.at(4).shape == "ellipse");
  CHECK(f.at(4).vertical == "bottom");
  CHECK(f.at(4).horizontal == "right");
  CHECK(f.at(5).shape == "oval");
}

TEST_CASE("every palette color is recovered at every shade") {
  for (const auto& p : palette())
    for (double shade : {0.45, 0.6, 0.725, 0.9, 1.0}) CHECK_MESSAGE(nearest_color(shaded_color(p, shade)) == p.name, p.name);
}

TEST_CASE("gold grounding") {
  const auto s = layout();
  const GoldGrounding g(s);
  CHECK(g.membership(7, "red", {1, {}}) == 1.0);
  CHECK(g.membership(7, "blue", {1, {}}) == 0.0);
  CHECK(g.membership(1, "a", {1, {}}) == 1.0);
  CHECK(g.membership(6, "left", {1, {}}) == 1.0);
  CHECK(g.membership(6, "right", {1, {}}) == 0.0);
  CHECK_THROWS_AS(g.membership(7, "circle", {1, {}}), LookupError);
}

TEST_CASE("fillable respects missing facts") {
  const auto f = gold_facts(layout());
  CHECK(fillable({7, 3}, f.at(1)));
  CHECK_FALSE(fillable({1, 7, 3, 4, 1, 2}, f.at(1)));
  CHECK(fillable({1, 7, 3, 4, 1, 2}, f.at(3)));
  CHECK(fillable({6, 6}, f.at(1)));
  CHECK_FALSE(fillable({6}, f.at(2)));
  CHECK_FALSE(fillable({}, f.at(1)));
}

TEST_CASE("misspellings are exactly one edit") {
  for (std::uint64_t seed = 0; seed < 2000; ++seed) {
    const std::string word = seed % 3 ? "rectangle" : (seed % 2 ? "a" : "in");
    const auto m = misspell(word, seed);
    CHECK(edit_distance(word, m) == 1);
    CHECK_FALSE(m.empty());
  }
}

TEST_CASE("oracle descriptions parse back to the intended words") {
  const auto s = layout();
  OracleNoise clean;
  clean.misspell_rate = 0.0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const auto t = oracle_describe_traced(s, 3, clean, reference_pattern_table(), seed);
    const auto d = parse(t.text, default_lexicon());
    CHECK(d.pattern == t.pattern);
    std::vector<std::string> words;
    for (const auto& c : d.constraints) words.push_back(c.word);
    CHECK(words == t.intended);
    CHECK(reference_pattern_table().contains(t.pattern));
  }
  CHECK_THROWS_AS(oracle_describe(s, 99, clean, reference_pattern_table(), 1), LookupError);
}

TEST_CASE("misspelling rate is honoured") {
  OracleNoise noisy;
  noisy.misspell_rate = 0.2;
  long words = 0, wrong = 0;
  for (std::uint64_t seed = 1; seed <= 400; ++seed) {
    const auto t = oracle_describe_traced(layout(), 1 + static_cast<int>(seed % 5), noisy, reference_pattern_table(), seed);
    for (std::size_t i = 0; i < t.emitted.size(); ++i) {
      ++words;
      if (t.misspelled[i]) {
        ++wrong;
        CHECK(edit_distance(t.intended[i], t.emitted[i]) == 1);
      } else {
        CHECK(t.intended[i] == t.emitted[i]);
      }
    }
  }
  CHECK(static_cast<double>(wrong) / words == doctest::Approx(0.2).epsilon(0.15));
}

TEST_CASE("synthesized corpora are deterministic") {
  std::vector<Scene> scenes;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) scenes.push_back(generate_scene({}, seed));
  CorpusOptions opt;
  opt.seed = 4;
  const auto a = synthesize_corpus(scenes, reference_pattern_table(), opt);
  const auto b = synthesize_corpus(scenes, reference_pattern_table(), opt);
  REQUIRE(a.size() == b.size());
  CHECK(a.size() >= scenes.size() * 2);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(to_json(a[i]) == to_json(b[i]));
  opt.seed = 5;
  const auto c = synthesize_corpus(scenes, reference_pattern_table(), opt);
  bool differs = false;
  for (std::size_t i = 0; i < std::min(a.size(), c.size()); ++i) differs |= a[i].text != c[i].text;
  CHECK(differs);
  for (const auto& r : a) CHECK(r.source == "oracle");
}
