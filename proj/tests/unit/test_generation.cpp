#include <doctest.h>

#include "shapetalk/error.hpp"
#include "shapetalk/generation.hpp"
#include "shapetalk/oracle.hpp"

using namespace shapetalk;

namespace {

std::vector<SceneObject> objects(int n) {
  std::vector<SceneObject> out;
  for (int i = 1; i <= n; ++i) out.push_back({i, {}});
  return out;
}

// Two green circles; only the first is in front.
TableGrounding twin_circles() {
  TableGrounding g;
  for (int id : {1, 2}) {
    g.set(id, "the", 1.0);
    g.set(id, "in", 1.0);
    g.set(id, "green", 0.9);
    g.set(id, "blue", 0.1);
    g.set(id, "circle", 0.85);
    g.set(id, "square", 0.2);
  }
  g.set(1, "front", 0.8);
  g.set(2, "front", 0.1);
  g.set(2, "background", 0.9);
  return g;
}

PatternTable escalation_table() {
  return PatternTable::from_entries({{{1, 7, 3}, 0.3, 0}, {{1, 7, 3, 4, 1, 2}, 0.1, 0}});
}

}  // namespace

TEST_CASE("instantiation picks the best word per slot") {
  const auto g = twin_circles();
  const auto c = instantiate(g, default_lexicon(), {1, 7, 3, 4, 1, 2}, {1, {}});
  REQUIRE(c.size() == 6);
  CHECK(c[0] == GeneralizedConstraint{1, "the"});
  CHECK(c[1] == GeneralizedConstraint{7, "green"});
  CHECK(c[2] == GeneralizedConstraint{3, "circle"});
  CHECK(c[3] == GeneralizedConstraint{4, "in"});
  CHECK(c[5] == GeneralizedConstraint{2, "front"});
  CHECK(instantiate(g, default_lexicon(), {2}, {2, {}})[0].word == "background");
}

TEST_CASE("a second position slot takes a different word") {
  TableGrounding g;
  g.set(1, "top", 0.9);
  g.set(1, "left", 0.8);
  const auto c = instantiate(g, default_lexicon(), {6, 6}, {1, {}});
  CHECK(c[0].word == "top");
  CHECK(c[1].word == "left");
}

TEST_CASE("method 3 escalates past an ambiguous pattern and method 1 does not") {
  const auto g = twin_circles();
  const auto objs = objects(2);
  const auto m3 = generate_description(g, default_lexicon(), escalation_table(), objs, 1, 0.3, 3);
  CHECK(m3.pattern == Pattern{1, 7, 3, 4, 1, 2});
  CHECK(m3.text == "THE GREEN CIRCLE IN THE FRONT");
  CHECK(m3.sigma <= 0.3);
  CHECK(m3.mu > m3.sigma);
  CHECK(m3.patterns_tried == 2);
  CHECK(m3.status == GenerationStatus::unambiguous);

  const auto m1 = generate_description(g, default_lexicon(), escalation_table(), objs, 1, 0.3, 1);
  CHECK(m1.pattern == Pattern{1, 7, 3});
  CHECK(m1.text == "THE GREEN CIRCLE");
  CHECK(m1.patterns_tried == 1);
}

TEST_CASE("indistinguishable objects give a best-effort description") {
  TableGrounding g(0.5);
  const auto r = generate_description(g, default_lexicon(), reference_pattern_table(), objects(3), 2);
  CHECK(r.status == GenerationStatus::best_effort);
  CHECK(r.patterns_tried == static_cast<int>(reference_pattern_table().size()));
  CHECK(to_string(r.status) == "best_effort");
}

TEST_CASE("generation is deterministic") {
  const auto g = twin_circles();
  const auto a = generate_description(g, default_lexicon(), reference_pattern_table(), objects(2), 2);
  const auto b = generate_description(g, default_lexicon(), reference_pattern_table(), objects(2), 2);
  CHECK(to_json(a) == to_json(b));
}

TEST_CASE("generation errors") {
  const auto g = twin_circles();
  CHECK_THROWS_AS(generate_description(g, default_lexicon(), PatternTable{}, objects(2), 1), Error);
  CHECK_THROWS_AS(generate_description(g, default_lexicon(), escalation_table(), objects(2), 1, 0.3, 2), Error);
  CHECK_THROWS_AS(generate_description(g, default_lexicon(), escalation_table(), objects(2), 7), Error);
}

TEST_CASE("guessing takes the argmax and breaks ties by lowest id") {
  const auto g = twin_circles();
  const auto objs = objects(2);
  CHECK(guess(g, "the green circle in the front", objs, default_lexicon()).object_id == 1);
  CHECK(guess(g, "the circle in the background", objs, default_lexicon()).object_id == 2);
  const auto tie = guess(g, "green circle", objs, default_lexicon());
  CHECK(tie.object_id == 1);
  CHECK(tie.all.size() == 2);
  CHECK_THROWS_AS(guess(g, "xyzzy", objs, default_lexicon()), ParseError);
  CHECK_THROWS_AS(guess(g, "green", {}, default_lexicon()), Error);
}

TEST_CASE("gold semantics describe generated scenes unambiguously when possible") {
  SceneConfig cfg;
  int unambiguous = 0;
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    const auto s = generate_scene(cfg, seed);
    const GoldGrounding gold(s);
    const auto objs = scene_objects(s);
    const auto r = generate_description(gold, default_lexicon(), reference_pattern_table(), objs, objs[0].id);
    if (r.status == GenerationStatus::unambiguous) {
      ++unambiguous;
      CHECK(guess(gold, r.text, objs, default_lexicon()).object_id == objs[0].id);
    }
  }
  CHECK(unambiguous > 30);
}
