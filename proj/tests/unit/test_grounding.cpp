#include <doctest.h>

#include <filesystem>

#include "shapetalk/error.hpp"
#include "shapetalk/grounding.hpp"
#include "shapetalk/oracle.hpp"

using namespace shapetalk;

namespace {

Scene one_square() {
  Scene s;
  s.id = "sq";
  s.width = 200;
  s.height = 200;
  ShapeSpec a;
  a.id = 4;
  a.kind = ShapeKind::square;
  a.color = shaded_color(*find_palette_color("blue"), 1.0);
  a.cx = 100;
  a.cy = 100;
  a.w = a.h = 60;
  s.shapes = {a};
  s.selected = 4;
  return s;
}

struct Fixture {
  std::vector<Scene> scenes;
  std::vector<CorpusRow> corpus;
};

const Fixture& fixture() {
  static const Fixture f = [] {
    Fixture x;
    for (std::uint64_t seed = 1; seed <= 60; ++seed) x.scenes.push_back(generate_scene({}, seed));
    CorpusOptions opt;
    opt.seed = 3;
    x.corpus = synthesize_corpus(x.scenes, reference_pattern_table(), opt);
    return x;
  }();
  return f;
}

}  // namespace

TEST_CASE("each parsed word becomes one example of its class") {
  const std::vector<CorpusRow> corpus{{"sq", 4, "The blue square", "human", ""}};
  const auto ts = build_training_set(corpus, {one_square()}, default_lexicon(), SegmentMode::ground_truth);
  for (int c = 1; c <= kClassCount; ++c) {
    const auto& ex = ts.classes[static_cast<std::size_t>(c)].examples;
    if (c == 1 || c == 3 || c == 7) {
      REQUIRE(ex.size() == 1);
      const auto& words = ts.classes[static_cast<std::size_t>(c)].words;
      const std::string expect = c == 1 ? "the" : (c == 3 ? "square" : "blue");
      CHECK(words[ex[0].label] == expect);
      CHECK(ex[0].features[Feature::b] > ex[0].features[Feature::r]);
    } else {
      CHECK(ex.empty());
    }
  }
}

TEST_CASE("bad rows are skipped with a diagnostic") {
  const std::vector<CorpusRow> corpus{{"missing", 1, "red circle", "human", ""},
                                      {"sq", 9, "red circle", "human", ""},
                                      {"sq", 4, "xyzzy", "human", ""},
                                      {"sq", 4, "blue", "human", ""}};
  const auto ts = build_training_set(corpus, {one_square()}, default_lexicon(), SegmentMode::ground_truth);
  CHECK(ts.diagnostics.size() == 3);
  CHECK(ts.classes[7].examples.size() == 1);
}

TEST_CASE("a colors-only corpus trains only the color class") {
  std::vector<CorpusRow> corpus;
  const auto& f = fixture();
  for (const auto& s : f.scenes)
    for (const auto& [id, facts] : gold_facts(s)) corpus.push_back({s.id, id, facts.color, "oracle", ""});
  const auto model = train_grounded_model(corpus, f.scenes, default_lexicon());
  for (int c = 1; c <= 6; ++c) CHECK_MESSAGE(model.tree(c).is_constant(), "class " << c);
  CHECK_FALSE(model.tree(7).is_constant());
  CHECK(model.default_word(1) == "the");
  CHECK_FALSE(model.default_word(7).has_value());
}

TEST_CASE("a trained model grounds colors, round-trips and is deterministic") {
  const auto& f = fixture();
  const auto model = train_from_corpus(f.corpus, f.scenes);
  CHECK(model.meta().corpus_size == f.corpus.size());
  CHECK(model.meta().corpus_hash == corpus_hash(f.corpus));
  CHECK(model.tree(1).is_constant());
  CHECK(model.default_word(1) == "the");

  const auto sel = model.selected_features();
  REQUIRE(sel.count(7));
  // Small corpora can pick up a noise split too; the root must still be a color feature.
  const auto& color_tree = model.tree(7);
  const std::string root(feature_name(static_cast<std::size_t>(color_tree.nodes()[0].feature)));
  CHECK_MESSAGE((root == "r" || root == "g" || root == "b" || root == "cb" || root == "cr"), root);

  // Gold color should score above every other color on most objects.
  int right = 0, total = 0;
  for (const auto& s : f.scenes) {
    const auto facts = gold_facts(s);
    for (const auto& o : scene_objects(s)) {
      std::string best;
      double best_mu = -1;
      for (const auto& w : model.lexicon().words(7)) {
        const double mu = model.membership(7, w, o);
        if (mu > best_mu) {
          best_mu = mu;
          best = w;
        }
      }
      ++total;
      right += best == facts.at(o.id).color;
    }
  }
  CHECK(static_cast<double>(right) / total > 0.9);

  TrainingParams p;
  CHECK(to_json(train_from_corpus(f.corpus, f.scenes, p)) == to_json(model));

  const auto back = grounded_model_from_json(to_json(model));
  CHECK(to_json(back) == to_json(model));
  const auto path = std::filesystem::temp_directory_path() / "shapetalk_model_test.json";
  write_model(path, model);
  const auto read = read_model(path);
  std::filesystem::remove(path);
  const auto o = scene_objects(f.scenes[0])[0];
  for (const auto& w : model.lexicon().words(7)) CHECK(read.membership(7, w, o) == model.membership(7, w, o));

  CHECK_THROWS_AS(model.membership(7, "zebra", o), LookupError);
  CHECK_THROWS_AS(model.membership(3, "green", o), LookupError);
  CHECK_THROWS_AS(read_model("/nonexistent/model.json"), DataError);
}

TEST_CASE("corpus lexicon counts repaired words") {
  std::vector<CorpusRow> corpus;
  for (int i = 0; i < 10; ++i) corpus.push_back({"s", 1, "blu sqare", "oracle", ""});
  for (int i = 0; i < 9; ++i) corpus.push_back({"s", 1, "red", "oracle", ""});
  const auto lex = corpus_lexicon(corpus);
  CHECK(lex.contains("blue"));
  CHECK(lex.contains("square"));
  CHECK(lex.frequency("blue") == 10);
  CHECK_FALSE(lex.contains("red"));
  const auto pats = corpus_patterns(corpus, lex);
  CHECK(pats.frequency({7, 3}).has_value());
}

TEST_CASE("corpus hash is stable and sensitive") {
  const std::vector<CorpusRow> a{{"s", 1, "red", "oracle", ""}};
  auto b = a;
  b[0].text = "rad";
  CHECK(corpus_hash(a) == corpus_hash(a));
  CHECK(corpus_hash(a) != corpus_hash(b));
  CHECK(corpus_hash(a).size() == 16);
}

TEST_CASE("corpus rows round-trip through JSONL") {
  const auto path = std::filesystem::temp_directory_path() / "shapetalk_corpus_test.jsonl";
  const std::vector<CorpusRow> rows{{"s1", 2, "the red circle", "human", "ann"}, {"s2", 1, "blue", "oracle", ""}};
  write_corpus_jsonl(path, rows);
  const auto back = read_corpus_jsonl(path);
  std::filesystem::remove(path);
  REQUIRE(back.size() == 2);
  CHECK(to_json(back[0]) == to_json(rows[0]));
  CHECK_THROWS_AS(corpus_row_from_json(nlohmann::json{{"scene_id", "s"}}), DataError);
  auto bad = to_json(rows[0]);
  bad["source"] = "alien";
  CHECK_THROWS_AS(corpus_row_from_json(bad), DataError);
}
