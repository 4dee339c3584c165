#include "shapetalk/grounding.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "shapetalk/error.hpp"

namespace shapetalk {

nlohmann::json to_json(const CorpusRow& row) {
  nlohmann::json j{{"scene_id", row.scene_id}, {"object_id", row.object_id}, {"text", row.text}, {"source", row.source}};
  if (!row.player.empty()) j["player"] = row.player;
  return j;
}

CorpusRow corpus_row_from_json(const nlohmann::json& j) {
  try {
    CorpusRow row;
    row.scene_id = j.at("scene_id").get<std::string>();
    row.object_id = j.at("object_id").get<int>();
    row.text = j.at("text").get<std::string>();
    row.source = j.value("source", std::string("human"));
    row.player = j.value("player", std::string());
    if (row.source != "human" && row.source != "oracle" && row.source != "system")
      throw DataError("unknown corpus source '" + row.source + "'");
    return row;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed corpus row: ") + e.what());
  }
}

std::vector<CorpusRow> read_corpus_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus file " + path.string());
  std::vector<CorpusRow> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      rows.push_back(corpus_row_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw DataError("bad line in " + path.string() + ": " + e.what());
    }
  }
  return rows;
}

void write_corpus_jsonl(const std::filesystem::path& path, const std::vector<CorpusRow>& rows) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write corpus file " + path.string());
  for (const auto& r : rows) out << to_json(r).dump() << '\n';
}

std::map<std::string, std::vector<SceneObject>> segment_scenes(const std::vector<Scene>& scenes, SegmentMode mode) {
  std::map<std::string, std::vector<SceneObject>> out;
  for (const auto& s : scenes) out.emplace(s.id, scene_objects(s, mode));
  return out;
}

namespace {

void init_classes(TrainingSet& ts, const Lexicon& lexicon) {
  for (int c = 1; c <= kClassCount; ++c) ts.classes[static_cast<std::size_t>(c)].words = lexicon.words(c);
}

}  // namespace

TrainingSet build_training_set(const std::vector<CorpusRow>& corpus,
                               const std::map<std::string, std::vector<SceneObject>>& objects,
                               const Lexicon& lexicon) {
  TrainingSet ts;
  init_classes(ts, lexicon);
  for (std::size_t r = 0; r < corpus.size(); ++r) {
    const auto& row = corpus[r];
    const auto scene = objects.find(row.scene_id);
    if (scene == objects.end()) {
      ts.diagnostics.push_back("row " + std::to_string(r) + ": unknown scene '" + row.scene_id + "'");
      continue;
    }
    const auto obj = std::find_if(scene->second.begin(), scene->second.end(),
                                  [&](const SceneObject& o) { return o.id == row.object_id; });
    if (obj == scene->second.end()) {
      ts.diagnostics.push_back("row " + std::to_string(r) + ": no visible object " + std::to_string(row.object_id) +
                               " in scene '" + row.scene_id + "'");
      continue;
    }
    Description d;
    try {
      d = parse(row.text, lexicon);
    } catch (const ParseError& e) {
      ts.diagnostics.push_back("row " + std::to_string(r) + ": " + e.what());
      continue;
    }
    for (const auto& c : d.constraints) {
      auto& cls = ts.classes[static_cast<std::size_t>(c.cls)];
      const auto it = std::find(cls.words.begin(), cls.words.end(), c.word);
      if (it == cls.words.end()) continue;
      cls.examples.push_back({obj->features, static_cast<std::size_t>(it - cls.words.begin())});
    }
  }
  return ts;
}

TrainingSet build_training_set(const std::vector<CorpusRow>& corpus, const std::vector<Scene>& scenes,
                               const Lexicon& lexicon, SegmentMode mode) {
  // Only segment scenes the corpus refers to.
  std::vector<Scene> used;
  for (const auto& s : scenes) {
    if (std::any_of(corpus.begin(), corpus.end(), [&](const CorpusRow& r) { return r.scene_id == s.id; }))
      used.push_back(s);
  }
  return build_training_set(corpus, segment_scenes(used, mode), lexicon);
}

GroundedModel::GroundedModel(std::map<int, FuzzyTree> trees, ModelMeta meta)
    : trees_(std::move(trees)), meta_(std::move(meta)) {
  for (int c = 1; c <= kClassCount; ++c)
    if (!trees_.count(c)) throw DataError("model has no tree for class " + std::to_string(c));
}

const FuzzyTree& GroundedModel::tree(int cls) const {
  const auto it = trees_.find(cls);
  if (it == trees_.end()) throw LookupError("unknown word class " + std::to_string(cls));
  return it->second;
}

double GroundedModel::membership(int cls, std::string_view word, const FeatureVector& features) const {
  const auto& t = tree(cls);
  const auto it = std::find(t.words().begin(), t.words().end(), word);
  if (it == t.words().end())
    throw LookupError("word '" + std::string(word) + "' is not in class " + std::to_string(cls));
  if (t.is_constant()) return 1.0;
  return t.membership(static_cast<std::size_t>(it - t.words().begin()), features);
}

double GroundedModel::membership(int cls, std::string_view word, const SceneObject& object) const {
  return membership(cls, word, object.features);
}

std::optional<std::string> GroundedModel::default_word(int cls) const {
  const auto& t = tree(cls);
  if (!t.is_constant()) return std::nullopt;
  return t.default_word();
}

std::map<int, std::vector<std::string>> GroundedModel::selected_features() const {
  std::map<int, std::vector<std::string>> out;
  for (const auto& [c, t] : trees_) {
    auto& names = out[c];
    for (auto f : t.selected_features()) names.emplace_back(feature_name(f));
  }
  return out;
}

std::string corpus_hash(const std::vector<CorpusRow>& corpus) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& row : corpus) {
    for (unsigned char ch : to_json(row).dump() + "\n") {
      h ^= ch;
      h *= 1099511628211ULL;
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

GroundedModel train_grounded_model(const TrainingSet& training, const Lexicon& lexicon, const TrainingParams& params,
                                   const std::string& hash, std::size_t corpus_size) {
  std::map<int, FuzzyTree> trees;
  for (int c = 1; c <= kClassCount; ++c) {
    const auto& cls = training.classes[static_cast<std::size_t>(c)];
    auto words = cls.words.empty() ? lexicon.words(c) : cls.words;
    if (words.empty()) words = default_lexicon().words(c);
    std::vector<double> counts(words.size(), 0.0);
    for (const auto& ex : cls.examples) counts[ex.label] += 1.0;
    std::string most_frequent = words.empty() ? "" : words.front();
    if (!cls.examples.empty()) most_frequent = words[static_cast<std::size_t>(
                                   std::max_element(counts.begin(), counts.end()) - counts.begin())];

    if (cls.examples.empty() || words.empty()) {
      trees.emplace(c, FuzzyTree::constant(c, std::move(words), most_frequent));
      continue;
    }
    std::map<std::size_t, FuzzyPartition> partitions;
    std::vector<double> values(cls.examples.size());
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      for (std::size_t i = 0; i < cls.examples.size(); ++i) values[i] = cls.examples[i].features[f];
      partitions.emplace(f, fuzzify(f, values, params.n_terms));
    }
    auto tree = prune_cv(cls.examples, words, partitions, params.folds, params.tree,
                         params.seed + static_cast<std::uint64_t>(c), c);
    if (tree.selected_features().empty()) {
      trees.emplace(c, FuzzyTree::constant(c, std::move(words), most_frequent));
    } else {
      tree.set_default_word(most_frequent);
      trees.emplace(c, std::move(tree));
    }
  }
  ModelMeta meta{params.folds, params.n_terms, params.seed, hash, corpus_size};
  return GroundedModel(std::move(trees), std::move(meta));
}

GroundedModel train_grounded_model(const std::vector<CorpusRow>& corpus, const std::vector<Scene>& scenes,
                                   const Lexicon& lexicon, const TrainingParams& params) {
  if (corpus.empty()) throw DataError("cannot train on an empty corpus");
  const auto training = build_training_set(corpus, scenes, lexicon);
  return train_grounded_model(training, lexicon, params, corpus_hash(corpus), corpus.size());
}

Lexicon corpus_lexicon(const std::vector<CorpusRow>& corpus, long min_freq) {
  std::vector<std::vector<std::string>> tokens;
  for (const auto& row : corpus) {
    try {
      tokens.push_back(tag(tokenize(row.text), default_lexicon()).words);
    } catch (const ParseError&) {
    }
  }
  return build_lexicon(tokens, default_class_seed(), min_freq);
}

PatternTable corpus_patterns(const std::vector<CorpusRow>& corpus, const Lexicon& lexicon, long min_support) {
  std::vector<Pattern> patterns;
  for (const auto& row : corpus) {
    try {
      patterns.push_back(parse(row.text, lexicon).pattern);
    } catch (const ParseError&) {
    }
  }
  if (patterns.empty()) return {};
  return mine_patterns(patterns, min_support);
}

GroundedModel train_from_corpus(const std::vector<CorpusRow>& corpus,
                                const std::map<std::string, std::vector<SceneObject>>& objects,
                                const TrainingParams& params) {
  if (corpus.empty()) throw DataError("cannot train on an empty corpus");
  Lexicon lexicon = corpus_lexicon(corpus);
  if (lexicon.empty()) lexicon = default_lexicon();
  PatternTable patterns = corpus_patterns(corpus, lexicon);
  if (patterns.empty()) patterns = reference_pattern_table();
  const auto training = build_training_set(corpus, objects, lexicon);
  auto model = train_grounded_model(training, lexicon, params, corpus_hash(corpus), corpus.size());
  model.set_language(std::move(lexicon), std::move(patterns));
  return model;
}

GroundedModel train_from_corpus(const std::vector<CorpusRow>& corpus, const std::vector<Scene>& scenes,
                                const TrainingParams& params) {
  std::vector<Scene> used;
  for (const auto& s : scenes) {
    if (std::any_of(corpus.begin(), corpus.end(), [&](const CorpusRow& r) { return r.scene_id == s.id; }))
      used.push_back(s);
  }
  return train_from_corpus(corpus, segment_scenes(used), params);
}

nlohmann::json to_json(const GroundedModel& model) {
  nlohmann::json classes = nlohmann::json::object();
  for (const auto& [c, t] : model.trees()) classes[std::to_string(c)] = to_json(t);
  const auto& m = model.meta();
  return {{"format", 1},
          {"classes", classes},
          {"lexicon", to_json(model.lexicon())},
          {"patterns", to_json(model.patterns())},
          {"meta",
           {{"folds", m.folds},
            {"n_terms", m.n_terms},
            {"seed", m.seed},
            {"corpus_hash", m.corpus_hash},
            {"corpus_size", m.corpus_size}}}};
}

GroundedModel grounded_model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<int>() != 1) throw DataError("unsupported model format");
    std::map<int, FuzzyTree> trees;
    for (const auto& [key, value] : j.at("classes").items()) {
      const int c = std::stoi(key);
      if (c < 1 || c > kClassCount) throw DataError("model class " + key + " out of range");
      trees.emplace(c, fuzzy_tree_from_json(c, value));
    }
    const auto& jm = j.at("meta");
    ModelMeta meta;
    meta.folds = jm.value("folds", 5);
    meta.n_terms = jm.value("n_terms", std::size_t{3});
    meta.seed = jm.value("seed", std::uint64_t{1});
    meta.corpus_hash = jm.value("corpus_hash", std::string());
    meta.corpus_size = jm.value("corpus_size", std::size_t{0});
    GroundedModel model(std::move(trees), std::move(meta));
    model.set_language(j.contains("lexicon") ? lexicon_from_json(j.at("lexicon")) : default_lexicon(),
                       j.contains("patterns") ? pattern_table_from_json(j.at("patterns")) : reference_pattern_table());
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed model JSON: ") + e.what());
  } catch (const std::invalid_argument&) {
    throw DataError("model class keys must be integers");
  }
}

GroundedModel read_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("model file " + path.string() + " is not JSON: " + e.what());
  }
  return grounded_model_from_json(j);
}

void write_model(const std::filesystem::path& path, const GroundedModel& model) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write model file " + path.string());
  out << to_json(model).dump(2) << '\n';
}

}  // namespace shapetalk
