#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "shapetalk/features.hpp"
#include "shapetalk/fuzzy.hpp"
#include "shapetalk/lexicon.hpp"
#include "shapetalk/scene.hpp"

namespace shapetalk {

/// Anything that can say how well a word applies to an object.
class Grounding {
 public:
  virtual ~Grounding() = default;
  /// Degree in [0, 1]. Throws LookupError for words outside the class.
  virtual double membership(int cls, std::string_view word, const SceneObject& object) const = 0;
  /// The word generation should use for a class it cannot ground, if any.
  virtual std::optional<std::string> default_word(int /*cls*/) const { return std::nullopt; }
};

struct CorpusRow {
  std::string scene_id;
  int object_id = 0;
  std::string text;
  std::string source = "oracle";  ///< human, oracle or system
  std::string player;             ///< optional, empty for anonymous rows
};

nlohmann::json to_json(const CorpusRow& row);
CorpusRow corpus_row_from_json(const nlohmann::json& j);
std::vector<CorpusRow> read_corpus_jsonl(const std::filesystem::path& path);
void write_corpus_jsonl(const std::filesystem::path& path, const std::vector<CorpusRow>& rows);

struct ClassExamples {
  std::vector<std::string> words;  ///< the class's lexicon words, label index order
  std::vector<LabeledExample> examples;
};

/// Classes are indexed 1..7; slot 0 is unused.
struct TrainingSet {
  std::array<ClassExamples, kClassCount + 1> classes;
  std::vector<std::string> diagnostics;
};

/// One (object features, word) pair per parsed constraint. Rows naming a
/// missing scene or object, or that do not parse, are skipped with a diagnostic.
TrainingSet build_training_set(const std::vector<CorpusRow>& corpus, const std::vector<Scene>& scenes,
                               const Lexicon& lexicon, SegmentMode mode = SegmentMode::color_regions);

/// Same, with the objects of each scene already segmented (keyed by scene id).
TrainingSet build_training_set(const std::vector<CorpusRow>& corpus,
                               const std::map<std::string, std::vector<SceneObject>>& objects,
                               const Lexicon& lexicon);

struct TrainingParams {
  int folds = 5;
  std::size_t n_terms = 3;
  TreeParams tree;
  std::uint64_t seed = 1;
};

struct ModelMeta {
  int folds = 5;
  std::size_t n_terms = 3;
  std::uint64_t seed = 1;
  std::string corpus_hash;
  std::size_t corpus_size = 0;
};

class GroundedModel : public Grounding {
 public:
  GroundedModel() = default;
  GroundedModel(std::map<int, FuzzyTree> trees, ModelMeta meta);

  double membership(int cls, std::string_view word, const SceneObject& object) const override;
  double membership(int cls, std::string_view word, const FeatureVector& features) const;
  /// Set for constant classes only.
  std::optional<std::string> default_word(int cls) const override;

  const FuzzyTree& tree(int cls) const;
  const std::map<int, FuzzyTree>& trees() const { return trees_; }
  const ModelMeta& meta() const { return meta_; }

  /// Vocabulary and pattern table learned alongside the trees, used for
  /// parsing and generation with this model.
  const Lexicon& lexicon() const { return lexicon_; }
  const PatternTable& patterns() const { return patterns_; }
  void set_language(Lexicon lexicon, PatternTable patterns) {
    lexicon_ = std::move(lexicon);
    patterns_ = std::move(patterns);
  }
  /// Selected feature names per class, for summaries.
  std::map<int, std::vector<std::string>> selected_features() const;

 private:
  std::map<int, FuzzyTree> trees_;
  ModelMeta meta_;
  Lexicon lexicon_;
  PatternTable patterns_;
};

/// FNV-1a over the rows' JSON lines, as 16 hex digits.
std::string corpus_hash(const std::vector<CorpusRow>& corpus);

/// Fuzzify each feature per class, then prune_cv. Classes without examples or
/// whose pruned tree selects no feature become constant, defaulting to their
/// most frequent training word (the lexicon's first word when there is none).
GroundedModel train_grounded_model(const TrainingSet& training, const Lexicon& lexicon, const TrainingParams& params = {},
                                   const std::string& hash = "", std::size_t corpus_size = 0);

GroundedModel train_grounded_model(const std::vector<CorpusRow>& corpus, const std::vector<Scene>& scenes,
                                   const Lexicon& lexicon, const TrainingParams& params = {});

/// Default-lexicon words counted over the corpus after spelling repair,
/// filtered at min_freq.
Lexicon corpus_lexicon(const std::vector<CorpusRow>& corpus, long min_freq = 10);

/// Class patterns of the corpus rows that parse against the lexicon.
PatternTable corpus_patterns(const std::vector<CorpusRow>& corpus, const Lexicon& lexicon, long min_support = 2);

/// The whole learning pipeline: lexicon, patterns and trees from one corpus.
/// Falls back to the default lexicon and the reference table when the corpus
/// is too small to yield them.
GroundedModel train_from_corpus(const std::vector<CorpusRow>& corpus, const std::vector<Scene>& scenes,
                                const TrainingParams& params = {});
GroundedModel train_from_corpus(const std::vector<CorpusRow>& corpus,
                                const std::map<std::string, std::vector<SceneObject>>& objects,
                                const TrainingParams& params = {});

nlohmann::json to_json(const GroundedModel& model);
GroundedModel grounded_model_from_json(const nlohmann::json& j);
GroundedModel read_model(const std::filesystem::path& path);
void write_model(const std::filesystem::path& path, const GroundedModel& model);

/// Objects of every scene, keyed by scene id.
std::map<std::string, std::vector<SceneObject>> segment_scenes(const std::vector<Scene>& scenes,
                                                               SegmentMode mode = SegmentMode::color_regions);

}  // namespace shapetalk
