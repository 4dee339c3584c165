#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "shapetalk/grounding.hpp"
#include "shapetalk/lexicon.hpp"
#include "shapetalk/scene.hpp"

namespace shapetalk {

/// Ground-truth words for one shape, straight from the generator's geometry.
struct GoldFacts {
  std::string color;                ///< class 7
  std::string shape;                ///< class 3
  std::string shade;                ///< class 5, light or dark
  std::optional<std::string> depth; ///< class 2, front or background
  std::optional<std::string> vertical;    ///< top or bottom
  std::optional<std::string> horizontal;  ///< left or right
};

inline constexpr double kShadeThreshold = 0.725;
/// Ellipses flatter than this aspect are called ellipses, rounder ones ovals.
inline constexpr double kOvalAspect = 1.8;
/// Pixels one shape must hide of another to count as in front of it.
inline constexpr long kOcclusionPixels = 20;

/// Nearest palette color in the chroma plane.
std::string nearest_color(Rgb color);

std::map<int, GoldFacts> gold_facts(const Scene& scene);

/// Gold words match with degree 1, every other grounded word with 0; the
/// article and preposition classes always match.
class GoldGrounding : public Grounding {
 public:
  explicit GoldGrounding(const Scene& scene, const Lexicon& lexicon = default_lexicon());
  double membership(int cls, std::string_view word, const SceneObject& object) const override;
  const std::map<int, GoldFacts>& facts() const { return facts_; }

 private:
  std::map<int, GoldFacts> facts_;
  const Lexicon* lexicon_;
};

struct OracleNoise {
  double misspell_rate = 0.03;
  /// Chance of replacing a grounded word by another word of its class.
  double slip_rate = 0.0;
};

struct OracleTrace {
  std::string text;
  Pattern pattern;
  std::vector<std::string> intended;  ///< words before misspelling
  std::vector<std::string> emitted;
  std::vector<bool> misspelled;
};

/// Whether gold facts can fill every slot of a pattern.
bool fillable(const Pattern& pattern, const GoldFacts& facts);

OracleTrace oracle_describe_traced(const Scene& scene, int target_id, const OracleNoise& noise,
                                   const PatternTable& table, std::uint64_t seed);

/// Samples a fillable pattern by table frequency and instantiates it from the
/// gold facts, lowercase, then misspells each word independently.
std::string oracle_describe(const Scene& scene, int target_id, const OracleNoise& noise, const PatternTable& table,
                            std::uint64_t seed);

/// One random insertion, deletion or substitution; never empties the word.
std::string misspell(const std::string& word, std::uint64_t seed);

struct CorpusOptions {
  int per_object = 2;
  OracleNoise noise;
  std::uint64_t seed = 1;
  SegmentMode mode = SegmentMode::color_regions;
};

/// Oracle descriptions for every visible object of every scene.
std::vector<CorpusRow> synthesize_corpus(const std::vector<Scene>& scenes, const PatternTable& table,
                                         const CorpusOptions& options = {});

}  // namespace shapetalk
