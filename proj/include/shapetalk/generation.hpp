#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "shapetalk/grounding.hpp"
#include "shapetalk/lexicon.hpp"
#include "shapetalk/semantics.hpp"

namespace shapetalk {

inline constexpr double kDefaultTau = 0.3;

enum class GenerationStatus { unambiguous, best_effort };
std::string_view to_string(GenerationStatus s);

struct GenerationResult {
  std::string text;  ///< uppercase words joined by spaces
  Pattern pattern;
  std::vector<GeneralizedConstraint> constraints;
  double mu = 0.0;
  double sigma = 0.0;
  int patterns_tried = 0;
  GenerationStatus status = GenerationStatus::best_effort;
};

nlohmann::json to_json(const GenerationResult& r);

/// Fills a pattern for the target: each slot takes the class's default word
/// when the grounding has one, else the word matching the target best (ties
/// to the more frequent word, then alphabetical). A second position slot
/// takes the best position word not used yet.
std::vector<GeneralizedConstraint> instantiate(const Grounding& grounding, const Lexicon& lexicon,
                                               const Pattern& pattern, const SceneObject& target);

/// Walks the pattern table in order. Method 3 returns the first candidate
/// with sigma <= tau that the target matches strictly better than any other
/// object, or failing that the candidate with the largest mu - sigma. Method 1
/// returns the first candidate. Throws Error on an empty table, an unknown
/// method or a missing target.
GenerationResult generate_description(const Grounding& grounding, const Lexicon& lexicon, const PatternTable& table,
                                      const std::vector<SceneObject>& objects, int target_id,
                                      double tau = kDefaultTau, int method = 3);

struct GuessResult {
  int object_id = 0;
  MatchReport match;
  Description description;
  std::vector<MatchReport> all;  ///< every object's report, in object order
};

/// Argmax of mu_M over the objects, ties to the lowest id. Throws ParseError
/// when nothing parses and Error when there are no objects.
GuessResult guess(const Grounding& grounding, std::string_view text, const std::vector<SceneObject>& objects,
                  const Lexicon& lexicon);

}  // namespace shapetalk
