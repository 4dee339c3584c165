#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "shapetalk/generation.hpp"
#include "shapetalk/grounding.hpp"
#include "shapetalk/oracle.hpp"
#include "shapetalk/scene.hpp"

namespace shapetalk {

enum class GuesserKind { model, gold };

struct EvalOptions {
  std::vector<int> methods{1, 3};
  double tau = kDefaultTau;
  GuesserKind guesser = GuesserKind::model;
  /// Simulated describers ranked alongside the methods; 0 disables ranking.
  int describers = 40;
  std::uint64_t seed = 7;
  SegmentMode mode = SegmentMode::color_regions;
};

struct SceneOutcome {
  std::string scene_id;
  int method = 0;
  int target = 0;
  int guessed = -1;
  bool correct = false;
  std::string text;
  double mu = 0.0;
  double sigma = 0.0;
  std::string status;
};

struct MethodStats {
  long correct = 0;
  long n = 0;
  double accuracy() const { return n ? static_cast<double>(correct) / static_cast<double>(n) : 0.0; }
};

struct RankEntry {
  std::string name;
  double accuracy = 0.0;
  long n = 0;
};

struct EvalReport {
  std::map<int, MethodStats> methods;
  std::vector<SceneOutcome> outcomes;
  std::vector<RankEntry> ranking;  ///< best first
  std::vector<std::string> log;
};

nlohmann::json to_json(const EvalReport& r, bool with_outcomes = false);

/// Ranking as CSV: rank,name,accuracy,n.
std::string ranking_csv(const EvalReport& r);

/// Each scene's selected shape is described by every method with
/// `generator`, then resolved by the guesser: `guesser` with its lexicon for
/// GuesserKind::model, the scene's gold semantics for GuesserKind::gold.
/// Failures count as incorrect and are logged.
EvalReport evaluate(const Grounding& generator, const Lexicon& generator_lexicon, const PatternTable& table,
                    const Grounding* guesser, const Lexicon& guesser_lexicon, const std::vector<Scene>& scenes,
                    const EvalOptions& options = {});

/// Uses each model's own lexicon and, for generation, its pattern table.
EvalReport evaluate(const GroundedModel& generator, const GroundedModel* guesser, const std::vector<Scene>& scenes,
                    const EvalOptions& options = {});

struct ExperimentConfig {
  int train_scenes = 300;
  int test_scenes = 300;
  SceneConfig train_config;
  SceneConfig test_config;
  CorpusOptions corpus;
  TrainingParams training;
  EvalOptions eval;
  std::uint64_t seed = 2024;
};

/// Defaults used by the CLI and the acceptance run.
ExperimentConfig default_experiment();

struct ExperimentResult {
  EvalReport report;
  GroundedModel generator;
  GroundedModel guesser;
  PatternTable patterns;
  Lexicon lexicon;
  std::size_t corpus_size = 0;
  double seconds = 0.0;
};

/// Train scenes and an oracle corpus, even rows train the generator's model
/// and odd rows the guesser's, then evaluation on fresh scenes.
ExperimentResult run_experiment(const ExperimentConfig& config);

}  // namespace shapetalk
