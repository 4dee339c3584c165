#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "shapetalk/grounding.hpp"
#include "shapetalk/scene.hpp"

namespace shapetalk {

struct DescriptionRecord {
  long id = 0;
  CorpusRow row;
  std::string timestamp;
  nlohmann::json diagnostics;
};

struct AnswerRecord {
  long id = 0;
  long description_id = 0;
  std::string task_id;
  std::string player;
  int object_id = 0;
  bool correct = false;
  std::string timestamp;
};

struct LeaderboardEntry {
  std::string name;
  double accuracy = 0.0;
  long correct = 0;
  long answers = 0;
  long descriptions = 0;
};

nlohmann::json to_json(const DescriptionRecord& r);
nlohmann::json to_json(const AnswerRecord& r);
nlohmann::json to_json(const std::vector<LeaderboardEntry>& ranking);

/// Append-only JSONL persistence under one directory: scenes.jsonl,
/// corpus.jsonl and answers.jsonl. Appends go through a single writer lock;
/// reads share a reader lock.
class CorpusStore {
 public:
  explicit CorpusStore(std::filesystem::path dir);

  const std::filesystem::path& dir() const { return dir_; }
  std::filesystem::path model_path() const { return dir_ / "model.json"; }

  void add_scene(const Scene& scene);
  std::optional<Scene> scene(const std::string& id) const;
  std::vector<Scene> scenes() const;

  /// Throws LookupError for an unknown scene or object, DataError for empty text.
  DescriptionRecord record_description(const std::string& scene_id, int object_id, const std::string& text,
                                       const std::string& source, const std::string& player,
                                       nlohmann::json diagnostics = nlohmann::json::object());
  std::optional<DescriptionRecord> description(long id) const;
  std::vector<DescriptionRecord> descriptions() const;
  /// Rows usable for training: human and oracle descriptions.
  std::vector<CorpusRow> training_corpus() const;

  AnswerRecord record_answer(long description_id, const std::string& task_id, const std::string& player, int object_id,
                             bool correct);
  std::vector<AnswerRecord> answers() const;

  /// Describers ranked by the share of answers to their descriptions that
  /// were correct; ties go to more descriptions, then to the name.
  std::vector<LeaderboardEntry> leaderboard() const;

 private:
  void append(const std::filesystem::path& file, const nlohmann::json& j);

  std::filesystem::path dir_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, Scene> scenes_;
  std::vector<std::string> scene_order_;
  std::vector<DescriptionRecord> descriptions_;
  std::vector<AnswerRecord> answers_;
};

/// Current UTC time, ISO 8601 with seconds.
std::string utc_timestamp();

}  // namespace shapetalk
