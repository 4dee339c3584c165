#include "shapetalk/store.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>

#include "shapetalk/error.hpp"

namespace shapetalk {

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

nlohmann::json to_json(const DescriptionRecord& r) {
  auto j = to_json(r.row);
  j["record_id"] = r.id;
  j["timestamp"] = r.timestamp;
  j["diagnostics"] = r.diagnostics;
  return j;
}

nlohmann::json to_json(const AnswerRecord& r) {
  return {{"record_id", r.id},     {"description_id", r.description_id}, {"task_id", r.task_id},
          {"player", r.player},    {"object_id", r.object_id},           {"correct", r.correct},
          {"timestamp", r.timestamp}};
}

nlohmann::json to_json(const std::vector<LeaderboardEntry>& ranking) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& e : ranking)
    out.push_back({{"name", e.name},
                   {"accuracy", e.accuracy},
                   {"correct", e.correct},
                   {"answers", e.answers},
                   {"descriptions", e.descriptions}});
  return out;
}

namespace {

template <typename Fn>
void read_lines(const std::filesystem::path& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) return;
  std::string line;
  long n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      fn(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
}

}  // namespace

CorpusStore::CorpusStore(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw DataError("cannot create data dir " + dir_.string() + ": " + ec.message());
  read_lines(dir_ / "scenes.jsonl", [&](const nlohmann::json& j) {
    auto s = scene_from_json(j);
    if (!scenes_.count(s.id)) scene_order_.push_back(s.id);
    scenes_[s.id] = std::move(s);
  });
  read_lines(dir_ / "corpus.jsonl", [&](const nlohmann::json& j) {
    DescriptionRecord r;
    r.row = corpus_row_from_json(j);
    r.id = j.at("record_id").get<long>();
    r.timestamp = j.value("timestamp", std::string());
    r.diagnostics = j.value("diagnostics", nlohmann::json::object());
    if (!descriptions_.empty() && r.id <= descriptions_.back().id)
      throw DataError("corpus record ids are not increasing at " + std::to_string(r.id));
    descriptions_.push_back(std::move(r));
  });
  read_lines(dir_ / "answers.jsonl", [&](const nlohmann::json& j) {
    AnswerRecord a;
    a.id = j.at("record_id").get<long>();
    a.description_id = j.at("description_id").get<long>();
    a.task_id = j.value("task_id", std::string());
    a.player = j.value("player", std::string());
    a.object_id = j.at("object_id").get<int>();
    a.correct = j.at("correct").get<bool>();
    a.timestamp = j.value("timestamp", std::string());
    if (!answers_.empty() && a.id <= answers_.back().id)
      throw DataError("answer record ids are not increasing at " + std::to_string(a.id));
    answers_.push_back(std::move(a));
  });
}

void CorpusStore::append(const std::filesystem::path& file, const nlohmann::json& j) {
  std::ofstream out(file, std::ios::app);
  if (!out) throw DataError("cannot append to " + file.string());
  out << j.dump() << '\n';
  out.flush();
  if (!out) throw DataError("write to " + file.string() + " failed");
}

void CorpusStore::add_scene(const Scene& scene) {
  std::unique_lock lock(mutex_);
  if (scenes_.count(scene.id)) return;
  append(dir_ / "scenes.jsonl", to_json(scene));
  scene_order_.push_back(scene.id);
  scenes_[scene.id] = scene;
}

std::optional<Scene> CorpusStore::scene(const std::string& id) const {
  std::shared_lock lock(mutex_);
  const auto it = scenes_.find(id);
  if (it == scenes_.end()) return std::nullopt;
  return it->second;
}

std::vector<Scene> CorpusStore::scenes() const {
  std::shared_lock lock(mutex_);
  std::vector<Scene> out;
  for (const auto& id : scene_order_) out.push_back(scenes_.at(id));
  return out;
}

DescriptionRecord CorpusStore::record_description(const std::string& scene_id, int object_id, const std::string& text,
                                                  const std::string& source, const std::string& player,
                                                  nlohmann::json diagnostics) {
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) throw DataError("description text is empty");
  if (source != "human" && source != "oracle" && source != "system")
    throw DataError("unknown description source '" + source + "'");
  std::unique_lock lock(mutex_);
  const auto it = scenes_.find(scene_id);
  if (it == scenes_.end()) throw LookupError("unknown scene '" + scene_id + "'");
  if (!it->second.find(object_id))
    throw LookupError("scene '" + scene_id + "' has no object " + std::to_string(object_id));
  DescriptionRecord r;
  r.id = descriptions_.empty() ? 1 : descriptions_.back().id + 1;
  r.row = {scene_id, object_id, text, source, player};
  r.timestamp = utc_timestamp();
  r.diagnostics = std::move(diagnostics);
  append(dir_ / "corpus.jsonl", to_json(r));
  descriptions_.push_back(r);
  return r;
}

std::optional<DescriptionRecord> CorpusStore::description(long id) const {
  std::shared_lock lock(mutex_);
  const auto it = std::lower_bound(descriptions_.begin(), descriptions_.end(), id,
                                   [](const DescriptionRecord& r, long v) { return r.id < v; });
  if (it == descriptions_.end() || it->id != id) return std::nullopt;
  return *it;
}

std::vector<DescriptionRecord> CorpusStore::descriptions() const {
  std::shared_lock lock(mutex_);
  return descriptions_;
}

std::vector<CorpusRow> CorpusStore::training_corpus() const {
  std::shared_lock lock(mutex_);
  std::vector<CorpusRow> rows;
  for (const auto& d : descriptions_)
    if (d.row.source != "system") rows.push_back(d.row);
  return rows;
}

AnswerRecord CorpusStore::record_answer(long description_id, const std::string& task_id, const std::string& player,
                                        int object_id, bool correct) {
  std::unique_lock lock(mutex_);
  AnswerRecord a;
  a.id = answers_.empty() ? 1 : answers_.back().id + 1;
  a.description_id = description_id;
  a.task_id = task_id;
  a.player = player;
  a.object_id = object_id;
  a.correct = correct;
  a.timestamp = utc_timestamp();
  append(dir_ / "answers.jsonl", to_json(a));
  answers_.push_back(a);
  return a;
}

std::vector<AnswerRecord> CorpusStore::answers() const {
  std::shared_lock lock(mutex_);
  return answers_;
}

std::vector<LeaderboardEntry> CorpusStore::leaderboard() const {
  std::shared_lock lock(mutex_);
  std::map<long, std::string> author;
  std::map<std::string, LeaderboardEntry> by_name;
  for (const auto& d : descriptions_) {
    const std::string name = d.row.player.empty() ? d.row.source : d.row.player;
    author[d.id] = name;
    auto& e = by_name[name];
    e.name = name;
    ++e.descriptions;
  }
  for (const auto& a : answers_) {
    const auto it = author.find(a.description_id);
    if (it == author.end()) continue;
    auto& e = by_name[it->second];
    ++e.answers;
    if (a.correct) ++e.correct;
  }
  std::vector<LeaderboardEntry> out;
  for (auto& [name, e] : by_name) {
    if (e.answers == 0) continue;
    e.accuracy = static_cast<double>(e.correct) / static_cast<double>(e.answers);
    out.push_back(e);
  }
  std::sort(out.begin(), out.end(), [](const LeaderboardEntry& a, const LeaderboardEntry& b) {
    if (a.accuracy != b.accuracy) return a.accuracy > b.accuracy;
    if (a.descriptions != b.descriptions) return a.descriptions > b.descriptions;
    return a.name < b.name;
  });
  return out;
}

}  // namespace shapetalk
