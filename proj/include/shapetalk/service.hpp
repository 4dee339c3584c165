#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "shapetalk/error.hpp"
#include "shapetalk/generation.hpp"
#include "shapetalk/grounding.hpp"
#include "shapetalk/store.hpp"

namespace shapetalk {

/// An error with the HTTP status it should be reported as.
class ApiError : public Error {
 public:
  ApiError(int status, const std::string& what) : Error(what), status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

struct ServiceConfig {
  std::filesystem::path data_dir = "shapetalk-data";
  double tau = kDefaultTau;
  std::uint64_t seed = 1;
  SceneConfig scenes;
  TrainingParams training;
  /// Fresh scenes described by Method 1 and Method 3 after each retrain.
  int system_scenes = 10;
  /// Train at startup when there is a corpus but no model file.
  bool train_on_startup = true;
};

/// The games and the corpus behind the HTTP API. Every public method is safe
/// to call from several threads; handlers map one-to-one onto endpoints.
class GameService {
 public:
  /// Loads the store and model.json. Throws DataError for unreadable files.
  explicit GameService(ServiceConfig config);

  nlohmann::json create_scene(const nlohmann::json& body);
  nlohmann::json scene(const std::string& id) const;
  std::string raster_png(const std::string& id) const;
  nlohmann::json post_description(const nlohmann::json& body);
  nlohmann::json next_task(const std::string& mode, const std::string& player);
  nlohmann::json answer(const std::string& task_id, const nlohmann::json& body);
  nlohmann::json train();
  nlohmann::json model_json() const;
  nlohmann::json leaderboard() const;

  /// The current model snapshot, null before the first training.
  std::shared_ptr<const GroundedModel> model() const;
  const CorpusStore& store() const { return store_; }
  const ServiceConfig& config() const { return config_; }

 private:
  struct Task {
    std::string mode;
    std::string scene_id;
    int target = 0;
    long description_id = 0;
    std::string text;
    std::string player;
    bool answered = false;
    nlohmann::json result;
  };

  Scene new_scene(const SceneConfig& config);
  Scene require_scene(const std::string& id) const;
  const std::vector<SceneObject>& objects(const Scene& scene) const;
  int pick_target(const Scene& scene);
  std::string new_task_id();
  void swap_model(std::shared_ptr<const GroundedModel> model);
  std::shared_ptr<const GroundedModel> train_snapshot();
  /// mu_M of the text on the target and sigma_A over the scene; zeros when
  /// the text does not parse.
  std::pair<double, double> scores(const Grounding& grounding, const Lexicon& lexicon, const std::string& text,
                                   const std::vector<SceneObject>& objects, int target) const;

  ServiceConfig config_;
  CorpusStore store_;

  mutable std::mutex model_mutex_;
  std::shared_ptr<const GroundedModel> model_;
  std::mutex train_mutex_;

  std::mutex state_mutex_;
  std::mt19937_64 rng_;
  long task_counter_ = 0;
  std::map<std::string, Task> tasks_;

  mutable std::mutex objects_mutex_;
  mutable std::map<std::string, std::vector<SceneObject>> objects_;
};

/// Scene config overrides from a request body; unknown keys are ignored.
SceneConfig scene_config_from_json(const nlohmann::json& j, SceneConfig base = {});

/// The scene as shown to players: no selected shape.
nlohmann::json public_scene_json(const Scene& scene);

/// HTTP front end over a GameService.
class HttpServer {
 public:
  /// `static_dir`, when non-empty, is served at the root for a browser client.
  explicit HttpServer(GameService& service, std::filesystem::path static_dir = {});
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds the port, 0 for any free one; returns the bound port. Throws Error on failure.
  int bind(const std::string& host, int port);
  /// Serves until stop(); call after bind().
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace shapetalk
