#include "shapetalk/service.hpp"

#include <algorithm>
#include <cstdio>

#include <httplib.h>

#include "shapetalk/lexicon.hpp"
#include "shapetalk/oracle.hpp"
#include "shapetalk/semantics.hpp"

namespace shapetalk {

namespace {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

template <typename T>
T field(const nlohmann::json& body, const char* key) {
  if (!body.is_object() || !body.contains(key)) throw ApiError(400, std::string("missing field '") + key + "'");
  try {
    return body.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ApiError(400, std::string("field '") + key + "' has the wrong type");
  }
}

std::string optional_string(const nlohmann::json& body, const char* key) {
  if (!body.is_object() || !body.contains(key) || body.at(key).is_null()) return {};
  if (!body.at(key).is_string()) throw ApiError(400, std::string("field '") + key + "' must be a string");
  return body.at(key).get<std::string>();
}

nlohmann::json parse_diagnostics(const std::string& text, const Lexicon& lexicon) {
  try {
    return diagnostics(parse(text, lexicon));
  } catch (const ParseError& e) {
    return {{"error", e.what()}, {"discarded", e.discarded()}};
  }
}

}  // namespace

SceneConfig scene_config_from_json(const nlohmann::json& j, SceneConfig c) {
  if (j.is_null()) return c;
  if (!j.is_object()) throw ApiError(400, "scene config must be an object");
  try {
    c.width = j.value("width", c.width);
    c.height = j.value("height", c.height);
    c.min_shapes = j.value("min_shapes", c.min_shapes);
    c.max_shapes = j.value("max_shapes", c.max_shapes);
    c.overlap_probability = j.value("overlap_probability", c.overlap_probability);
    c.max_overlap = j.value("max_overlap", c.max_overlap);
    c.twin_probability = j.value("twin_probability", c.twin_probability);
    c.min_size = j.value("min_size", c.min_size);
    c.max_size = j.value("max_size", c.max_size);
    c.palette = j.value("palette", c.palette);
  } catch (const nlohmann::json::exception& e) {
    throw ApiError(400, std::string("bad scene config: ") + e.what());
  }
  return c;
}

nlohmann::json public_scene_json(const Scene& scene) {
  auto j = to_json(scene);
  j.erase("selected");
  return j;
}

GameService::GameService(ServiceConfig config)
    : config_(std::move(config)), store_(config_.data_dir) {
  // Reseeding from the stored scene count keeps a restarted service from
  // replaying the scenes it already served.
  rng_.seed(mix(config_.seed ^ mix(store_.scenes().size())));
  const auto path = store_.model_path();
  if (std::filesystem::exists(path)) {
    model_ = std::make_shared<const GroundedModel>(read_model(path));
  } else if (config_.train_on_startup && !store_.training_corpus().empty()) {
    std::lock_guard lock(train_mutex_);
    model_ = train_snapshot();
  }
}

std::shared_ptr<const GroundedModel> GameService::model() const {
  std::lock_guard lock(model_mutex_);
  return model_;
}

void GameService::swap_model(std::shared_ptr<const GroundedModel> model) {
  std::lock_guard lock(model_mutex_);
  model_ = std::move(model);
}

Scene GameService::new_scene(const SceneConfig& config) {
  std::uint64_t seed;
  {
    std::lock_guard lock(state_mutex_);
    seed = rng_();
  }
  Scene scene;
  try {
    scene = generate_scene(config, seed);
  } catch (const GenerationError& e) {
    throw ApiError(400, e.what());
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "s%016llx", static_cast<unsigned long long>(seed));
  scene.id = buf;
  store_.add_scene(scene);
  return scene;
}

Scene GameService::require_scene(const std::string& id) const {
  auto s = store_.scene(id);
  if (!s) throw ApiError(404, "unknown scene '" + id + "'");
  return *s;
}

const std::vector<SceneObject>& GameService::objects(const Scene& scene) const {
  {
    std::lock_guard lock(objects_mutex_);
    const auto it = objects_.find(scene.id);
    if (it != objects_.end()) return it->second;
  }
  auto objs = scene_objects(scene);
  std::lock_guard lock(objects_mutex_);
  return objects_.emplace(scene.id, std::move(objs)).first->second;
}

int GameService::pick_target(const Scene& scene) {
  const auto& objs = objects(scene);
  if (objs.empty()) return 0;
  for (const auto& o : objs)
    if (o.id == scene.selected) return o.id;
  std::lock_guard lock(state_mutex_);
  return objs[static_cast<std::size_t>(rng_() % objs.size())].id;
}

std::string GameService::new_task_id() {
  std::lock_guard lock(state_mutex_);
  char buf[40];
  std::snprintf(buf, sizeof buf, "t%ld-%08llx", ++task_counter_, static_cast<unsigned long long>(rng_() & 0xffffffffULL));
  return buf;
}

std::pair<double, double> GameService::scores(const Grounding& grounding, const Lexicon& lexicon,
                                              const std::string& text, const std::vector<SceneObject>& objs,
                                              int target) const {
  try {
    const auto d = parse(text, lexicon);
    const auto it = std::find_if(objs.begin(), objs.end(), [&](const SceneObject& o) { return o.id == target; });
    if (it == objs.end()) return {0.0, 0.0};
    return {match_degree(grounding, d, *it).mu, ambiguity_degree(grounding, d, objs, target).sigma};
  } catch (const ParseError&) {
    return {0.0, 0.0};
  } catch (const LookupError&) {
    return {0.0, 0.0};
  }
}

nlohmann::json GameService::create_scene(const nlohmann::json& body) {
  nlohmann::json cfg;
  if (body.is_object() && body.contains("config")) cfg = body.at("config");
  const auto scene = new_scene(scene_config_from_json(cfg, config_.scenes));
  return {{"scene", public_scene_json(scene)}};
}

nlohmann::json GameService::scene(const std::string& id) const { return public_scene_json(require_scene(id)); }

std::string GameService::raster_png(const std::string& id) const { return encode_png(rasterize(require_scene(id))); }

nlohmann::json GameService::post_description(const nlohmann::json& body) {
  const auto scene_id = field<std::string>(body, "scene_id");
  const auto object_id = field<int>(body, "object_id");
  const auto text = field<std::string>(body, "text");
  const auto player = optional_string(body, "player");
  auto source = optional_string(body, "source");
  if (source.empty()) source = "human";
  const auto m = model();
  const Lexicon& lexicon = m ? m->lexicon() : default_lexicon();
  try {
    const auto r = store_.record_description(scene_id, object_id, text, source, player, parse_diagnostics(text, lexicon));
    return {{"record_id", r.id}, {"diagnostics", r.diagnostics}};
  } catch (const LookupError& e) {
    throw ApiError(404, e.what());
  } catch (const DataError& e) {
    throw ApiError(400, e.what());
  }
}

nlohmann::json GameService::next_task(const std::string& mode, const std::string& player) {
  Task task;
  task.mode = mode;
  task.player = player;
  Scene scene;
  if (mode == "describe") {
    scene = new_scene(config_.scenes);
    task.target = pick_target(scene);
  } else if (mode == "guess") {
    std::vector<DescriptionRecord> pool;
    for (auto& d : store_.descriptions()) {
      const auto s = store_.scene(d.row.scene_id);
      if (!s) continue;
      const auto& objs = objects(*s);
      if (std::any_of(objs.begin(), objs.end(), [&](const SceneObject& o) { return o.id == d.row.object_id; }))
        pool.push_back(std::move(d));
    }
    DescriptionRecord chosen;
    if (pool.empty()) {
      // Cold start: nobody has described anything yet.
      scene = new_scene(config_.scenes);
      const int target = pick_target(scene);
      std::uint64_t seed;
      {
        std::lock_guard lock(state_mutex_);
        seed = rng_();
      }
      const auto text = oracle_describe(scene, target, {}, reference_pattern_table(), seed);
      chosen = store_.record_description(scene.id, target, text, "oracle", "oracle",
                                         parse_diagnostics(text, default_lexicon()));
    } else {
      std::lock_guard lock(state_mutex_);
      chosen = pool[static_cast<std::size_t>(rng_() % pool.size())];
    }
    scene = require_scene(chosen.row.scene_id);
    task.target = chosen.row.object_id;
    task.description_id = chosen.id;
    task.text = chosen.row.text;
  } else {
    throw ApiError(400, "mode must be 'describe' or 'guess'");
  }
  task.scene_id = scene.id;
  const auto id = new_task_id();
  nlohmann::json out{{"task_id", id}, {"mode", mode}, {"scene", public_scene_json(scene)}};
  if (mode == "describe")
    out["target"] = task.target;
  else
    out["description"] = task.text;
  std::lock_guard lock(state_mutex_);
  tasks_.emplace(id, std::move(task));
  return out;
}

nlohmann::json GameService::answer(const std::string& task_id, const nlohmann::json& body) {
  Task task;
  {
    std::lock_guard lock(state_mutex_);
    const auto it = tasks_.find(task_id);
    if (it == tasks_.end()) throw ApiError(404, "unknown task '" + task_id + "'");
    if (it->second.answered) {
      if (it->second.result.is_null()) throw ApiError(409, "task '" + task_id + "' is being answered");
      return it->second.result;
    }
    task = it->second;
  }
  const auto scene = require_scene(task.scene_id);
  const auto& objs = objects(scene);
  const auto m = model();
  std::unique_ptr<GoldGrounding> gold;
  if (!m) gold = std::make_unique<GoldGrounding>(scene, default_lexicon());
  const Grounding& grounding = m ? static_cast<const Grounding&>(*m) : *gold;
  const Lexicon& lexicon = m ? m->lexicon() : default_lexicon();

  nlohmann::json result;
  if (task.mode == "guess") {
    const auto object_id = field<int>(body, "object_id");
    const bool correct = object_id == task.target;
    const auto [mu, sigma] = scores(grounding, lexicon, task.text, objs, task.target);
    result = {{"correct", correct}, {"target", task.target}, {"mu", mu}, {"sigma", sigma}};
    std::lock_guard lock(state_mutex_);
    auto& t = tasks_.at(task_id);
    if (t.answered) return t.result;
    store_.record_answer(task.description_id, task_id, task.player, object_id, correct);
    t.answered = true;
    t.result = result;
    return result;
  }

  const auto text = field<std::string>(body, "text");
  {
    std::lock_guard lock(state_mutex_);
    auto& t = tasks_.at(task_id);
    if (t.answered) {
      if (t.result.is_null()) throw ApiError(409, "task '" + task_id + "' is being answered");
      return t.result;
    }
    t.answered = true;
  }
  DescriptionRecord record;
  try {
    record = store_.record_description(task.scene_id, task.target, text, "human", task.player,
                                       parse_diagnostics(text, lexicon));
  } catch (const Error& e) {
    std::lock_guard lock(state_mutex_);
    tasks_.at(task_id).answered = false;
    throw ApiError(400, e.what());
  }
  bool correct = false;
  try {
    correct = guess(grounding, text, objs, lexicon).object_id == task.target;
  } catch (const Error&) {
  }
  const auto [mu, sigma] = scores(grounding, lexicon, text, objs, task.target);
  result = {{"correct", correct},         {"target", task.target},
            {"mu", mu},                   {"sigma", sigma},
            {"record_id", record.id},     {"diagnostics", record.diagnostics}};
  std::lock_guard lock(state_mutex_);
  tasks_.at(task_id).result = result;
  return result;
}

std::shared_ptr<const GroundedModel> GameService::train_snapshot() {
  const auto corpus = store_.training_corpus();
  if (corpus.empty()) throw ApiError(400, "the corpus is empty");
  std::map<std::string, std::vector<SceneObject>> objs;
  for (const auto& s : store_.scenes()) objs.emplace(s.id, objects(s));
  TrainingParams params = config_.training;
  params.seed = config_.seed;
  auto model = std::make_shared<const GroundedModel>(train_from_corpus(corpus, objs, params));
  write_model(store_.model_path(), *model);
  return model;
}

nlohmann::json GameService::train() {
  std::lock_guard train_lock(train_mutex_);
  const auto m = train_snapshot();
  swap_model(m);

  long system_rows = 0;
  for (int i = 0; i < config_.system_scenes; ++i) {
    const auto scene = new_scene(config_.scenes);
    const int target = pick_target(scene);
    if (target == 0) continue;
    for (int method : {1, 3}) {
      const auto g = generate_description(*m, m->lexicon(), m->patterns(), objects(scene), target, config_.tau, method);
      store_.record_description(scene.id, target, g.text, "system", "system:method" + std::to_string(method),
                                {{"pattern", g.pattern}, {"mu", g.mu}, {"sigma", g.sigma}, {"status", to_string(g.status)}});
      ++system_rows;
    }
  }

  nlohmann::json features = nlohmann::json::object();
  for (const auto& [cls, names] : m->selected_features()) features[std::to_string(cls)] = names;
  return {{"per_class_features", features},
          {"corpus_size", m->meta().corpus_size},
          {"corpus_hash", m->meta().corpus_hash},
          {"system_descriptions", system_rows}};
}

nlohmann::json GameService::model_json() const {
  const auto m = model();
  if (!m) throw ApiError(404, "no model has been trained yet");
  return to_json(*m);
}

nlohmann::json GameService::leaderboard() const { return to_json(store_.leaderboard()); }

struct HttpServer::Impl {
  GameService& service;
  httplib::Server server;
  Impl(GameService& s) : service(s) {}
};

namespace {

void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

template <typename Fn>
void handle(httplib::Response& res, Fn&& fn) {
  try {
    send_json(res, 200, fn());
  } catch (const ApiError& e) {
    send_json(res, e.status(), {{"error", e.what()}});
  } catch (const LookupError& e) {
    send_json(res, 404, {{"error", e.what()}});
  } catch (const DataError& e) {
    send_json(res, 400, {{"error", e.what()}});
  } catch (const ParseError& e) {
    send_json(res, 400, {{"error", e.what()}});
  } catch (const std::exception& e) {
    send_json(res, 500, {{"error", e.what()}});
  }
}

nlohmann::json body_json(const httplib::Request& req) {
  if (req.body.find_first_not_of(" \t\r\n") == std::string::npos) return nlohmann::json::object();
  try {
    return nlohmann::json::parse(req.body);
  } catch (const nlohmann::json::exception& e) {
    throw ApiError(400, std::string("request body is not JSON: ") + e.what());
  }
}

}  // namespace

HttpServer::HttpServer(GameService& service, std::filesystem::path static_dir)
    : impl_(std::make_unique<Impl>(service)) {
  auto& srv = impl_->server;
  auto& svc = impl_->service;

  srv.Post("/api/scenes", [&svc](const httplib::Request& req, httplib::Response& res) {
    handle(res, [&] { return svc.create_scene(body_json(req)); });
  });
  srv.Get(R"(/api/scenes/([^/]+)/raster\.png)", [&svc](const httplib::Request& req, httplib::Response& res) {
    try {
      res.set_content(svc.raster_png(req.matches[1]), "image/png");
    } catch (const ApiError& e) {
      send_json(res, e.status(), {{"error", e.what()}});
    } catch (const std::exception& e) {
      send_json(res, 500, {{"error", e.what()}});
    }
  });
  srv.Get(R"(/api/scenes/([^/]+))", [&svc](const httplib::Request& req, httplib::Response& res) {
    handle(res, [&] { return svc.scene(req.matches[1]); });
  });
  srv.Post("/api/descriptions", [&svc](const httplib::Request& req, httplib::Response& res) {
    handle(res, [&] { return svc.post_description(body_json(req)); });
  });
  srv.Get("/api/games/next", [&svc](const httplib::Request& req, httplib::Response& res) {
    handle(res, [&] {
      return svc.next_task(req.has_param("mode") ? req.get_param_value("mode") : "",
                           req.has_param("player") ? req.get_param_value("player") : "");
    });
  });
  srv.Post(R"(/api/games/([^/]+)/answer)", [&svc](const httplib::Request& req, httplib::Response& res) {
    handle(res, [&] { return svc.answer(req.matches[1], body_json(req)); });
  });
  srv.Post("/api/train", [&svc](const httplib::Request&, httplib::Response& res) {
    handle(res, [&] { return svc.train(); });
  });
  srv.Get("/api/model", [&svc](const httplib::Request&, httplib::Response& res) {
    handle(res, [&] { return svc.model_json(); });
  });
  srv.Get("/api/leaderboard", [&svc](const httplib::Request&, httplib::Response& res) {
    handle(res, [&] { return svc.leaderboard(); });
  });
  if (!static_dir.empty()) srv.set_mount_point("/", static_dir.string());
}

HttpServer::~HttpServer() = default;

int HttpServer::bind(const std::string& host, int port) {
  int bound = port;
  if (port == 0)
    bound = impl_->server.bind_to_any_port(host);
  else if (!impl_->server.bind_to_port(host, port))
    bound = -1;
  if (bound < 0) throw Error("cannot bind " + host + ":" + std::to_string(port));
  return bound;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::stop() { impl_->server.stop(); }

}  // namespace shapetalk
