// Command-line front end: batch data generation, training, generation,
// guessing, evaluation and the game server.

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "shapetalk/error.hpp"
#include "shapetalk/evaluation.hpp"
#include "shapetalk/generation.hpp"
#include "shapetalk/grounding.hpp"
#include "shapetalk/oracle.hpp"
#include "shapetalk/scene.hpp"
#include "shapetalk/service.hpp"

using namespace shapetalk;
using nlohmann::json;

namespace {

constexpr int kUsage = 1;
constexpr int kDataError = 2;

HttpServer* active_server = nullptr;

void on_signal(int) {
  if (active_server) active_server->stop();
}

Scene pick_scene(const std::string& file, const std::string& id) {
  const auto scenes = read_scenes_jsonl(file);
  if (scenes.empty()) throw DataError(file + " holds no scenes");
  if (id.empty()) {
    if (scenes.size() > 1) throw DataError(file + " holds several scenes; pass --scene-id");
    return scenes.front();
  }
  for (const auto& s : scenes)
    if (s.id == id) return s;
  throw DataError("no scene '" + id + "' in " + file);
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << text;
}

SegmentMode segment_mode(const std::string& name) {
  if (name == "color_regions") return SegmentMode::color_regions;
  if (name == "ground_truth") return SegmentMode::ground_truth;
  throw DataError("unknown segmentation mode '" + name + "'");
}

std::string default_data_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("SHAPETALK_DATA"); env && *env) return env;
  return "shapetalk-data";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Grounded shape-description engine"};
  app.require_subcommand(1);
  std::string segmentation = "color_regions";
  app.add_option("--segmentation", segmentation, "color_regions or ground_truth")->capture_default_str();

  // gen-scenes
  auto* gen = app.add_subcommand("gen-scenes", "Generate random scenes as JSONL");
  int gen_n = 10;
  std::uint64_t gen_seed = 1;
  std::string gen_out;
  SceneConfig gen_cfg;
  gen->add_option("--n", gen_n, "Number of scenes")->check(CLI::PositiveNumber)->capture_default_str();
  gen->add_option("--seed", gen_seed, "First scene seed")->capture_default_str();
  gen->add_option("--out", gen_out, "Output JSONL file")->required();
  gen->add_option("--min-shapes", gen_cfg.min_shapes)->capture_default_str();
  gen->add_option("--max-shapes", gen_cfg.max_shapes)->capture_default_str();
  gen->add_option("--overlap-probability", gen_cfg.overlap_probability)->capture_default_str();
  gen->add_option("--twin-probability", gen_cfg.twin_probability)->capture_default_str();

  // synth-corpus
  auto* synth = app.add_subcommand("synth-corpus", "Describe every visible object with the simulated describer");
  std::string synth_scenes, synth_out;
  CorpusOptions synth_opts;
  synth->add_option("--scenes", synth_scenes, "Scenes JSONL")->required();
  synth->add_option("--n", synth_opts.per_object, "Descriptions per object")->capture_default_str();
  synth->add_option("--misspell-rate", synth_opts.noise.misspell_rate)->check(CLI::Range(0.0, 1.0))->capture_default_str();
  synth->add_option("--slip-rate", synth_opts.noise.slip_rate)->check(CLI::Range(0.0, 1.0))->capture_default_str();
  synth->add_option("--seed", synth_opts.seed)->capture_default_str();
  synth->add_option("--out", synth_out, "Output corpus JSONL")->required();

  // train
  auto* train = app.add_subcommand("train", "Learn lexicon, patterns and trees from a corpus");
  std::string train_corpus, train_scenes, train_out;
  TrainingParams train_params;
  train->add_option("--corpus", train_corpus)->required();
  train->add_option("--scenes", train_scenes)->required();
  train->add_option("--out", train_out, "Model JSON")->required();
  train->add_option("--folds", train_params.folds)->check(CLI::Range(2, 100))->capture_default_str();
  train->add_option("--terms", train_params.n_terms)->check(CLI::Range(2, 20))->capture_default_str();
  train->add_option("--seed", train_params.seed)->capture_default_str();

  // describe
  auto* describe = app.add_subcommand("describe", "Generate a referring expression for one object");
  std::string d_file, d_id, d_model;
  int d_object = 0, d_method = 3;
  double d_tau = kDefaultTau;
  describe->add_option("--scene-file", d_file)->required();
  describe->add_option("--scene-id", d_id);
  describe->add_option("--object", d_object, "Target shape id, default the scene's selected shape");
  describe->add_option("--method", d_method)->check(CLI::IsMember({1, 3}))->capture_default_str();
  describe->add_option("--tau", d_tau)->check(CLI::Range(0.0, 1.0))->capture_default_str();
  describe->add_option("--model", d_model, "Model JSON; gold semantics when omitted");

  // guess
  auto* guess_cmd = app.add_subcommand("guess", "Resolve a description to an object");
  std::string g_file, g_id, g_text, g_model;
  guess_cmd->add_option("--scene-file", g_file)->required();
  guess_cmd->add_option("--scene-id", g_id);
  guess_cmd->add_option("--text", g_text)->required();
  guess_cmd->add_option("--model", g_model, "Model JSON; gold semantics when omitted");

  // eval
  auto* eval = app.add_subcommand("eval", "Score generation methods against a guesser");
  std::string e_scenes, e_report, e_model, e_guesser_model, e_csv;
  std::vector<int> e_methods{1, 3};
  double e_tau = kDefaultTau;
  bool e_gold = false;
  int e_describers = 0;
  eval->add_option("--scenes", e_scenes)->required();
  eval->add_option("--methods", e_methods)->delimiter(',')->check(CLI::IsMember({1, 3}));
  eval->add_option("--tau", e_tau)->check(CLI::Range(0.0, 1.0))->capture_default_str();
  eval->add_option("--report", e_report, "Report JSON, stdout when omitted");
  eval->add_option("--model", e_model, "Generator model")->required();
  eval->add_option("--guesser-model", e_guesser_model, "Guesser model, default the generator");
  eval->add_flag("--gold-guesser", e_gold, "Guess with the scenes' gold semantics");
  eval->add_option("--describers", e_describers, "Simulated describers to rank alongside")->capture_default_str();
  eval->add_option("--ranking-csv", e_csv, "Write the ranking as CSV");

  // experiment
  auto* exp = app.add_subcommand("experiment", "End-to-end synthetic experiment");
  auto exp_cfg = default_experiment();
  std::string exp_report;
  exp->add_option("--train-scenes", exp_cfg.train_scenes)->capture_default_str();
  exp->add_option("--test-scenes", exp_cfg.test_scenes)->capture_default_str();
  exp->add_option("--seed", exp_cfg.seed)->capture_default_str();
  exp->add_option("--tau", exp_cfg.eval.tau)->capture_default_str();
  exp->add_option("--misspell-rate", exp_cfg.corpus.noise.misspell_rate)->capture_default_str();
  exp->add_option("--report", exp_report, "Report JSON, stdout when omitted");

  // serve
  auto* serve = app.add_subcommand("serve", "Run the game service");
  ServiceConfig svc;
  int port = 8080;
  std::string host = "0.0.0.0", data_flag, static_dir;
  serve->add_option("--port", port)->check(CLI::Range(0, 65535))->capture_default_str();
  serve->add_option("--host", host)->capture_default_str();
  serve->add_option("--data", data_flag, "Data dir (SHAPETALK_DATA when omitted)");
  serve->add_option("--tau", svc.tau)->check(CLI::Range(0.0, 1.0))->capture_default_str();
  serve->add_option("--seed", svc.seed)->capture_default_str();
  serve->add_option("--static", static_dir, "Directory served at / for a browser client");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    const auto mode = segment_mode(segmentation);
    if (*gen) {
      std::vector<Scene> scenes;
      for (std::uint64_t s = gen_seed; static_cast<int>(scenes.size()) < gen_n; ++s) {
        try {
          scenes.push_back(generate_scene(gen_cfg, s));
        } catch (const GenerationError& e) {
          std::cerr << "seed " << s << ": " << e.what() << '\n';
          if (s - gen_seed > static_cast<std::uint64_t>(gen_n) * 10) throw;
        }
      }
      write_scenes_jsonl(gen_out, scenes);
      std::cerr << "wrote " << scenes.size() << " scenes to " << gen_out << '\n';
    } else if (*synth) {
      synth_opts.mode = mode;
      const auto rows = synthesize_corpus(read_scenes_jsonl(synth_scenes), reference_pattern_table(), synth_opts);
      write_corpus_jsonl(synth_out, rows);
      std::cerr << "wrote " << rows.size() << " descriptions to " << synth_out << '\n';
    } else if (*train) {
      const auto corpus = read_corpus_jsonl(train_corpus);
      const auto objects = segment_scenes(read_scenes_jsonl(train_scenes), mode);
      const auto model = train_from_corpus(corpus, objects, train_params);
      write_model(train_out, model);
      json summary;
      for (const auto& [cls, names] : model.selected_features()) summary[std::to_string(cls)] = names;
      std::cout << json{{"per_class_features", summary}, {"corpus_size", corpus.size()}}.dump(2) << '\n';
    } else if (*describe) {
      const auto scene = pick_scene(d_file, d_id);
      const int target = d_object ? d_object : scene.selected;
      const auto objects = scene_objects(scene, mode);
      GenerationResult r;
      if (d_model.empty()) {
        const GoldGrounding gold(scene, default_lexicon());
        r = generate_description(gold, default_lexicon(), reference_pattern_table(), objects, target, d_tau, d_method);
      } else {
        const auto model = read_model(d_model);
        r = generate_description(model, model.lexicon(), model.patterns(), objects, target, d_tau, d_method);
      }
      auto j = to_json(r);
      j["scene_id"] = scene.id;
      j["target"] = target;
      std::cout << j.dump(2) << '\n';
    } else if (*guess_cmd) {
      const auto scene = pick_scene(g_file, g_id);
      const auto objects = scene_objects(scene, mode);
      GuessResult r;
      if (g_model.empty()) {
        const GoldGrounding gold(scene, default_lexicon());
        r = guess(gold, g_text, objects, default_lexicon());
      } else {
        const auto model = read_model(g_model);
        r = guess(model, g_text, objects, model.lexicon());
      }
      json all = json::array();
      for (const auto& m : r.all) all.push_back(to_json(m));
      std::cout << json{{"object_id", r.object_id}, {"mu", r.match.mu}, {"scores", all}}.dump(2) << '\n';
    } else if (*eval) {
      const auto scenes = read_scenes_jsonl(e_scenes);
      const auto generator = read_model(e_model);
      std::optional<GroundedModel> guesser;
      if (!e_guesser_model.empty()) guesser = read_model(e_guesser_model);
      EvalOptions opts;
      opts.methods = e_methods;
      opts.tau = e_tau;
      opts.guesser = e_gold ? GuesserKind::gold : GuesserKind::model;
      opts.describers = e_describers;
      opts.mode = mode;
      const auto report = evaluate(generator, guesser ? &*guesser : &generator, scenes, opts);
      write_text(e_report, to_json(report, true).dump(2) + "\n");
      if (!e_csv.empty()) write_text(e_csv, ranking_csv(report));
      for (const auto& [m, s] : report.methods)
        std::cerr << "method " << m << ": " << s.correct << "/" << s.n << " = " << s.accuracy() << '\n';
    } else if (*exp) {
      exp_cfg.eval.mode = mode;
      exp_cfg.corpus.mode = mode;
      const auto result = run_experiment(exp_cfg);
      auto j = to_json(result.report);
      j["corpus_size"] = result.corpus_size;
      j["seconds"] = result.seconds;
      write_text(exp_report, j.dump(2) + "\n");
      for (const auto& [m, s] : result.report.methods)
        std::cerr << "method " << m << ": " << s.correct << "/" << s.n << " = " << s.accuracy() << '\n';
    } else if (*serve) {
      svc.data_dir = default_data_dir(data_flag);
      GameService service(svc);
      HttpServer server(service, static_dir);
      const int bound = server.bind(host, port);
      std::cerr << "serving " << svc.data_dir.string() << " on " << host << ":" << bound << '\n';
      active_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      server.listen();
      active_server = nullptr;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  }
  return 0;
}
