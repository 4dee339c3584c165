#include "shapetalk/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <random>
#include <sstream>

#include "shapetalk/error.hpp"

namespace shapetalk {

nlohmann::json to_json(const EvalReport& r, bool with_outcomes) {
  nlohmann::json methods = nlohmann::json::object();
  for (const auto& [m, s] : r.methods)
    methods[std::to_string(m)] = {{"accuracy", s.accuracy()}, {"n", s.n}, {"correct", s.correct}};
  nlohmann::json ranking = nlohmann::json::array();
  for (const auto& e : r.ranking) ranking.push_back({{"name", e.name}, {"accuracy", e.accuracy}, {"n", e.n}});
  nlohmann::json j{{"methods", methods}, {"ranking", ranking}};
  if (with_outcomes) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& o : r.outcomes)
      out.push_back({{"scene_id", o.scene_id},
                     {"method", o.method},
                     {"target", o.target},
                     {"guessed", o.guessed},
                     {"correct", o.correct},
                     {"text", o.text},
                     {"mu", o.mu},
                     {"sigma", o.sigma},
                     {"status", o.status}});
    j["outcomes"] = out;
    j["log"] = r.log;
  }
  return j;
}

std::string ranking_csv(const EvalReport& r) {
  std::ostringstream out;
  out << "rank,name,accuracy,n\n";
  for (std::size_t i = 0; i < r.ranking.size(); ++i) {
    char acc[32];
    std::snprintf(acc, sizeof acc, "%.4f", r.ranking[i].accuracy);
    out << i + 1 << ',' << r.ranking[i].name << ',' << acc << ',' << r.ranking[i].n << '\n';
  }
  return out.str();
}

namespace {

int resolve(const Grounding& grounding, const Lexicon& lexicon, const std::string& text,
            const std::vector<SceneObject>& objects) {
  return guess(grounding, text, objects, lexicon).object_id;
}

}  // namespace

EvalReport evaluate(const Grounding& generator, const Lexicon& generator_lexicon, const PatternTable& table,
                    const Grounding* guesser, const Lexicon& guesser_lexicon, const std::vector<Scene>& scenes,
                    const EvalOptions& options) {
  if (options.guesser == GuesserKind::model && !guesser) throw Error("model guesser requested without a model");
  EvalReport report;
  for (int m : options.methods) report.methods[m];

  struct Describer {
    std::string name;
    OracleNoise noise;
    MethodStats stats;
  };
  std::vector<Describer> describers;
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < options.describers; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "describer-%02d", i + 1);
    describers.push_back({name, {0.01 + 0.09 * unit(rng), 0.3 * unit(rng)}, {}});
  }

  for (std::size_t si = 0; si < scenes.size(); ++si) {
    const auto& scene = scenes[si];
    const auto objects = scene_objects(scene, options.mode);
    const int target = scene.selected;
    const bool visible = std::any_of(objects.begin(), objects.end(), [&](const SceneObject& o) { return o.id == target; });
    std::optional<GoldGrounding> gold;
    if (options.guesser == GuesserKind::gold) gold.emplace(scene);
    const Grounding& judge = gold ? static_cast<const Grounding&>(*gold) : *guesser;
    const Lexicon& judge_lexicon = gold ? default_lexicon() : guesser_lexicon;

    for (int m : options.methods) {
      SceneOutcome o;
      o.scene_id = scene.id;
      o.method = m;
      o.target = target;
      auto& stats = report.methods[m];
      ++stats.n;
      if (!visible) {
        report.log.push_back(scene.id + ": target " + std::to_string(target) + " is not visible");
        report.outcomes.push_back(o);
        continue;
      }
      try {
        const auto g = generate_description(generator, generator_lexicon, table, objects, target, options.tau, m);
        o.text = g.text;
        o.mu = g.mu;
        o.sigma = g.sigma;
        o.status = std::string(to_string(g.status));
        o.guessed = resolve(judge, judge_lexicon, g.text, objects);
        o.correct = o.guessed == target;
      } catch (const Error& e) {
        report.log.push_back(scene.id + " method " + std::to_string(m) + ": " + e.what());
      }
      if (o.correct) ++stats.correct;
      report.outcomes.push_back(std::move(o));
    }

    for (std::size_t d = 0; d < describers.size(); ++d) {
      auto& desc = describers[d];
      ++desc.stats.n;
      if (!visible) continue;
      try {
        const auto text = oracle_describe(scene, target, desc.noise, reference_pattern_table(),
                                          options.seed * 1000003ULL + si * 131 + d);
        if (resolve(judge, judge_lexicon, text, objects) == target) ++desc.stats.correct;
      } catch (const Error&) {
      }
    }
  }

  if (options.describers > 0) {
    for (const auto& [m, s] : report.methods) report.ranking.push_back({"method " + std::to_string(m), s.accuracy(), s.n});
    for (const auto& d : describers) report.ranking.push_back({d.name, d.stats.accuracy(), d.stats.n});
    std::stable_sort(report.ranking.begin(), report.ranking.end(), [](const RankEntry& a, const RankEntry& b) {
      if (a.accuracy != b.accuracy) return a.accuracy > b.accuracy;
      return a.name < b.name;
    });
  }
  return report;
}

EvalReport evaluate(const GroundedModel& generator, const GroundedModel* guesser, const std::vector<Scene>& scenes,
                    const EvalOptions& options) {
  const Lexicon& guesser_lexicon = guesser ? guesser->lexicon() : default_lexicon();
  return evaluate(generator, generator.lexicon(), generator.patterns(), guesser, guesser_lexicon, scenes, options);
}

ExperimentConfig default_experiment() {
  ExperimentConfig c;
  c.train_config.twin_probability = 0.5;
  c.test_config.twin_probability = 0.5;
  c.corpus.per_object = 2;
  c.corpus.noise.misspell_rate = 0.03;
  return c;
}

namespace {

std::vector<Scene> make_scenes(const SceneConfig& cfg, int n, std::uint64_t base, std::vector<std::string>& log) {
  std::vector<Scene> out;
  for (std::uint64_t s = base; static_cast<int>(out.size()) < n; ++s) {
    try {
      out.push_back(generate_scene(cfg, s));
    } catch (const GenerationError& e) {
      log.push_back("seed " + std::to_string(s) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  std::vector<std::string> log;
  const auto train = make_scenes(config.train_config, config.train_scenes, config.seed * 100000ULL, log);
  const auto test = make_scenes(config.test_config, config.test_scenes, config.seed * 100000ULL + 50000ULL, log);

  auto corpus_opts = config.corpus;
  corpus_opts.seed = config.seed;
  const auto corpus = synthesize_corpus(train, reference_pattern_table(), corpus_opts);
  std::vector<CorpusRow> even, odd;
  for (std::size_t i = 0; i < corpus.size(); ++i) (i % 2 ? odd : even).push_back(corpus[i]);

  const auto objects = segment_scenes(train, corpus_opts.mode);
  ExperimentResult r;
  r.generator = train_from_corpus(even, objects, config.training);
  r.guesser = train_from_corpus(odd, objects, config.training);
  r.report = evaluate(r.generator, &r.guesser, test, config.eval);
  r.report.log.insert(r.report.log.begin(), log.begin(), log.end());
  r.patterns = r.generator.patterns();
  r.lexicon = r.generator.lexicon();
  r.corpus_size = corpus.size();
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

}  // namespace shapetalk
