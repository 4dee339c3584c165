#include "shapetalk/generation.hpp"

#include <algorithm>
#include <cctype>
#include <limits>

#include "shapetalk/error.hpp"

namespace shapetalk {

std::string_view to_string(GenerationStatus s) {
  return s == GenerationStatus::unambiguous ? "unambiguous" : "best_effort";
}

nlohmann::json to_json(const GenerationResult& r) {
  return {{"text", r.text},
          {"pattern", r.pattern},
          {"mu", r.mu},
          {"sigma", r.sigma},
          {"patterns_tried", r.patterns_tried},
          {"status", to_string(r.status)}};
}

namespace {

std::string upper(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

const SceneObject& find_object(const std::vector<SceneObject>& objects, int id) {
  for (const auto& o : objects)
    if (o.id == id) return o;
  throw LookupError("target " + std::to_string(id) + " is not among the scene objects");
}

}  // namespace

std::vector<GeneralizedConstraint> instantiate(const Grounding& grounding, const Lexicon& lexicon,
                                               const Pattern& pattern, const SceneObject& target) {
  std::vector<GeneralizedConstraint> out;
  std::vector<std::string> used_positions;
  for (int cls : pattern) {
    if (auto d = grounding.default_word(cls)) {
      out.push_back({cls, *d});
      continue;
    }
    const auto& words = lexicon.words(cls);
    if (words.empty()) throw LookupError("class " + std::to_string(cls) + " has no words");
    const std::string* best = nullptr;
    double best_mu = -1.0;
    for (const auto& w : words) {
      if (cls == 6 && std::find(used_positions.begin(), used_positions.end(), w) != used_positions.end()) continue;
      const double mu = grounding.membership(cls, w, target);
      const bool better = !best || mu > best_mu ||
                          (mu == best_mu && (lexicon.frequency(w) > lexicon.frequency(*best) ||
                                             (lexicon.frequency(w) == lexicon.frequency(*best) && w < *best)));
      if (better) {
        best = &w;
        best_mu = mu;
      }
    }
    if (!best) best = &words.front();  // every position word already used
    if (cls == 6) used_positions.push_back(*best);
    out.push_back({cls, *best});
  }
  return out;
}

GenerationResult generate_description(const Grounding& grounding, const Lexicon& lexicon, const PatternTable& table,
                                      const std::vector<SceneObject>& objects, int target_id, double tau,
                                      int method) {
  if (table.empty()) throw Error("cannot generate from an empty pattern table");
  if (method != 1 && method != 3) throw Error("unknown generation method " + std::to_string(method));
  const SceneObject& target = find_object(objects, target_id);

  GenerationResult best;
  double best_score = -std::numeric_limits<double>::infinity();
  int tried = 0;
  for (const auto& entry : table.entries()) {
    ++tried;
    GenerationResult c;
    c.pattern = entry.pattern;
    c.constraints = instantiate(grounding, lexicon, entry.pattern, target);
    c.mu = match_degree(grounding, c.constraints, target).mu;
    c.sigma = ambiguity_degree(grounding, c.constraints, objects, target_id).sigma;
    c.patterns_tried = tried;
    const bool unambiguous = c.sigma <= tau && c.mu > c.sigma;
    c.status = unambiguous ? GenerationStatus::unambiguous : GenerationStatus::best_effort;
    for (std::size_t i = 0; i < c.constraints.size(); ++i) c.text += (i ? " " : "") + upper(c.constraints[i].word);
    if (method == 1 || unambiguous) return c;
    if (c.mu - c.sigma > best_score) {
      best_score = c.mu - c.sigma;
      best = c;
    }
  }
  best.patterns_tried = tried;
  return best;
}

GuessResult guess(const Grounding& grounding, std::string_view text, const std::vector<SceneObject>& objects,
                  const Lexicon& lexicon) {
  if (objects.empty()) throw Error("cannot guess in a scene without objects");
  GuessResult g;
  g.description = parse(text, lexicon);
  bool first = true;
  for (const auto& o : objects) {
    auto m = match_degree(grounding, g.description, o);
    if (first || m.mu > g.match.mu || (m.mu == g.match.mu && o.id < g.object_id)) {
      g.object_id = o.id;
      g.match = m;
      first = false;
    }
    g.all.push_back(std::move(m));
  }
  return g;
}

}  // namespace shapetalk
