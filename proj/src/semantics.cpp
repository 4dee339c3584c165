#include "shapetalk/semantics.hpp"

#include <algorithm>

#include "shapetalk/error.hpp"

namespace shapetalk {

MatchReport match_degree(const Grounding& grounding, const std::vector<GeneralizedConstraint>& constraints,
                         const SceneObject& object) {
  if (constraints.empty()) throw Error("matching degree of an empty description is undefined");
  MatchReport r;
  r.object_id = object.id;
  r.mu = 1.0;
  for (const auto& c : constraints) {
    const double mu = std::clamp(grounding.membership(c.cls, c.word, object), 0.0, 1.0);
    r.per_word.emplace_back(c, mu);
    r.mu = std::min(r.mu, mu);
  }
  return r;
}

MatchReport match_degree(const Grounding& grounding, const Description& description, const SceneObject& object) {
  return match_degree(grounding, description.constraints, object);
}

AmbiguityReport ambiguity_degree(const Grounding& grounding, const std::vector<GeneralizedConstraint>& constraints,
                                 const std::vector<SceneObject>& objects, int target_id) {
  if (std::none_of(objects.begin(), objects.end(), [&](const SceneObject& o) { return o.id == target_id; }))
    throw LookupError("target " + std::to_string(target_id) + " is not among the scene objects");
  AmbiguityReport a;
  a.target_id = target_id;
  for (const auto& o : objects) {
    if (o.id == target_id) continue;
    const double mu = match_degree(grounding, constraints, o).mu;
    a.competitors[o.id] = mu;
    a.sigma = std::max(a.sigma, mu);
  }
  return a;
}

AmbiguityReport ambiguity_degree(const Grounding& grounding, const Description& description,
                                 const std::vector<SceneObject>& objects, int target_id) {
  return ambiguity_degree(grounding, description.constraints, objects, target_id);
}

nlohmann::json to_json(const MatchReport& m) {
  nlohmann::json per_word = nlohmann::json::object();
  for (const auto& [c, mu] : m.per_word) {
    // Repeated words are idempotent under min; keep the smallest.
    if (!per_word.contains(c.word) || per_word[c.word].get<double>() > mu) per_word[c.word] = mu;
  }
  return {{"object_id", m.object_id}, {"mu", m.mu}, {"per_word", per_word}};
}

nlohmann::json to_json(const AmbiguityReport& a) {
  nlohmann::json comp = nlohmann::json::object();
  for (const auto& [id, mu] : a.competitors) comp[std::to_string(id)] = mu;
  return {{"target", a.target_id}, {"sigma", a.sigma}, {"competitors", comp}};
}

nlohmann::json to_json(const MatchReport& m, const AmbiguityReport& a) {
  auto j = to_json(m);
  const auto ja = to_json(a);
  j["sigma"] = ja["sigma"];
  j["competitors"] = ja["competitors"];
  return j;
}

double TableGrounding::membership(int, std::string_view word, const SceneObject& object) const {
  const auto it = table_.find({object.id, std::string(word)});
  return it == table_.end() ? fallback_ : it->second;
}

}  // namespace shapetalk
