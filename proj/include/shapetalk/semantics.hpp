#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "shapetalk/features.hpp"
#include "shapetalk/grounding.hpp"
#include "shapetalk/lexicon.hpp"

namespace shapetalk {

struct MatchReport {
  int object_id = 0;
  double mu = 0.0;
  /// One entry per constraint, in description order.
  std::vector<std::pair<GeneralizedConstraint, double>> per_word;
};

struct AmbiguityReport {
  int target_id = 0;
  double sigma = 0.0;
  std::map<int, double> competitors;  ///< object id -> mu
};

/// mu_M: the minimum membership over the description's constraints.
/// Throws Error when there are no constraints.
MatchReport match_degree(const Grounding& grounding, const std::vector<GeneralizedConstraint>& constraints,
                         const SceneObject& object);
MatchReport match_degree(const Grounding& grounding, const Description& description, const SceneObject& object);

/// sigma_A: the best mu_M among the objects other than the target, 0 when the
/// target is alone. Throws LookupError when the target is absent.
AmbiguityReport ambiguity_degree(const Grounding& grounding, const std::vector<GeneralizedConstraint>& constraints,
                                 const std::vector<SceneObject>& objects, int target_id);
AmbiguityReport ambiguity_degree(const Grounding& grounding, const Description& description,
                                 const std::vector<SceneObject>& objects, int target_id);

nlohmann::json to_json(const MatchReport& m);
nlohmann::json to_json(const AmbiguityReport& a);
/// The service shape {"mu", "per_word", "sigma", "competitors"}.
nlohmann::json to_json(const MatchReport& m, const AmbiguityReport& a);

/// Memberships looked up from a table, for stipulated examples and tests.
/// Missing entries fall back to `fallback`.
class TableGrounding : public Grounding {
 public:
  explicit TableGrounding(double fallback = 0.0) : fallback_(fallback) {}
  void set(int object_id, const std::string& word, double mu) { table_[{object_id, word}] = mu; }
  double membership(int cls, std::string_view word, const SceneObject& object) const override;

 private:
  std::map<std::pair<int, std::string>, double> table_;
  double fallback_;
};

}  // namespace shapetalk
