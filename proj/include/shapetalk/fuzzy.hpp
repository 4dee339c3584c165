#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "shapetalk/features.hpp"

namespace shapetalk {

/// Strong triangular partition of one feature's range. Terms peak at the
/// given points; the outer terms are shoulders that stay at 1 past the ends.
class FuzzyPartition {
 public:
  FuzzyPartition() = default;
  FuzzyPartition(std::size_t feature, std::vector<double> peaks);

  std::size_t feature() const { return feature_; }
  std::size_t size() const { return peaks_.size(); }
  const std::vector<double>& peaks() const { return peaks_; }

  double membership(std::size_t term, double value) const;

  /// The (at most two) terms with non-zero membership, as (term, degree).
  std::vector<std::pair<std::size_t, double>> active_terms(double value) const;

 private:
  std::size_t feature_ = 0;
  std::vector<double> peaks_{0.0};
};

/// Peaks at the k/(n_terms-1) sample quantiles, merged where they coincide.
/// A feature with fewer than two distinct values gets a single term.
FuzzyPartition fuzzify(std::size_t feature, std::span<const double> values, std::size_t n_terms = 3);

nlohmann::json to_json(const FuzzyPartition& p);
FuzzyPartition partition_from_json(const nlohmann::json& j);

struct LabeledExample {
  FeatureVector features;
  std::size_t label = 0;  ///< index into the class's word list
};

struct TreeParams {
  int max_depth = 4;
  double purity = 0.95;
  double min_weight = 1.0;
};

struct TreeNode {
  int feature = -1;            ///< split feature, -1 for leaves
  std::vector<int> children;   ///< one per partition term
  std::vector<double> degrees; ///< label distribution of the examples reaching the node
  double weight = 0.0;
  bool is_leaf() const { return feature < 0; }
};

/// Fuzzy decision tree for one word class. Node 0 is the root.
class FuzzyTree {
 public:
  FuzzyTree() = default;
  FuzzyTree(int class_id, std::vector<std::string> words, std::map<std::size_t, FuzzyPartition> partitions,
            std::vector<TreeNode> nodes);

  /// A class whose features carry no signal: every word matches with degree 1.
  static FuzzyTree constant(int class_id, std::vector<std::string> words, std::string default_word);

  int class_id() const { return class_id_; }
  const std::vector<std::string>& words() const { return words_; }
  bool is_constant() const { return constant_; }
  const std::string& default_word() const { return default_word_; }
  void set_default_word(std::string w) { default_word_ = std::move(w); }
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  const std::map<std::size_t, FuzzyPartition>& partitions() const { return partitions_; }

  /// Degree of every word, in word-list order.
  std::vector<double> degrees(const FeatureVector& x) const;
  double membership(std::size_t word_index, const FeatureVector& x) const;

  /// Reached leaves with their path weights (product of term memberships).
  std::vector<std::pair<int, double>> leaf_weights(const FeatureVector& x) const;

  /// Features used by at least one internal node, ascending.
  std::vector<std::size_t> selected_features() const;
  std::size_t node_count() const { return nodes_.size(); }
  int depth() const;

 private:
  int class_id_ = 0;
  std::vector<std::string> words_;
  std::map<std::size_t, FuzzyPartition> partitions_;
  std::vector<TreeNode> nodes_;
  bool constant_ = false;
  std::string default_word_;
};

nlohmann::json to_json(const FuzzyTree& t);
FuzzyTree fuzzy_tree_from_json(int class_id, const nlohmann::json& j);

/// Fuzzy ID3: each node splits on the unused feature with the highest
/// information gain over example weights. Throws Error on an empty set.
FuzzyTree learn_tree(const std::vector<LabeledExample>& examples, const std::vector<std::string>& words,
                     const std::map<std::size_t, FuzzyPartition>& partitions, const TreeParams& params = {},
                     int class_id = 0);

/// Grows the full tree and its weakest-link collapse sequence, then scores each
/// candidate by k-fold cross-validation: every fold grows its own tree, prunes
/// it at the candidate's complexity (geometric mean of adjacent alphas) and
/// counts misclassified held-out examples. Identical feature vectors share a
/// fold. Errors within one standard error of the lowest count as ties and go to
/// the smaller tree, as long as it is no worse than the unpruned tree.
FuzzyTree prune_cv(const std::vector<LabeledExample>& examples, const std::vector<std::string>& words,
                   const std::map<std::size_t, FuzzyPartition>& partitions, int k_folds = 5,
                   const TreeParams& params = {}, std::uint64_t seed = 1, int class_id = 0,
                   std::vector<std::string>* diagnostics = nullptr);

/// Misclassification rate of the tree's argmax word.
double classification_error(const FuzzyTree& tree, const std::vector<LabeledExample>& examples);

}  // namespace shapetalk
