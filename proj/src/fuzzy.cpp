#include "shapetalk/fuzzy.hpp"

#include <algorithm>
#include <cstdio>
#include <array>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "shapetalk/error.hpp"

namespace shapetalk {

// ---------------------------------------------------------------------------
// Partitions

FuzzyPartition::FuzzyPartition(std::size_t feature, std::vector<double> peaks)
    : feature_(feature), peaks_(std::move(peaks)) {
  if (peaks_.empty()) throw Error("a partition needs at least one term");
  if (!std::is_sorted(peaks_.begin(), peaks_.end()) ||
      std::adjacent_find(peaks_.begin(), peaks_.end()) != peaks_.end())
    throw Error("partition peaks must be strictly increasing");
}

std::vector<std::pair<std::size_t, double>> FuzzyPartition::active_terms(double v) const {
  const std::size_t n = peaks_.size();
  if (n == 1 || v <= peaks_.front()) return {{0, 1.0}};
  if (v >= peaks_.back()) return {{n - 1, 1.0}};
  const auto hi = static_cast<std::size_t>(std::upper_bound(peaks_.begin(), peaks_.end(), v) - peaks_.begin());
  const std::size_t lo = hi - 1;
  const double right = (v - peaks_[lo]) / (peaks_[hi] - peaks_[lo]);
  if (right <= 0.0) return {{lo, 1.0}};
  return {{lo, 1.0 - right}, {hi, right}};
}

double FuzzyPartition::membership(std::size_t term, double v) const {
  for (const auto& [t, m] : active_terms(v))
    if (t == term) return m;
  return 0.0;
}

FuzzyPartition fuzzify(std::size_t feature, std::span<const double> values, std::size_t n_terms) {
  if (values.empty()) throw Error("cannot fuzzify a feature without values");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  if (n_terms < 2 || sorted.front() == sorted.back()) return FuzzyPartition(feature, {sorted.front()});
  std::vector<double> peaks;
  const double last = static_cast<double>(sorted.size() - 1);
  for (std::size_t k = 0; k < n_terms; ++k) {
    const double pos = last * static_cast<double>(k) / static_cast<double>(n_terms - 1);
    const auto i = static_cast<std::size_t>(std::floor(pos));
    const double frac = pos - static_cast<double>(i);
    const double q = i + 1 < sorted.size() ? sorted[i] + frac * (sorted[i + 1] - sorted[i]) : sorted[i];
    if (peaks.empty() || q > peaks.back() + 1e-12) peaks.push_back(q);
  }
  return FuzzyPartition(feature, std::move(peaks));
}

nlohmann::json to_json(const FuzzyPartition& p) {
  return {{"feature", feature_name(p.feature())}, {"peaks", p.peaks()}};
}

FuzzyPartition partition_from_json(const nlohmann::json& j) {
  const auto name = j.at("feature").get<std::string>();
  const auto f = feature_index(name);
  if (!f) throw DataError("unknown feature '" + name + "' in partition");
  return FuzzyPartition(*f, j.at("peaks").get<std::vector<double>>());
}

// ---------------------------------------------------------------------------
// Trees

FuzzyTree::FuzzyTree(int class_id, std::vector<std::string> words, std::map<std::size_t, FuzzyPartition> partitions,
                     std::vector<TreeNode> nodes)
    : class_id_(class_id), words_(std::move(words)), partitions_(std::move(partitions)), nodes_(std::move(nodes)) {
  if (nodes_.empty()) throw Error("a tree needs a root");
  for (const auto& n : nodes_) {
    if (n.degrees.size() != words_.size()) throw Error("node degrees do not cover every class word");
    if (!n.is_leaf()) {
      const auto it = partitions_.find(static_cast<std::size_t>(n.feature));
      if (it == partitions_.end() || it->second.size() != n.children.size())
        throw Error("split node does not match its feature partition");
    }
  }
  // Default word: most weighted at the root, ties to word order.
  const auto& root = nodes_.front().degrees;
  default_word_ = words_.empty() ? "" : words_[static_cast<std::size_t>(
                                            std::max_element(root.begin(), root.end()) - root.begin())];
}

FuzzyTree FuzzyTree::constant(int class_id, std::vector<std::string> words, std::string default_word) {
  FuzzyTree t;
  t.class_id_ = class_id;
  TreeNode root;
  root.degrees.assign(words.size(), 1.0);
  t.words_ = std::move(words);
  t.nodes_.push_back(std::move(root));
  t.constant_ = true;
  t.default_word_ = std::move(default_word);
  return t;
}

std::vector<std::pair<int, double>> FuzzyTree::leaf_weights(const FeatureVector& x) const {
  std::vector<std::pair<int, double>> out;
  std::vector<std::pair<int, double>> stack{{0, 1.0}};
  while (!stack.empty()) {
    const auto [id, w] = stack.back();
    stack.pop_back();
    const auto& node = nodes_[static_cast<std::size_t>(id)];
    if (node.is_leaf()) {
      out.emplace_back(id, w);
      continue;
    }
    const auto& part = partitions_.at(static_cast<std::size_t>(node.feature));
    for (const auto& [term, m] : part.active_terms(x[static_cast<std::size_t>(node.feature)]))
      stack.emplace_back(node.children[term], w * m);
  }
  return out;
}

std::vector<double> FuzzyTree::degrees(const FeatureVector& x) const {
  if (constant_) return std::vector<double>(words_.size(), 1.0);
  std::vector<double> out(words_.size(), 0.0);
  for (const auto& [leaf, w] : leaf_weights(x)) {
    const auto& d = nodes_[static_cast<std::size_t>(leaf)].degrees;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += w * d[i];
  }
  for (auto& v : out) v = std::clamp(v, 0.0, 1.0);
  return out;
}

double FuzzyTree::membership(std::size_t word_index, const FeatureVector& x) const {
  if (word_index >= words_.size()) throw LookupError("word index out of range");
  return degrees(x)[word_index];
}

std::vector<std::size_t> FuzzyTree::selected_features() const {
  std::set<std::size_t> used;
  for (const auto& n : nodes_)
    if (!n.is_leaf()) used.insert(static_cast<std::size_t>(n.feature));
  return {used.begin(), used.end()};
}

int FuzzyTree::depth() const {
  std::vector<int> level(nodes_.size(), 0);
  int deepest = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    for (int c : nodes_[i].children) {
      level[static_cast<std::size_t>(c)] = level[i] + 1;
      deepest = std::max(deepest, level[i] + 1);
    }
  }
  return deepest;
}

namespace {

nlohmann::json node_to_json(const FuzzyTree& t, int id) {
  const auto& n = t.nodes()[static_cast<std::size_t>(id)];
  if (n.is_leaf()) {
    nlohmann::json leaf = nlohmann::json::object();
    for (std::size_t i = 0; i < t.words().size(); ++i) leaf[t.words()[i]] = n.degrees[i];
    return {{"leaf", leaf}, {"weight", n.weight}};
  }
  nlohmann::json children = nlohmann::json::array();
  for (int c : n.children) children.push_back(node_to_json(t, c));
  nlohmann::json dist = nlohmann::json::object();
  for (std::size_t i = 0; i < t.words().size(); ++i) dist[t.words()[i]] = n.degrees[i];
  return {{"feature", feature_name(static_cast<std::size_t>(n.feature))},
          {"children", children},
          {"distribution", dist},
          {"weight", n.weight}};
}

int node_from_json(const nlohmann::json& j, const std::vector<std::string>& words, std::vector<TreeNode>& nodes) {
  const int id = static_cast<int>(nodes.size());
  nodes.emplace_back();
  TreeNode node;
  node.weight = j.value("weight", 0.0);
  const auto& dist = j.contains("leaf") ? j.at("leaf") : j.at("distribution");
  for (const auto& w : words) node.degrees.push_back(dist.value(w, 0.0));
  if (!j.contains("leaf")) {
    const auto name = j.at("feature").get<std::string>();
    const auto f = feature_index(name);
    if (!f) throw DataError("unknown feature '" + name + "' in tree");
    node.feature = static_cast<int>(*f);
    for (const auto& c : j.at("children")) node.children.push_back(node_from_json(c, words, nodes));
  }
  nodes[static_cast<std::size_t>(id)] = std::move(node);
  return id;
}

}  // namespace

nlohmann::json to_json(const FuzzyTree& t) {
  nlohmann::json features = nlohmann::json::array();
  for (auto f : t.selected_features()) features.push_back(feature_name(f));
  nlohmann::json partitions = nlohmann::json::array();
  for (const auto& [f, p] : t.partitions()) partitions.push_back(to_json(p));
  return {{"features", features},
          {"partitions", partitions},
          {"words", t.words()},
          {"constant", t.is_constant()},
          {"default", t.default_word()},
          {"tree", t.is_constant() ? nlohmann::json(nullptr) : node_to_json(t, 0)}};
}

FuzzyTree fuzzy_tree_from_json(int class_id, const nlohmann::json& j) {
  try {
    auto words = j.at("words").get<std::vector<std::string>>();
    auto default_word = j.at("default").get<std::string>();
    if (j.at("constant").get<bool>()) return FuzzyTree::constant(class_id, std::move(words), std::move(default_word));
    std::map<std::size_t, FuzzyPartition> partitions;
    for (const auto& p : j.at("partitions")) {
      auto part = partition_from_json(p);
      partitions.emplace(part.feature(), std::move(part));
    }
    std::vector<TreeNode> nodes;
    node_from_json(j.at("tree"), words, nodes);
    FuzzyTree t(class_id, std::move(words), std::move(partitions), std::move(nodes));
    t.set_default_word(std::move(default_word));
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed tree JSON: ") + e.what());
  } catch (const DataError&) {
    throw;
  } catch (const Error& e) {
    throw DataError(std::string("inconsistent tree JSON: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Induction

namespace {

struct Weighted {
  std::size_t example;
  double weight;
};

double entropy(const std::vector<double>& counts, double total) {
  if (total <= 0.0) return 0.0;
  double h = 0.0;
  for (double c : counts) {
    if (c <= 0.0) continue;
    const double p = c / total;
    h -= p * std::log2(p);
  }
  return h;
}

class TreeBuilder {
 public:
  TreeBuilder(const std::vector<LabeledExample>& examples, std::size_t n_labels,
              const std::map<std::size_t, FuzzyPartition>& partitions, const TreeParams& params)
      : examples_(examples), n_labels_(n_labels), partitions_(partitions), params_(params) {}

  std::vector<TreeNode> build() {
    std::vector<Weighted> all;
    all.reserve(examples_.size());
    for (std::size_t i = 0; i < examples_.size(); ++i) all.push_back({i, 1.0});
    std::set<std::size_t> used;
    grow(all, used, 0, {});
    return std::move(nodes_);
  }

 private:
  std::vector<double> label_weights(const std::vector<Weighted>& subset) const {
    std::vector<double> counts(n_labels_, 0.0);
    for (const auto& w : subset) counts[examples_[w.example].label] += w.weight;
    return counts;
  }

  int grow(const std::vector<Weighted>& subset, std::set<std::size_t>& used, int depth,
           const std::vector<double>& parent_degrees) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    const auto counts = label_weights(subset);
    const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
    TreeNode node;
    node.weight = total;
    if (total > 1e-12) {
      for (double c : counts) node.degrees.push_back(c / total);
    } else {
      node.degrees = parent_degrees.empty() ? std::vector<double>(n_labels_, 1.0 / n_labels_) : parent_degrees;
    }
    const double top = *std::max_element(node.degrees.begin(), node.degrees.end());
    const bool stop = depth >= params_.max_depth || total < params_.min_weight || top >= params_.purity;

    int best_feature = -1;
    if (!stop) {
      const double h = entropy(counts, total);
      double best_gain = 1e-9;
      for (const auto& [f, part] : partitions_) {
        if (part.size() < 2 || used.count(f)) continue;
        std::vector<std::vector<double>> child(part.size(), std::vector<double>(n_labels_, 0.0));
        std::vector<double> child_total(part.size(), 0.0);
        for (const auto& w : subset) {
          const auto& ex = examples_[w.example];
          for (const auto& [term, m] : part.active_terms(ex.features[f])) {
            child[term][ex.label] += w.weight * m;
            child_total[term] += w.weight * m;
          }
        }
        double remainder = 0.0;
        for (std::size_t t = 0; t < part.size(); ++t) remainder += child_total[t] / total * entropy(child[t], child_total[t]);
        const double gain = h - remainder;
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = static_cast<int>(f);
        }
      }
    }

    if (best_feature >= 0) {
      const auto f = static_cast<std::size_t>(best_feature);
      const auto& part = partitions_.at(f);
      std::vector<std::vector<Weighted>> split(part.size());
      for (const auto& w : subset) {
        for (const auto& [term, m] : part.active_terms(examples_[w.example].features[f])) {
          if (w.weight * m > 1e-12) split[term].push_back({w.example, w.weight * m});
        }
      }
      node.feature = best_feature;
      used.insert(f);
      for (auto& s : split) node.children.push_back(grow(s, used, depth + 1, node.degrees));
      used.erase(f);
    }
    nodes_[static_cast<std::size_t>(id)] = std::move(node);
    return id;
  }

  const std::vector<LabeledExample>& examples_;
  std::size_t n_labels_;
  const std::map<std::size_t, FuzzyPartition>& partitions_;
  const TreeParams& params_;
  std::vector<TreeNode> nodes_;
};

std::map<std::size_t, FuzzyPartition> used_partitions(const std::vector<TreeNode>& nodes,
                                                      const std::map<std::size_t, FuzzyPartition>& all) {
  std::map<std::size_t, FuzzyPartition> out;
  for (const auto& n : nodes)
    if (!n.is_leaf()) out.emplace(static_cast<std::size_t>(n.feature), all.at(static_cast<std::size_t>(n.feature)));
  return out;
}

std::size_t argmax(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

FuzzyTree learn_tree(const std::vector<LabeledExample>& examples, const std::vector<std::string>& words,
                     const std::map<std::size_t, FuzzyPartition>& partitions, const TreeParams& params,
                     int class_id) {
  if (examples.empty()) throw Error("cannot learn a tree from an empty training set");
  if (words.empty()) throw Error("cannot learn a tree without words");
  for (const auto& ex : examples)
    if (ex.label >= words.size()) throw Error("example label outside the word list");
  TreeBuilder builder(examples, words.size(), partitions, params);
  auto nodes = builder.build();
  auto used = used_partitions(nodes, partitions);
  return FuzzyTree(class_id, words, std::move(used), std::move(nodes));
}

double classification_error(const FuzzyTree& tree, const std::vector<LabeledExample>& examples) {
  if (examples.empty()) return 0.0;
  std::size_t wrong = 0;
  for (const auto& ex : examples)
    if (argmax(tree.degrees(ex.features)) != ex.label) ++wrong;
  return static_cast<double>(wrong) / static_cast<double>(examples.size());
}

// ---------------------------------------------------------------------------
// Pruning

namespace {

/// Node reach weights of one example over the full tree (internal nodes too).
std::vector<std::pair<int, double>> reach_weights(const std::vector<TreeNode>& nodes,
                                                  const std::map<std::size_t, FuzzyPartition>& partitions,
                                                  const FeatureVector& x) {
  std::vector<std::pair<int, double>> out;
  std::vector<std::pair<int, double>> stack{{0, 1.0}};
  while (!stack.empty()) {
    const auto [id, w] = stack.back();
    stack.pop_back();
    out.emplace_back(id, w);
    const auto& node = nodes[static_cast<std::size_t>(id)];
    if (node.is_leaf()) continue;
    const auto& part = partitions.at(static_cast<std::size_t>(node.feature));
    for (const auto& [term, m] : part.active_terms(x[static_cast<std::size_t>(node.feature)]))
      stack.emplace_back(node.children[term], w * m);
  }
  return out;
}

/// A pruning candidate: the set of collapsed internal nodes.
using Collapse = std::vector<bool>;

std::vector<int> parents_of(const std::vector<TreeNode>& nodes) {
  std::vector<int> parent(nodes.size(), -1);
  for (std::size_t i = 0; i < nodes.size(); ++i)
    for (int c : nodes[i].children) parent[static_cast<std::size_t>(c)] = static_cast<int>(i);
  return parent;
}

/// Nodes acting as leaves under a collapse: reachable without crossing a
/// collapsed ancestor and either leaves or collapsed themselves.
std::vector<bool> frontier(const std::vector<TreeNode>& nodes, const Collapse& collapsed) {
  std::vector<bool> out(nodes.size(), false);
  std::vector<int> stack{0};
  while (!stack.empty()) {
    const int id = stack.back();
    stack.pop_back();
    const auto i = static_cast<std::size_t>(id);
    if (nodes[i].is_leaf() || collapsed[i]) {
      out[i] = true;
      continue;
    }
    for (int c : nodes[i].children) stack.push_back(c);
  }
  return out;
}

double node_error(const TreeNode& n) {
  return n.weight * (1.0 - *std::max_element(n.degrees.begin(), n.degrees.end()));
}

/// Weakest-link collapse sequence, from the full tree down to the root alone,
/// with the complexity cost at which each step becomes the better tree.
std::vector<Collapse> collapse_sequence(const std::vector<TreeNode>& nodes, std::vector<double>& alphas) {
  std::vector<Collapse> seq{Collapse(nodes.size(), false)};
  alphas.assign(1, 0.0);
  const auto parent = parents_of(nodes);
  while (true) {
    const Collapse& current = seq.back();
    const auto front = frontier(nodes, current);
    // Per live internal node: frontier error and frontier leaf count of its subtree.
    std::vector<double> sub_error(nodes.size(), 0.0);
    std::vector<int> sub_leaves(nodes.size(), 0);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (!front[i]) continue;
      const double e = node_error(nodes[i]);
      for (int a = static_cast<int>(i); a >= 0; a = parent[static_cast<std::size_t>(a)]) {
        sub_error[static_cast<std::size_t>(a)] += e;
        sub_leaves[static_cast<std::size_t>(a)] += 1;
      }
    }
    int best = -1;
    double best_alpha = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (front[i] || sub_leaves[i] < 2) continue;
      const double alpha = (node_error(nodes[i]) - sub_error[i]) / (sub_leaves[i] - 1);
      if (best < 0 || alpha < best_alpha - 1e-12) {
        best = static_cast<int>(i);
        best_alpha = alpha;
      }
    }
    if (best < 0) break;
    Collapse next = current;
    next[static_cast<std::size_t>(best)] = true;
    seq.push_back(std::move(next));
    alphas.push_back(std::max(alphas.back(), best_alpha));
  }
  return seq;
}

std::size_t live_node_count(const std::vector<TreeNode>& nodes, const Collapse& collapsed) {
  std::size_t count = 0;
  std::vector<int> stack{0};
  while (!stack.empty()) {
    const auto i = static_cast<std::size_t>(stack.back());
    stack.pop_back();
    ++count;
    if (nodes[i].is_leaf() || collapsed[i]) continue;
    for (int c : nodes[i].children) stack.push_back(c);
  }
  return count;
}

/// Copies the live part of the tree, turning collapsed nodes into leaves.
std::vector<TreeNode> apply_collapse(const std::vector<TreeNode>& nodes, const Collapse& collapsed) {
  std::vector<TreeNode> out;
  auto copy = [&](auto&& self, int id) -> int {
    const auto i = static_cast<std::size_t>(id);
    const int nid = static_cast<int>(out.size());
    out.push_back(nodes[i]);
    if (nodes[i].is_leaf() || collapsed[i]) {
      out[static_cast<std::size_t>(nid)].feature = -1;
      out[static_cast<std::size_t>(nid)].children.clear();
      return nid;
    }
    std::vector<int> kids;
    for (int c : nodes[i].children) kids.push_back(self(self, c));
    out[static_cast<std::size_t>(nid)].children = std::move(kids);
    return nid;
  };
  copy(copy, 0);
  return out;
}

}  // namespace

FuzzyTree prune_cv(const std::vector<LabeledExample>& examples, const std::vector<std::string>& words,
                   const std::map<std::size_t, FuzzyPartition>& partitions, int k_folds, const TreeParams& params,
                   std::uint64_t seed, int class_id, std::vector<std::string>* diagnostics) {
  FuzzyTree full = learn_tree(examples, words, partitions, params, class_id);
  const auto n = examples.size();
  // Repeated descriptions of one object share a feature vector; keeping them
  // in one fold stops validation from seeing its own training examples.
  std::map<std::array<double, kFeatureCount>, std::size_t> group_of;
  std::vector<std::size_t> group(n);
  for (std::size_t i = 0; i < n; ++i)
    group[i] = group_of.emplace(examples[i].features.values, group_of.size()).first->second;
  const std::size_t n_groups = group_of.size();

  int k = std::max(1, k_folds);
  if (static_cast<std::size_t>(k) > n_groups) {
    k = static_cast<int>(n_groups);
    if (diagnostics)
      diagnostics->push_back("class " + std::to_string(class_id) + ": only " + std::to_string(n_groups) +
                             " distinct examples, using " + std::to_string(k) + " folds");
  }
  const auto& nodes = full.nodes();
  if (k < 2 || nodes.size() == 1) return full;

  std::vector<double> alphas;
  const auto candidates = collapse_sequence(nodes, alphas);
  // Candidate c stands for complexity costs in [alphas[c], alphas[c + 1]);
  // folds are scored at the geometric mean of that interval.
  std::vector<double> beta(candidates.size());
  for (std::size_t c = 0; c < candidates.size(); ++c)
    beta[c] = c + 1 < candidates.size() ? std::sqrt(alphas[c] * alphas[c + 1]) : std::numeric_limits<double>::infinity();

  std::vector<std::size_t> order(n_groups);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> group_fold(n_groups);
  for (std::size_t i = 0; i < n_groups; ++i) group_fold[order[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
  std::vector<int> fold(n);
  for (std::size_t i = 0; i < n; ++i) fold[i] = group_fold[group[i]];

  // Each fold grows its own tree, so no split has seen the held-out labels.
  std::vector<std::vector<double>> fold_error(candidates.size(), std::vector<double>(static_cast<std::size_t>(k), 0.0));
  for (int f = 0; f < k; ++f) {
    std::vector<LabeledExample> train;
    std::vector<std::size_t> held;
    for (std::size_t i = 0; i < n; ++i) {
      if (fold[i] == f)
        held.push_back(i);
      else
        train.push_back(examples[i]);
    }
    if (held.empty() || train.empty()) continue;
    const FuzzyTree grown = learn_tree(train, words, partitions, params, class_id);
    const auto& fnodes = grown.nodes();
    std::vector<double> falphas;
    const auto fseq = collapse_sequence(fnodes, falphas);
    std::vector<std::vector<std::pair<int, double>>> reach(held.size());
    for (std::size_t h = 0; h < held.size(); ++h)
      reach[h] = reach_weights(fnodes, grown.partitions(), examples[held[h]].features);
    std::size_t last_m = fseq.size();
    std::vector<bool> front;
    double wrong_at_m = 0.0;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      std::size_t m = 0;
      while (m + 1 < fseq.size() && falphas[m + 1] <= beta[c]) ++m;
      if (m != last_m) {
        front = frontier(fnodes, fseq[m]);
        std::size_t wrong = 0;
        for (std::size_t h = 0; h < held.size(); ++h) {
          std::vector<double> pred(words.size(), 0.0);
          for (const auto& [id, w] : reach[h]) {
            if (!front[static_cast<std::size_t>(id)]) continue;
            const auto& d = fnodes[static_cast<std::size_t>(id)].degrees;
            for (std::size_t l = 0; l < pred.size(); ++l) pred[l] += w * d[l];
          }
          if (argmax(pred) != examples[held[h]].label) ++wrong;
        }
        wrong_at_m = static_cast<double>(wrong) / static_cast<double>(held.size());
        last_m = m;
      }
      fold_error[c][static_cast<std::size_t>(f)] = wrong_at_m;
    }
  }

  // Errors within one standard error of the best count as ties, resolved
  // toward fewer nodes, but never past the unpruned tree's error.
  std::vector<double> mean_error(candidates.size(), 0.0);
  for (std::size_t c = 0; c < candidates.size(); ++c)
    mean_error[c] = std::accumulate(fold_error[c].begin(), fold_error[c].end(), 0.0) / k;
  const auto min_it = std::min_element(mean_error.begin(), mean_error.end());
  const auto& be = fold_error[static_cast<std::size_t>(min_it - mean_error.begin())];
  double var = 0.0;
  for (double e : be) var += (e - *min_it) * (e - *min_it);
  const double se = k > 1 ? std::sqrt(var / (k - 1) / k) : 0.0;
  const double bound = std::min(*min_it + se, mean_error[0]) + 1e-12;
  if (diagnostics) {
    diagnostics->push_back("class " + std::to_string(class_id) + ": " + std::to_string(candidates.size()) +
                           " candidates, best mean error " + std::to_string(*min_it) + ", standard error " +
                           std::to_string(se));
    std::string line = "class " + std::to_string(class_id) + " candidates (nodes:error):";
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      char buf[48];
      std::snprintf(buf, sizeof buf, " %zu:%.4f", live_node_count(nodes, candidates[c]), mean_error[c]);
      line += buf;
    }
    diagnostics->push_back(line);
  }

  std::size_t best = 0;
  std::size_t best_size = live_node_count(nodes, candidates[0]);
  for (std::size_t c = 1; c < candidates.size(); ++c) {
    if (mean_error[c] > bound) continue;
    const std::size_t size = live_node_count(nodes, candidates[c]);
    if (size < best_size || (size == best_size && mean_error[c] < mean_error[best])) {
      best = c;
      best_size = size;
    }
  }
  if (mean_error[best] > bound) best = static_cast<std::size_t>(min_it - mean_error.begin());
  auto pruned = apply_collapse(nodes, candidates[best]);
  auto used = used_partitions(pruned, full.partitions());
  return FuzzyTree(class_id, words, std::move(used), std::move(pruned));
}

}  // namespace shapetalk
