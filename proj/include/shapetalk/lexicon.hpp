#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace shapetalk {

inline constexpr int kClassCount = 7;

/// A sentence shape: the word-class id of each slot, e.g. {1, 7, 3}.
using Pattern = std::vector<int>;

std::string pattern_to_string(const Pattern& p);

/// Name of the projection a class constrains ("Color", "Shape", ...).
std::string_view class_projection(int cls);

class Lexicon {
 public:
  struct Entry {
    int cls = 0;
    long frequency = 0;
  };

  Lexicon() = default;

  /// Members keep the given order among equal frequencies.
  static Lexicon from_classes(const std::map<int, std::vector<std::string>>& classes,
                              const std::map<std::string, long>& frequencies = {});

  std::optional<int> class_of(std::string_view word) const;
  long frequency(std::string_view word) const;
  bool contains(std::string_view word) const { return entries_.count(std::string(word)) != 0; }
  /// Members of a class, most frequent first. Empty for unknown classes.
  const std::vector<std::string>& words(int cls) const;
  const std::map<std::string, Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  /// Same classes, frequencies replaced by counts (missing words count 0).
  Lexicon with_frequencies(const std::map<std::string, long>& counts) const;

 private:
  std::map<std::string, Entry> entries_;
  std::array<std::vector<std::string>, kClassCount> classes_;
};

/// The 30-word, 7-class vocabulary of the shape game.
const Lexicon& default_lexicon();
std::map<std::string, int> default_class_seed();

nlohmann::json to_json(const Lexicon& lexicon);
Lexicon lexicon_from_json(const nlohmann::json& j);

/// Lowercases and splits on anything that is not a letter or digit.
std::vector<std::string> tokenize(std::string_view text);

/// Throws UnknownClassError for a retained word absent from `class_seed`.
Lexicon build_lexicon(const std::vector<std::vector<std::string>>& corpus,
                      const std::map<std::string, int>& class_seed, long min_freq = 10);

/// True when a single insertion, deletion or substitution turns a into b.
bool one_edit_apart(std::string_view a, std::string_view b);

enum class TokenStatus { kept, corrected, discarded };
std::string_view to_string(TokenStatus s);

struct TaggedToken {
  std::string original;
  std::string word;  ///< lexicon word, empty when discarded
  int cls = 0;
  TokenStatus status = TokenStatus::kept;
};

struct TagResult {
  Pattern pattern;
  std::vector<std::string> words;  ///< parsed words, aligned with pattern
  std::vector<TaggedToken> tokens;
};

/// Maps tokens to classes, repairing unique one-edit misspellings. Throws
/// ParseError if nothing survives.
TagResult tag(const std::vector<std::string>& tokens, const Lexicon& lexicon);

struct PatternEntry {
  Pattern pattern;
  double frequency = 0.0;
  long count = 0;
};

/// Patterns ordered by frequency, then length, then lexicographically.
class PatternTable {
 public:
  PatternTable() = default;
  /// Throws DataError on duplicate patterns or frequencies outside (0, 1].
  static PatternTable from_entries(std::vector<PatternEntry> entries);

  const std::vector<PatternEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  bool contains(const Pattern& p) const;
  std::optional<double> frequency(const Pattern& p) const;

 private:
  std::vector<PatternEntry> entries_;
};

bool pattern_order(const PatternEntry& a, const PatternEntry& b);

PatternTable mine_patterns(const std::vector<Pattern>& corpus, long min_support = 2);

/// The twenty most frequent patterns observed in the original game corpus.
const PatternTable& reference_pattern_table();

nlohmann::json to_json(const PatternTable& table);
PatternTable pattern_table_from_json(const nlohmann::json& j);

/// "X is R": the described object's projection for `cls` is constrained by `word`.
struct GeneralizedConstraint {
  int cls = 0;
  std::string word;

  std::string to_string() const;
  bool operator==(const GeneralizedConstraint&) const = default;
};

struct Description {
  std::string raw;
  std::vector<std::string> tokens;
  Pattern pattern;
  std::vector<GeneralizedConstraint> constraints;
  std::vector<TaggedToken> token_log;
  bool known_pattern = false;
};

/// Throws ParseError when no token can be classed.
Description parse(std::string_view text, const Lexicon& lexicon, const PatternTable* table = nullptr);

/// Per-token corrections and discards, for clients.
nlohmann::json diagnostics(const Description& d);

}  // namespace shapetalk
