#include "shapetalk/lexicon.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "shapetalk/error.hpp"

namespace shapetalk {

namespace {

const std::vector<std::string> kNoWords;

void check_class(int cls) {
  if (cls < 1 || cls > kClassCount) throw DataError("word class " + std::to_string(cls) + " outside 1-7");
}

}  // namespace

std::string pattern_to_string(const Pattern& p) {
  std::string out;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i) out += ' ';
    out += std::to_string(p[i]);
  }
  return out;
}

std::string_view class_projection(int cls) {
  static constexpr std::array<std::string_view, kClassCount> names{"Determiner", "Depth",    "Shape", "Relation",
                                                                   "Tone",       "Position", "Color"};
  if (cls < 1 || cls > kClassCount) return "Unknown";
  return names[static_cast<std::size_t>(cls - 1)];
}

Lexicon Lexicon::from_classes(const std::map<int, std::vector<std::string>>& classes,
                              const std::map<std::string, long>& frequencies) {
  Lexicon lex;
  for (const auto& [cls, members] : classes) {
    check_class(cls);
    for (const auto& w : members) {
      const auto f = frequencies.find(w);
      if (!lex.entries_.emplace(w, Entry{cls, f == frequencies.end() ? 0 : f->second}).second)
        throw DataError("word '" + w + "' listed in two classes");
      lex.classes_[static_cast<std::size_t>(cls - 1)].push_back(w);
    }
  }
  for (auto& members : lex.classes_) {
    std::stable_sort(members.begin(), members.end(), [&](const std::string& a, const std::string& b) {
      return lex.entries_.at(a).frequency > lex.entries_.at(b).frequency;
    });
  }
  return lex;
}

std::optional<int> Lexicon::class_of(std::string_view word) const {
  const auto it = entries_.find(std::string(word));
  if (it == entries_.end()) return std::nullopt;
  return it->second.cls;
}

long Lexicon::frequency(std::string_view word) const {
  const auto it = entries_.find(std::string(word));
  return it == entries_.end() ? 0 : it->second.frequency;
}

const std::vector<std::string>& Lexicon::words(int cls) const {
  if (cls < 1 || cls > kClassCount) return kNoWords;
  return classes_[static_cast<std::size_t>(cls - 1)];
}

Lexicon Lexicon::with_frequencies(const std::map<std::string, long>& counts) const {
  std::map<int, std::vector<std::string>> classes;
  for (int c = 1; c <= kClassCount; ++c) {
    if (!words(c).empty()) classes[c] = words(c);
  }
  std::map<std::string, long> freq;
  for (const auto& [w, e] : entries_) {
    const auto it = counts.find(w);
    freq[w] = it == counts.end() ? 0 : it->second;
  }
  return from_classes(classes, freq);
}

const Lexicon& default_lexicon() {
  static const Lexicon lex = Lexicon::from_classes({
      {1, {"the", "a"}},
      {2, {"background", "front"}},
      {3, {"circle", "oval", "triangle", "rectangle", "ellipse", "square"}},
      {4, {"on", "in", "at", "behind"}},
      {5, {"light", "big", "dark"}},
      {6, {"top", "bottom", "right", "left"}},
      {7, {"pink", "blue", "green", "orange", "red", "yellow", "purple", "violet", "brown"}},
  });
  return lex;
}

std::map<std::string, int> default_class_seed() {
  std::map<std::string, int> seed;
  for (const auto& [w, e] : default_lexicon().entries()) seed[w] = e.cls;
  return seed;
}

nlohmann::json to_json(const Lexicon& lexicon) {
  nlohmann::json classes = nlohmann::json::object();
  nlohmann::json freq = nlohmann::json::object();
  for (int c = 1; c <= kClassCount; ++c) {
    if (!lexicon.words(c).empty()) classes[std::to_string(c)] = lexicon.words(c);
  }
  for (const auto& [w, e] : lexicon.entries()) freq[w] = e.frequency;
  return {{"classes", classes}, {"frequencies", freq}};
}

Lexicon lexicon_from_json(const nlohmann::json& j) {
  try {
    std::map<int, std::vector<std::string>> classes;
    for (const auto& [key, members] : j.at("classes").items()) {
      classes[std::stoi(key)] = members.get<std::vector<std::string>>();
    }
    std::map<std::string, long> freq;
    if (j.contains("frequencies")) freq = j.at("frequencies").get<std::map<std::string, long>>();
    return Lexicon::from_classes(classes, freq);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed lexicon JSON: ") + e.what());
  } catch (const std::invalid_argument&) {
    throw DataError("lexicon class keys must be integers");
  }
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      current += static_cast<char>(std::tolower(c));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

Lexicon build_lexicon(const std::vector<std::vector<std::string>>& corpus,
                      const std::map<std::string, int>& class_seed, long min_freq) {
  std::map<std::string, long> counts;
  for (const auto& tokens : corpus)
    for (const auto& t : tokens) ++counts[t];
  std::map<int, std::vector<std::string>> classes;
  std::map<std::string, long> kept;
  for (const auto& [word, n] : counts) {
    if (n < min_freq) continue;
    const auto it = class_seed.find(word);
    if (it == class_seed.end()) throw UnknownClassError(word);
    check_class(it->second);
    classes[it->second].push_back(word);
    kept[word] = n;
  }
  return Lexicon::from_classes(classes, kept);
}

bool one_edit_apart(std::string_view a, std::string_view b) {
  if (a.size() > b.size()) std::swap(a, b);
  if (b.size() - a.size() > 1) return false;
  std::size_t i = 0;
  while (i < a.size() && a[i] == b[i]) ++i;
  if (a.size() == b.size()) {
    return i < a.size() && a.substr(i + 1) == b.substr(i + 1);
  }
  return a.substr(i) == b.substr(i + 1);
}

std::string_view to_string(TokenStatus s) {
  switch (s) {
    case TokenStatus::kept: return "kept";
    case TokenStatus::corrected: return "corrected";
    case TokenStatus::discarded: return "discarded";
  }
  return "kept";
}

TagResult tag(const std::vector<std::string>& tokens, const Lexicon& lexicon) {
  if (lexicon.empty()) throw ParseError("cannot tag against an empty lexicon");
  TagResult result;
  for (const auto& t : tokens) {
    TaggedToken tt{t, {}, 0, TokenStatus::kept};
    if (const auto cls = lexicon.class_of(t)) {
      tt.word = t;
      tt.cls = *cls;
    } else {
      const std::string* match = nullptr;
      bool unique = true;
      for (const auto& [w, e] : lexicon.entries()) {
        if (!one_edit_apart(t, w)) continue;
        if (match) unique = false;
        match = &w;
      }
      if (match && unique) {
        tt.word = *match;
        tt.cls = *lexicon.class_of(*match);
        tt.status = TokenStatus::corrected;
      } else {
        tt.status = TokenStatus::discarded;
      }
    }
    if (tt.status != TokenStatus::discarded) {
      result.pattern.push_back(tt.cls);
      result.words.push_back(tt.word);
    }
    result.tokens.push_back(std::move(tt));
  }
  if (result.pattern.empty()) {
    std::vector<std::string> discarded;
    for (const auto& t : result.tokens) discarded.push_back(t.original);
    throw ParseError("no token of the description matches the lexicon", std::move(discarded));
  }
  return result;
}

bool pattern_order(const PatternEntry& a, const PatternEntry& b) {
  if (a.frequency != b.frequency) return a.frequency > b.frequency;
  if (a.pattern.size() != b.pattern.size()) return a.pattern.size() < b.pattern.size();
  return a.pattern < b.pattern;
}

PatternTable PatternTable::from_entries(std::vector<PatternEntry> entries) {
  std::set<Pattern> seen;
  for (const auto& e : entries) {
    if (e.pattern.empty()) throw DataError("empty pattern in table");
    for (int c : e.pattern) check_class(c);
    if (!(e.frequency > 0.0 && e.frequency <= 1.0))
      throw DataError("pattern " + pattern_to_string(e.pattern) + " has frequency outside (0, 1]");
    if (!seen.insert(e.pattern).second) throw DataError("duplicate pattern " + pattern_to_string(e.pattern));
  }
  std::sort(entries.begin(), entries.end(), pattern_order);
  PatternTable t;
  t.entries_ = std::move(entries);
  return t;
}

bool PatternTable::contains(const Pattern& p) const { return frequency(p).has_value(); }

std::optional<double> PatternTable::frequency(const Pattern& p) const {
  for (const auto& e : entries_)
    if (e.pattern == p) return e.frequency;
  return std::nullopt;
}

PatternTable mine_patterns(const std::vector<Pattern>& corpus, long min_support) {
  std::map<Pattern, long> counts;
  for (const auto& p : corpus)
    if (!p.empty()) ++counts[p];
  const double total = static_cast<double>(corpus.size());
  std::vector<PatternEntry> entries;
  for (const auto& [p, n] : counts) {
    if (n < min_support) continue;
    entries.push_back({p, static_cast<double>(n) / total, n});
  }
  return PatternTable::from_entries(std::move(entries));
}

const PatternTable& reference_pattern_table() {
  static const PatternTable table = PatternTable::from_entries({
      {{7, 3}, 0.1889, 0},
      {{1, 7, 3}, 0.0694, 0},
      {{1, 3}, 0.0639, 0},
      {{3}, 0.0583, 0},
      {{7, 3, 4, 1, 2}, 0.0389, 0},
      {{5, 7, 3}, 0.0333, 0},
      {{2, 7, 3}, 0.0306, 0},
      {{1, 7, 3, 4, 1, 6}, 0.0250, 0},
      {{7, 3, 4, 1, 6}, 0.0222, 0},
      {{7}, 0.0166, 0},
      {{6, 3}, 0.0111, 0},
      {{1, 7, 3, 1, 7, 3}, 0.0111, 0},
      {{1, 7}, 0.0083, 0},
      {{1, 5, 7, 3}, 0.0083, 0},
      {{2, 5, 7, 3}, 0.0083, 0},
      {{3, 4, 1, 2}, 0.0083, 0},
      {{3, 4, 1, 6}, 0.0083, 0},
      {{7, 3, 4, 1, 3}, 0.0083, 0},
      {{1, 3, 4, 1, 6, 6}, 0.0083, 0},
      {{5, 7, 3, 4, 1, 2}, 0.0083, 0},
  });
  return table;
}

nlohmann::json to_json(const PatternTable& table) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& e : table.entries()) out.push_back({{"pattern", e.pattern}, {"freq", e.frequency}});
  return out;
}

PatternTable pattern_table_from_json(const nlohmann::json& j) {
  try {
    std::vector<PatternEntry> entries;
    for (const auto& e : j) entries.push_back({e.at("pattern").get<Pattern>(), e.at("freq").get<double>(), 0});
    return PatternTable::from_entries(std::move(entries));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed pattern JSON: ") + e.what());
  }
}

std::string GeneralizedConstraint::to_string() const {
  std::string w = word;
  if (!w.empty()) w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
  return std::string(class_projection(cls)) + "(x) is " + w;
}

Description parse(std::string_view text, const Lexicon& lexicon, const PatternTable* table) {
  Description d;
  d.raw = std::string(text);
  d.tokens = tokenize(text);
  if (d.tokens.empty()) throw ParseError("description has no words");
  auto tagged = tag(d.tokens, lexicon);
  d.pattern = tagged.pattern;
  for (std::size_t i = 0; i < tagged.words.size(); ++i) d.constraints.push_back({tagged.pattern[i], tagged.words[i]});
  d.token_log = std::move(tagged.tokens);
  d.known_pattern = table && table->contains(d.pattern);
  return d;
}

nlohmann::json diagnostics(const Description& d) {
  nlohmann::json corrected = nlohmann::json::array();
  nlohmann::json discarded = nlohmann::json::array();
  for (const auto& t : d.token_log) {
    if (t.status == TokenStatus::corrected) corrected.push_back({{"from", t.original}, {"to", t.word}});
    if (t.status == TokenStatus::discarded) discarded.push_back(t.original);
  }
  return {{"pattern", d.pattern},
          {"known_pattern", d.known_pattern},
          {"corrected", corrected},
          {"discarded", discarded},
          {"constraints", [&] {
             nlohmann::json c = nlohmann::json::array();
             for (const auto& gc : d.constraints) c.push_back(gc.to_string());
             return c;
           }()}};
}

}  // namespace shapetalk
