#pragma once

// Text data model, corpus files, tagset mappings and corpus statistics.
//
// Narrative file format (".grk" for Griko, ".ita" for the Italian
// translation; both sides of a story share the file stem, which is the
// narrative id):
//
//   #title_griko: O kunto
//   #location: Calimera
//   o kunto_N ...            <- one sentence per line, optional token_TAG
//   #exclude: salentino      <- flags the next sentence line
//   ...
//
// Header lines before the first sentence are metadata. Blank lines are
// ignored. A sentence is tagged when every token carries a `_TAG` suffix.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "glossa/errors.hpp"
#include "glossa/tag.hpp"
#include "glossa/text.hpp"

namespace glossa {

struct Token {
  std::string surface;
  std::string norm;

  Token() = default;
  explicit Token(std::string surface_form, const NormalizeOptions& opts = {})
      : surface(std::move(surface_form)), norm(normalize(surface, opts)) {}

  friend bool operator==(const Token&, const Token&) = default;
};

struct Sentence {
  std::vector<Token> tokens;
  std::optional<std::vector<Tag>> tags;
  bool excluded = false;

  std::size_t size() const { return tokens.size(); }
  bool empty() const { return tokens.empty(); }
  bool tagged() const { return tags.has_value(); }

  std::vector<std::string> norms() const {
    std::vector<std::string> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) out.push_back(t.norm);
    return out;
  }

  static Sentence from_words(const std::vector<std::string>& words) {
    Sentence s;
    for (const auto& w : words) s.tokens.emplace_back(w);
    return s;
  }
  static Sentence from_words(const std::vector<std::string>& words, std::vector<Tag> tags) {
    Sentence s = from_words(words);
    if (tags.size() != words.size())
      throw LengthMismatch("sentence has " + std::to_string(words.size()) + " tokens but " +
                           std::to_string(tags.size()) + " tags");
    s.tags = std::move(tags);
    return s;
  }

  friend bool operator==(const Sentence&, const Sentence&) = default;
};

inline const std::vector<std::string>& metadata_keys() {
  static const std::vector<std::string> keys = {"source_url", "title_griko", "title_italian",
                                                "location",   "date",        "narrator"};
  return keys;
}

struct Narrative {
  std::string id;
  std::vector<Sentence> sentences;
  std::map<std::string, std::string> metadata;

  /// Tokens over non-excluded sentences.
  std::size_t token_length() const {
    std::size_t n = 0;
    for (const auto& s : sentences)
      if (!s.excluded) n += s.size();
    return n;
  }

  bool fully_tagged() const {
    return std::all_of(sentences.begin(), sentences.end(),
                       [](const Sentence& s) { return s.excluded || s.tagged(); });
  }

  friend bool operator==(const Narrative&, const Narrative&) = default;
};

struct ParallelNarrative {
  Narrative griko;
  Narrative italian;

  /// Italian tags live on the Italian sentences themselves.
  bool has_italian_tags() const {
    return std::all_of(italian.sentences.begin(), italian.sentences.end(),
                       [](const Sentence& s) { return s.tagged(); });
  }
};

struct Corpus {
  std::vector<Narrative> narratives;
  /// Either empty or aligned index-by-index with `narratives`.
  std::vector<Narrative> translations;

  bool parallel() const { return !translations.empty(); }

  std::vector<ParallelNarrative> parallel_narratives() const {
    std::vector<ParallelNarrative> out;
    for (std::size_t i = 0; i < translations.size() && i < narratives.size(); ++i)
      out.push_back({narratives[i], translations[i]});
    return out;
  }

  const Narrative* find(std::string_view id) const {
    for (const auto& n : narratives)
      if (n.id == id) return &n;
    return nullptr;
  }
};

// ---------------------------------------------------------------------------
// Sentence streams. Excluded sentences never enter any of them.

inline std::vector<Sentence> usable_sentences(const std::vector<Narrative>& narratives) {
  std::vector<Sentence> out;
  for (const auto& n : narratives)
    for (const auto& s : n.sentences)
      if (!s.excluded && !s.empty()) out.push_back(s);
  return out;
}

inline std::vector<Sentence> usable_sentences(const Narrative& narrative) {
  return usable_sentences(std::vector<Narrative>{narrative});
}

inline std::vector<Sentence> tagged_sentences(const std::vector<Narrative>& narratives) {
  std::vector<Sentence> out;
  for (auto& s : usable_sentences(narratives))
    if (s.tagged()) out.push_back(std::move(s));
  return out;
}

// ---------------------------------------------------------------------------
// Tagset mapping

/// Total map from a source tagset onto Tag. Unmapped lookups are errors.
class TagsetMapping {
 public:
  TagsetMapping() = default;
  explicit TagsetMapping(std::map<std::string, Tag> entries) : entries_(std::move(entries)) {}

  /// Two whitespace-separated columns `source_tag target_tag`; '#' comments.
  static TagsetMapping parse(std::istream& in, const std::string& origin = "<mapping>") {
    std::map<std::string, Tag> entries;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      std::istringstream fields(line);
      std::string source, target, extra;
      if (!(fields >> source)) continue;
      if (!(fields >> target) || (fields >> extra))
        throw ParseError(origin + ":" + std::to_string(lineno) +
                         ": expected two columns `source_tag target_tag`");
      entries.insert_or_assign(source, parse_tag(target));
    }
    return TagsetMapping(std::move(entries));
  }

  static TagsetMapping load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open mapping file " + path.string());
    return parse(in, path.string());
  }

  Tag map(std::string_view source_tag) const {
    auto it = entries_.find(std::string(source_tag));
    if (it == entries_.end())
      throw UnmappedTag("tag '" + std::string(source_tag) + "' has no mapping entry");
    return it->second;
  }

  bool contains(std::string_view source_tag) const {
    return entries_.count(std::string(source_tag)) > 0;
  }
  std::size_t size() const { return entries_.size(); }
  const std::map<std::string, Tag>& entries() const { return entries_; }

 private:
  std::map<std::string, Tag> entries_;
};

inline Tag map_tagset(std::string_view source_tag, const TagsetMapping& mapping) {
  return mapping.map(source_tag);
}

// ---------------------------------------------------------------------------
// Narrative files

struct ReadOptions {
  /// When set, `_TAG` suffixes are source tags translated through this map;
  /// otherwise they must be canonical tag strings.
  const TagsetMapping* mapping = nullptr;
  NormalizeOptions normalize;
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

inline std::vector<std::string> split_ws(std::string_view line) {
  std::vector<std::string> out;
  std::istringstream in{std::string(line)};
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

}  // namespace detail

inline Sentence parse_sentence_line(std::string_view line, const ReadOptions& opts = {},
                                    const std::string& where = "") {
  const auto words = detail::split_ws(line);
  Sentence s;
  std::vector<std::string> tag_strings;
  std::size_t n_with_suffix = 0;
  for (const auto& w : words) {
    const auto us = w.rfind('_');
    if (us != std::string::npos && us > 0 && us + 1 < w.size()) ++n_with_suffix;
  }
  const bool tagged = !words.empty() && n_with_suffix == words.size();
  std::vector<Tag> tags;
  for (const auto& w : words) {
    if (!tagged) {
      s.tokens.emplace_back(w, opts.normalize);
      continue;
    }
    const auto us = w.rfind('_');
    const std::string surface = w.substr(0, us);
    const std::string tag = w.substr(us + 1);
    s.tokens.emplace_back(surface, opts.normalize);
    try {
      tags.push_back(opts.mapping ? opts.mapping->map(tag) : parse_tag(tag));
    } catch (const Error& e) {
      if (dynamic_cast<const UnmappedTag*>(&e))
        throw UnmappedTag(where + e.what());
      throw ParseError(where + e.what());
    }
  }
  if (tagged) s.tags = std::move(tags);
  return s;
}

inline Narrative parse_narrative(std::istream& in, std::string id, const ReadOptions& opts = {},
                                 const std::string& origin = "<narrative>") {
  Narrative n;
  n.id = std::move(id);
  std::string line;
  int lineno = 0;
  bool exclude_next = false;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string trimmed = detail::trim(line);
    if (trimmed.empty()) continue;
    if (trimmed[0] == '#') {
      const auto colon = trimmed.find(':');
      if (colon == std::string::npos) continue;  // plain comment
      const std::string key = detail::trim(std::string_view(trimmed).substr(1, colon - 1));
      const std::string value = detail::trim(std::string_view(trimmed).substr(colon + 1));
      if (key == "exclude") {
        exclude_next = true;
      } else if (n.sentences.empty()) {
        n.metadata[key] = value;
      }
      continue;
    }
    Sentence s = parse_sentence_line(trimmed, opts, origin + ":" + std::to_string(lineno) + ": ");
    s.excluded = exclude_next;
    exclude_next = false;
    n.sentences.push_back(std::move(s));
  }
  return n;
}

inline Narrative read_narrative(const std::filesystem::path& path, const ReadOptions& opts = {}) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  return parse_narrative(in, path.stem().string(), opts, path.string());
}

inline std::string format_sentence(const Sentence& s) {
  std::string out;
  for (std::size_t i = 0; i < s.tokens.size(); ++i) {
    if (i) out += ' ';
    out += s.tokens[i].surface;
    if (s.tags) {
      out += '_';
      out += (*s.tags)[i].str();
    }
  }
  return out;
}

inline void write_narrative(std::ostream& out, const Narrative& n) {
  for (const auto& [k, v] : n.metadata) out << '#' << k << ": " << v << '\n';
  for (const auto& s : n.sentences) {
    if (s.excluded) out << "#exclude: salentino\n";
    out << format_sentence(s) << '\n';
  }
}

inline void write_narrative(const std::filesystem::path& path, const Narrative& n) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path.string());
  write_narrative(out, n);
}

struct CorpusReadOptions {
  ReadOptions griko;
  ReadOptions italian;
};

/// Loads every `<id>.grk` in `dir` (sorted by id) and its `<id>.ita`
/// translation when present. Either every narrative has a translation or
/// none does.
inline Corpus read_corpus(const std::filesystem::path& dir, const CorpusReadOptions& opts = {}) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw ParseError("not a corpus directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".grk") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  Corpus c;
  std::size_t with_translation = 0;
  for (const auto& f : files) {
    c.narratives.push_back(read_narrative(f, opts.griko));
    auto ita = f;
    ita.replace_extension(".ita");
    if (fs::exists(ita)) ++with_translation;
  }
  if (with_translation > 0) {
    if (with_translation != files.size())
      throw ParseError(dir.string() + ": only " + std::to_string(with_translation) + " of " +
                       std::to_string(files.size()) + " narratives have a .ita translation");
    for (const auto& f : files) {
      auto ita = f;
      ita.replace_extension(".ita");
      c.translations.push_back(read_narrative(ita, opts.italian));
      // Exclusion is a property of the sentence pair.
      auto& tr = c.translations.back();
      const auto& gr = c.narratives[c.translations.size() - 1];
      for (std::size_t i = 0; i < tr.sentences.size() && i < gr.sentences.size(); ++i)
        tr.sentences[i].excluded = tr.sentences[i].excluded || gr.sentences[i].excluded;
    }
  }
  return c;
}

inline void write_corpus(const std::filesystem::path& dir, const Corpus& c) {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < c.narratives.size(); ++i) {
    write_narrative(dir / (c.narratives[i].id + ".grk"), c.narratives[i]);
    if (c.parallel()) write_narrative(dir / (c.narratives[i].id + ".ita"), c.translations[i]);
  }
}

// ---------------------------------------------------------------------------
// Statistics and validation

struct SideStats {
  std::size_t types = 0;
  std::size_t tokens = 0;
  friend bool operator==(const SideStats&, const SideStats&) = default;
};

struct StatsReport {
  std::size_t stories = 0;
  std::size_t sentences = 0;           // non-excluded
  std::size_t excluded_sentences = 0;
  SideStats griko;
  SideStats italian;
  friend bool operator==(const StatsReport&, const StatsReport&) = default;
};

inline SideStats side_stats(const std::vector<Narrative>& narratives) {
  SideStats st;
  std::unordered_set<std::string> types;
  for (const auto& n : narratives)
    for (const auto& s : n.sentences) {
      if (s.excluded) continue;
      for (const auto& t : s.tokens) {
        types.insert(t.norm);
        ++st.tokens;
      }
    }
  st.types = types.size();
  return st;
}

inline StatsReport corpus_stats(const Corpus& c) {
  StatsReport r;
  r.stories = c.narratives.size();
  for (const auto& n : c.narratives)
    for (const auto& s : n.sentences) (s.excluded ? r.excluded_sentences : r.sentences) += 1;
  r.griko = side_stats(c.narratives);
  r.italian = side_stats(c.translations);
  return r;
}

/// Returns one message per violated invariant; empty means valid.
inline std::vector<std::string> validate_corpus(const Corpus& c) {
  std::vector<std::string> problems;
  std::set<std::string> ids;
  for (const auto& n : c.narratives) {
    if (!ids.insert(n.id).second) problems.push_back("duplicate narrative id '" + n.id + "'");
    for (std::size_t i = 0; i < n.sentences.size(); ++i) {
      const auto& s = n.sentences[i];
      const std::string where = n.id + ": sentence " + std::to_string(i + 1);
      if (s.tags && s.tags->size() != s.tokens.size()) problems.push_back(where + ": tag count mismatch");
      for (const auto& t : s.tokens) {
        if (t.norm.empty()) problems.push_back(where + ": empty token");
        else if (normalize(t.norm) != t.norm) problems.push_back(where + ": non-normal form '" + t.norm + "'");
      }
    }
  }
  if (c.parallel()) {
    if (c.translations.size() != c.narratives.size()) {
      problems.push_back("translation count differs from narrative count");
    } else {
      for (std::size_t i = 0; i < c.narratives.size(); ++i) {
        const auto& g = c.narratives[i];
        const auto& it = c.translations[i];
        if (g.sentences.size() != it.sentences.size())
          problems.push_back(g.id + ": " + std::to_string(g.sentences.size()) +
                             " Griko sentences vs " + std::to_string(it.sentences.size()) +
                             " Italian sentences");
        for (std::size_t k = 0; k < it.sentences.size(); ++k) {
          const auto& s = it.sentences[k];
          if (s.tags && s.tags->size() != s.tokens.size())
            problems.push_back(g.id + ".ita: sentence " + std::to_string(k + 1) +
                               ": tag count mismatch");
        }
      }
    }
  }
  return problems;
}

/// Every distinct tag in tagged, non-excluded sentences, in canonical order.
inline std::vector<Tag> collect_tagset(const std::vector<Sentence>& sentences) {
  std::set<Tag> tags;
  for (const auto& s : sentences)
    if (s.tags && !s.excluded)
      for (const auto& t : *s.tags) tags.insert(t);
  return {tags.begin(), tags.end()};
}

}  // namespace glossa
