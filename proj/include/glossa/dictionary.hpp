#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "glossa/corpus.hpp"
#include "glossa/errors.hpp"
#include "glossa/tag.hpp"

namespace glossa {

enum class Provenance { gold, projected, propagated };

inline std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::gold: return "gold";
    case Provenance::projected: return "projected";
    case Provenance::propagated: return "propagated";
  }
  return "?";
}

inline Provenance parse_provenance(std::string_view s) {
  if (s == "gold") return Provenance::gold;
  if (s == "projected") return Provenance::projected;
  if (s == "propagated") return Provenance::propagated;
  throw ParseError("unknown provenance '" + std::string(s) + "'");
}

struct DictEntry {
  Tag tag;
  Provenance provenance = Provenance::gold;
  int votes = 0;
  friend bool operator==(const DictEntry&, const DictEntry&) = default;
};

/// Word type -> admissible tags, each with its provenance. Iteration is in
/// type order so files and derived models are deterministic.
class TagDictionary {
 public:
  /// Adds `tag` for `type`; an existing (type, tag) keeps its provenance and
  /// accumulates votes.
  void add(const std::string& type, const Tag& tag, Provenance prov, int votes = 0) {
    auto& list = entries_[type];
    for (auto& e : list)
      if (e.tag == tag) {
        e.votes += votes;
        return;
      }
    list.push_back({tag, prov, votes});
    std::sort(list.begin(), list.end(),
              [](const DictEntry& a, const DictEntry& b) { return a.tag < b.tag; });
  }

  bool contains(const std::string& type) const { return entries_.count(type) > 0; }

  bool allows(const std::string& type, const Tag& tag) const {
    auto it = entries_.find(type);
    if (it == entries_.end()) return false;
    return std::any_of(it->second.begin(), it->second.end(),
                       [&](const DictEntry& e) { return e.tag == tag; });
  }

  const std::vector<DictEntry>& entries(const std::string& type) const {
    static const std::vector<DictEntry> none;
    auto it = entries_.find(type);
    return it == entries_.end() ? none : it->second;
  }

  std::vector<Tag> tags(const std::string& type) const {
    std::vector<Tag> out;
    for (const auto& e : entries(type)) out.push_back(e.tag);
    return out;
  }

  void erase(const std::string& type) { entries_.erase(type); }

  /// Number of word types.
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  /// Number of (type, tag) pairs.
  std::size_t pair_count() const {
    std::size_t n = 0;
    for (const auto& [_, list] : entries_) n += list.size();
    return n;
  }

  const std::map<std::string, std::vector<DictEntry>>& all() const { return entries_; }

  std::vector<Tag> tagset() const {
    std::set<Tag> tags;
    for (const auto& [_, list] : entries_)
      for (const auto& e : list) tags.insert(e.tag);
    return {tags.begin(), tags.end()};
  }

  /// Union; for types present in both, tags are merged and existing
  /// provenance wins.
  void merge(const TagDictionary& other) {
    for (const auto& [type, list] : other.entries_)
      for (const auto& e : list) add(type, e.tag, e.provenance, e.votes);
  }

  /// TSV rows `type<TAB>tag<TAB>provenance<TAB>votes`.
  void write_tsv(std::ostream& out) const {
    for (const auto& [type, list] : entries_)
      for (const auto& e : list)
        out << type << '\t' << e.tag.str() << '\t' << to_string(e.provenance) << '\t' << e.votes
            << '\n';
  }

  void save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write " + path.string());
    write_tsv(out);
  }

  static TagDictionary read_tsv(std::istream& in, const std::string& origin = "<dict>") {
    TagDictionary d;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      std::vector<std::string> cols;
      std::stringstream ss(line);
      std::string col;
      while (std::getline(ss, col, '\t')) cols.push_back(col);
      if (cols.size() < 2 || cols.size() > 4)
        throw ParseError(origin + ":" + std::to_string(lineno) + ": expected 2-4 tab-separated columns");
      const Provenance prov = cols.size() >= 3 ? parse_provenance(cols[2]) : Provenance::projected;
      const int votes = cols.size() == 4 ? std::stoi(cols[3]) : 0;
      d.add(cols[0], parse_tag(cols[1]), prov, votes);
    }
    return d;
  }

  static TagDictionary load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open dictionary " + path.string());
    return read_tsv(in, path.string());
  }

  friend bool operator==(const TagDictionary&, const TagDictionary&) = default;

 private:
  std::map<std::string, std::vector<DictEntry>> entries_;
};

/// Gold dictionary read off tagged sentences.
inline TagDictionary gold_dictionary(const std::vector<Sentence>& sentences) {
  TagDictionary d;
  for (const auto& s : sentences) {
    if (!s.tags || s.excluded) continue;
    for (std::size_t i = 0; i < s.size(); ++i) d.add(s.tokens[i].norm, (*s.tags)[i], Provenance::gold, 1);
  }
  return d;
}

/// One single-token sentence per (type, tag) entry: the way type-level
/// supervision enters token-level taggers.
inline std::vector<Sentence> dictionary_sentences(const TagDictionary& dict) {
  std::vector<Sentence> out;
  for (const auto& [type, list] : dict.all())
    for (const auto& e : list) {
      Sentence s;
      Token t;
      t.surface = type;
      t.norm = type;
      s.tokens.push_back(std::move(t));
      s.tags = std::vector<Tag>{e.tag};
      out.push_back(std::move(s));
    }
  return out;
}

}  // namespace glossa
