#pragma once

// Seeded generator of a small diglot world: a tag grammar, Zipfian
// lexicons with suffix cues and some ambiguity, and a noisy word-by-word
// "Italian" translation whose tags come from the translation lexicon.
// Stands in for real data in benchmarks and end-to-end tests.

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "glossa/corpus.hpp"
#include "glossa/dictionary.hpp"
#include "glossa/random.hpp"
#include "glossa/tag.hpp"

namespace glossa {

struct DiglotConfig {
  std::uint64_t seed = 1;
  int base_narratives = 2;  // annotated seed corpus
  int base_sentences = 25;  // per base narrative
  int parallel_narratives = 40;
  int parallel_sentences = 20;  // mean per parallel narrative
  int test_narratives = 10;
  int test_min_sentences = 20;
  int test_max_sentences = 90;
  int min_length = 3;  // words per sentence before the final punctuation
  int max_length = 14;

  int nouns = 2500;
  int verbs = 1800;
  int adjectives = 700;
  int adverbs = 250;
  double zipf = 1.0;
  double ambiguity = 0.2;  // share of open-class words with a second tag
  double excluded_rate = 0.02;
  /// Narratives fuse some word pairs into composite tokens; the base corpus
  /// is segmented.
  double fuse_rate = 0.8;

  double drop = 0.06;  // Italian side noise, per token
  double insert = 0.06;
  double swap = 0.08;
  double tag_noise = 0.03;
};

struct DiglotCorpus {
  std::vector<Narrative> base;  // tagged, no translation
  std::vector<ParallelNarrative> parallel;  // Griko untagged, Italian tagged
  std::vector<ParallelNarrative> test;  // both sides tagged
  std::vector<Narrative> parallel_gold;  // hidden tags of the parallel Griko side
  TagDictionary lexicon;  // true admissible tags of every Griko word

  std::vector<Narrative> test_griko() const {
    std::vector<Narrative> out;
    for (const auto& p : test) out.push_back(p.griko);
    return out;
  }
};

namespace detail {

struct LexEntry {
  std::string word;
  Tag tag;
  std::vector<std::string> italian;  // one or two tokens
  std::vector<Tag> italian_tags;
};

class DiglotWorld {
 public:
  explicit DiglotWorld(const DiglotConfig& cfg) : cfg_(cfg), rng_(cfg.seed) {
    build_tags();
    build_lexicon();
  }

  /// One sentence; `fuse` merges some adjacent pairs (noun or verb plus
  /// pronoun, adverb plus adverb or preposition) into one composite token.
  Sentence sentence(bool fuse, std::vector<Sentence>* italian) {
    const int len = cfg_.min_length + static_cast<int>(rng_.below(static_cast<std::uint64_t>(cfg_.max_length - cfg_.min_length + 1)));
    std::vector<LexEntry> pieces;
    std::size_t state = tags_.size();  // start
    for (int i = 0; i < len; ++i) {
      state = rng_.categorical(trans_[state]);
      pieces.push_back(draw(state));
    }
    pieces.push_back(draw(punct_));
    if (fuse) pieces = fused(std::move(pieces));
    std::vector<std::string> words;
    std::vector<Tag> tags;
    for (const auto& e : pieces) {
      words.push_back(e.word);
      tags.push_back(e.tag);
    }
    auto s = Sentence::from_words(words, tags);
    if (rng_.bernoulli(cfg_.excluded_rate)) s.excluded = true;
    if (italian) italian->push_back(translate(pieces, s.excluded));
    return s;
  }

  const std::vector<LexEntry>& lexicon() const { return lex_; }
  const std::set<std::pair<std::string, Tag>>& fused_forms() const { return fused_; }
  Rng& rng() { return rng_; }

 private:
  void build_tags() {
    using A = AtomicTag;
    tags_ = {Tag(A::N), Tag(A::V),  Tag(A::Adj), Tag(A::Adv),  Tag(A::Pr), Tag(A::D),
             Tag(A::P), Tag(A::C),  Tag(A::Prt), Tag(A::Num),  Tag{A::P, A::D}, Tag(A::PUNCT)};
    punct_ = tags_.size() - 1;
    enum { N, V, Adj, Adv, Pr, D, P, C, Prt, Num, PD, PU };
    const std::size_t K = tags_.size();
    trans_.assign(K + 1, std::vector<double>(K, 0.0));
    auto set = [&](std::size_t from, std::initializer_list<std::pair<int, double>> to) {
      for (auto [k, p] : to) trans_[from][static_cast<std::size_t>(k)] = p;
    };
    set(N, {{V, .28}, {Adj, .14}, {P, .1}, {PD, .08}, {C, .12}, {PU, .08}, {D, .06}, {Prt, .04}, {Pr, .1}});
    set(V, {{D, .26}, {P, .1}, {PD, .1}, {Adv, .14}, {N, .1}, {Pr, .1}, {PU, .1}, {Prt, .04}, {Adj, .06}});
    set(Adj, {{N, .3}, {PU, .15}, {C, .15}, {V, .25}, {P, .1}, {Adv, .05}});
    set(Adv, {{V, .4}, {Adj, .15}, {PU, .1}, {D, .2}, {Adv, .08}, {P, .07}});
    set(Pr, {{V, .7}, {N, .05}, {Prt, .15}, {Pr, .1}});
    set(D, {{N, .72}, {Adj, .2}, {Num, .08}});
    set(P, {{D, .35}, {N, .35}, {Pr, .2}, {Num, .1}});
    set(C, {{D, .3}, {V, .3}, {Pr, .2}, {Adv, .15}, {Prt, .05}});
    set(Prt, {{V, .85}, {Pr, .15}});
    set(Num, {{N, .9}, {Adj, .1}});
    set(PD, {{N, .8}, {Adj, .2}});
    set(PU, {{C, .3}, {D, .25}, {V, .2}, {Pr, .15}, {Adv, .1}});
    set(K, {{D, .25}, {Pr, .18}, {N, .1}, {V, .15}, {Adv, .1}, {C, .12}, {P, .05}, {PD, .05}});
  }

  std::string syllables(int n, const std::vector<std::string>& onsets, const std::vector<std::string>& vowels) {
    std::string w;
    for (int i = 0; i < n; ++i) {
      w += onsets[rng_.below(onsets.size())];
      w += vowels[rng_.below(vowels.size())];
    }
    return w;
  }

  /// A fresh word of `n` syllables plus a suffix drawn from `suffixes`.
  std::string fresh(std::set<std::string>& used, int n, const std::vector<std::string>& suffixes,
                    const std::vector<std::string>& onsets, const std::vector<std::string>& vowels) {
    for (int attempt = 0;; ++attempt) {
      const int syl = n + attempt / 50;
      std::string w = syllables(syl, onsets, vowels) + (suffixes.empty() ? "" : suffixes[rng_.below(suffixes.size())]);
      if (used.insert(w).second) return w;
    }
  }

  void build_lexicon() {
    const std::vector<std::string> g_on = {"p", "t", "k", "m", "n", "s", "l", "r", "v", "g", "ts", "c", "ch", "d", "f", "z"};
    const std::vector<std::string> g_vo = {"a", "e", "i", "o", "u"};
    const std::vector<std::string> i_on = {"b", "c", "d", "f", "g", "l", "m", "n", "p", "r", "s", "t", "v", "gi", "sc", "tr"};
    const std::vector<std::string> i_vo = {"a", "e", "i", "o", "u", "ia", "ie"};
    // Suffix sets overlap on purpose so that word endings are cues, not rules.
    const std::map<std::size_t, std::vector<std::string>> g_suffix = {
        {0, {"a", "o", "i", "ra", "ma", "si", "ni", "ta"}},
        {1, {"ei", "i", "o", "usi", "ame", "ete", "ise", "si", "ta"}},
        {2, {"o", "i", "a", "ko", "ni", "ero", "ta"}},
        {3, {"a", "ti", "ma", "os", "i", "ro"}}};
    const std::map<std::size_t, std::vector<std::string>> i_suffix = {
        {0, {"o", "a", "e", "zione", "ore"}}, {1, {"are", "ava", "ito", "ono", "eva"}},
        {2, {"oso", "ale", "ivo", "ino"}},    {3, {"mente", "ora", "ai"}}};
    const std::array<int, 4> sizes = {cfg_.nouns, cfg_.verbs, cfg_.adjectives, cfg_.adverbs};
    const std::map<std::size_t, int> closed = {{4, 12}, {5, 6}, {6, 8}, {7, 5}, {8, 4}, {9, 12}, {10, 6}};

    std::set<std::string> g_used, i_used;
    by_tag_.assign(tags_.size(), {});
    auto add = [&](std::size_t k, std::string word, std::vector<std::string> ita, std::vector<Tag> ita_tags) {
      by_tag_[k].push_back(lex_.size());
      lex_.push_back({std::move(word), tags_[k], std::move(ita), std::move(ita_tags)});
    };
    for (std::size_t k = 0; k < 4; ++k)
      for (int i = 0; i < sizes[k]; ++i) {
        const int syl = 1 + static_cast<int>(rng_.below(3));
        auto g = fresh(g_used, syl, g_suffix.at(k), g_on, g_vo);
        auto it = fresh(i_used, syl, i_suffix.at(k), i_on, i_vo);
        add(k, std::move(g), {std::move(it)}, {tags_[k]});
      }
    // Closed classes: short words, no suffix cue.
    for (auto [k, n] : closed) {
      for (int i = 0; i < n; ++i) {
        auto g = fresh(g_used, 1, {}, g_on, g_vo);
        if (k == 10) {
          // Fused preposition + article: two Italian tokens.
          const auto& p = lex_[by_tag_[6][rng_.below(by_tag_[6].size())]];
          const auto& d = lex_[by_tag_[5][rng_.below(by_tag_[5].size())]];
          add(k, std::move(g), {p.italian[0], d.italian[0]}, {tags_[6], tags_[5]});
          continue;
        }
        auto it = fresh(i_used, 1, {}, i_on, i_vo);
        add(k, std::move(g), {std::move(it)}, {tags_[k]});
      }
    }
    for (const char* p : {",", ".", "?", ";"}) add(punct_, p, {p}, {tags_[punct_]});

    // Zipfian ranks: a random order per tag.
    auto rank_weights = [&](std::size_t n) {
      std::vector<double> w;
      for (std::size_t r = 0; r < n; ++r) w.push_back(1.0 / std::pow(static_cast<double>(r + 1), cfg_.zipf));
      return w;
    };
    for (auto& list : by_tag_) rng_.shuffle(list);
    // A second sense for an existing form, inserted at a Zipf-drawn rank so
    // that frequent words are the ambiguous ones.
    auto add_sense = [&](std::size_t from, std::size_t to, int syl, const std::vector<std::string>& ita_suffix) {
      const auto& src = lex_[by_tag_[from][rng_.categorical(rank_weights(by_tag_[from].size()))]];
      for (auto idx : by_tag_[to])
        if (lex_[idx].word == src.word) return;
      const auto pos = rng_.categorical(rank_weights(by_tag_[to].size() + 1));
      by_tag_[to].insert(by_tag_[to].begin() + static_cast<std::ptrdiff_t>(pos), lex_.size());
      lex_.push_back({src.word, tags_[to], {fresh(i_used, syl, ita_suffix, i_on, i_vo)}, {tags_[to]}});
    };
    const std::array<std::pair<std::size_t, std::size_t>, 4> pairs = {{{0, 2}, {2, 0}, {1, 0}, {3, 2}}};
    const int n_amb = static_cast<int>(cfg_.ambiguity * (cfg_.nouns + cfg_.verbs + cfg_.adjectives + cfg_.adverbs));
    for (int i = 0; i < n_amb; ++i) {
      const auto [from, to] = pairs[rng_.below(pairs.size())];
      add_sense(from, to, 2, i_suffix.at(to));
    }
    // Closed-class ambiguity: determiners that double as pronouns,
    // conjunctions and prepositions that double as adverbs.
    for (auto [from, to, n] : {std::tuple{5, 4, 3}, {7, 3, 2}, {6, 3, 2}, {8, 7, 1}})
      for (int i = 0; i < n; ++i) add_sense(static_cast<std::size_t>(from), static_cast<std::size_t>(to), 1, {});

    weights_.assign(tags_.size(), {});
    for (std::size_t k = 0; k < tags_.size(); ++k) weights_[k] = rank_weights(by_tag_[k].size());
    for (std::size_t k : {4, 5, 6, 7}) ita_fillers_.push_back(lex_[by_tag_[k][0]]);
  }

  std::vector<LexEntry> fused(std::vector<LexEntry> in) {
    using A = AtomicTag;
    static const std::set<std::pair<A, A>> patterns = {{A::N, A::Pr}, {A::V, A::Pr}, {A::Adv, A::Adv}, {A::Adv, A::P}, {A::P, A::D}, {A::C, A::Pr}};
    std::vector<LexEntry> out;
    for (std::size_t i = 0; i < in.size(); ++i) {
      const bool can = i + 2 < in.size() && in[i].tag.is_atomic() && in[i + 1].tag.is_atomic() &&
                       patterns.count({in[i].tag.parts()[0], in[i + 1].tag.parts()[0]});
      if (!can || !rng_.bernoulli(cfg_.fuse_rate)) {
        out.push_back(std::move(in[i]));
        continue;
      }
      auto& a = in[i];
      auto& b = in[i + 1];
      LexEntry f{a.word + b.word, Tag{a.tag.parts()[0], b.tag.parts()[0]}, a.italian, a.italian_tags};
      f.italian.insert(f.italian.end(), b.italian.begin(), b.italian.end());
      f.italian_tags.insert(f.italian_tags.end(), b.italian_tags.begin(), b.italian_tags.end());
      fused_.emplace(f.word, f.tag);
      out.push_back(std::move(f));
      ++i;
    }
    return out;
  }

  const LexEntry& draw(std::size_t k) { return lex_[by_tag_[k][rng_.categorical(weights_[k])]]; }

  Sentence translate(const std::vector<LexEntry>& entries, bool excluded) {
    std::vector<std::string> words;
    std::vector<Tag> tags;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const auto* e = &entries[i];
      const bool last = i + 1 == entries.size();
      if (!last && rng_.bernoulli(cfg_.drop)) continue;
      for (std::size_t j = 0; j < e->italian.size(); ++j) {
        words.push_back(e->italian[j]);
        Tag t = e->italian_tags[j];
        if (rng_.bernoulli(cfg_.tag_noise)) t = tags_[rng_.below(punct_)];
        tags.push_back(t);
      }
      if (!last && rng_.bernoulli(cfg_.insert)) {
        const auto& f = ita_fillers_[rng_.below(ita_fillers_.size())];
        words.push_back(f.italian[0]);
        tags.push_back(f.italian_tags[0]);
      }
    }
    for (std::size_t i = 0; i + 2 < words.size(); ++i)
      if (rng_.bernoulli(cfg_.swap)) {
        std::swap(words[i], words[i + 1]);
        std::swap(tags[i], tags[i + 1]);
        ++i;
      }
    auto s = Sentence::from_words(words, tags);
    s.excluded = excluded;
    return s;
  }

  DiglotConfig cfg_;
  Rng rng_;
  std::vector<Tag> tags_;
  std::size_t punct_ = 0;
  std::vector<std::vector<double>> trans_;  // row K is the start state
  std::vector<LexEntry> lex_;
  std::vector<std::vector<std::size_t>> by_tag_;
  std::vector<std::vector<double>> weights_;
  std::vector<LexEntry> ita_fillers_;
  std::set<std::pair<std::string, Tag>> fused_;
};

inline std::string padded(int i, int width) {
  std::string s = std::to_string(i);
  return std::string(static_cast<std::size_t>(std::max(0, width - static_cast<int>(s.size()))), '0') + s;
}

}  // namespace detail

inline DiglotCorpus generate_diglot(const DiglotConfig& cfg = {}) {
  if (cfg.min_length < 1 || cfg.max_length < cfg.min_length) throw InvalidConfig("bad sentence length range");
  if (cfg.test_min_sentences < 1 || cfg.test_max_sentences < cfg.test_min_sentences)
    throw InvalidConfig("bad test narrative size range");
  detail::DiglotWorld world(cfg);
  DiglotCorpus out;
  for (const auto& e : world.lexicon()) out.lexicon.add(e.word, e.tag, Provenance::gold);

  auto parallel = [&](const std::string& id, int sentences) {
    ParallelNarrative pn;
    pn.griko.id = pn.italian.id = id;
    for (int i = 0; i < sentences; ++i) pn.griko.sentences.push_back(world.sentence(true, &pn.italian.sentences));
    return pn;
  };

  for (int b = 0; b < cfg.base_narratives; ++b) {
    Narrative n;
    n.id = "base-" + detail::padded(b, 2);
    for (int i = 0; i < cfg.base_sentences; ++i) n.sentences.push_back(world.sentence(false, nullptr));
    out.base.push_back(std::move(n));
  }
  for (int p = 0; p < cfg.parallel_narratives; ++p) {
    const int n = std::max(1, cfg.parallel_sentences / 2 + static_cast<int>(world.rng().below(
                                                              static_cast<std::uint64_t>(cfg.parallel_sentences) + 1)));
    auto pn = parallel("narr-" + detail::padded(p, 3), n);
    out.parallel_gold.push_back(pn.griko);
    for (auto& s : pn.griko.sentences) s.tags.reset();
    out.parallel.push_back(std::move(pn));
  }
  // Test narratives get evenly spread sizes in shuffled id order, so the
  // length order differs from the id order.
  std::vector<int> sizes;
  for (int t = 0; t < cfg.test_narratives; ++t)
    sizes.push_back(cfg.test_narratives == 1 ? cfg.test_min_sentences
                                             : cfg.test_min_sentences + (cfg.test_max_sentences - cfg.test_min_sentences) * t /
                                                                            (cfg.test_narratives - 1));
  world.rng().shuffle(sizes);
  for (int t = 0; t < cfg.test_narratives; ++t)
    out.test.push_back(parallel("story-" + std::to_string(t), sizes[static_cast<std::size_t>(t)]));
  for (const auto& [w, t] : world.fused_forms()) out.lexicon.add(w, t, Provenance::gold);
  return out;
}

/// Writes base/, parallel/ and test/ corpus directories under `dir`.
inline void write_diglot(const std::filesystem::path& dir, const DiglotCorpus& d) {
  Corpus base, par, test;
  base.narratives = d.base;
  for (const auto& p : d.parallel) {
    par.narratives.push_back(p.griko);
    par.translations.push_back(p.italian);
  }
  for (const auto& p : d.test) {
    test.narratives.push_back(p.griko);
    test.translations.push_back(p.italian);
  }
  write_corpus(dir / "base", base);
  write_corpus(dir / "parallel", par);
  write_corpus(dir / "test", test);
}

}  // namespace glossa
