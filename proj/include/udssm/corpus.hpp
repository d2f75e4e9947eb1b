#ifndef UDSSM_CORPUS_HPP
#define UDSSM_CORPUS_HPP

#include <cctype>
#include <fstream>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "udssm/common.hpp"

// Raw-text side of the pipeline: tokenization, the heuristic noun/pronoun
// tagger (an external tagging can be supplied instead via parse_tagged_file),
// the two pseudo-label pair extractors and line-delimited pair files.

namespace udssm {

enum class Tag { Noun, Pron, Other };

enum class PronClass {
  MascSing,
  FemSing,
  NeutSing,
  ThirdPlur,
  FirstSing,
  FirstPlur,
  Second
};

struct TaggedToken {
  std::string surface;
  Tag tag = Tag::Other;
  std::optional<PronClass> pron_class;  // present iff tag == Pron
};

// Closed-class gender/plurality table; lookup is case-insensitive and total
// over the pronoun lexicon. "you" gets its own class and never matches the
// third-person ones.
inline std::optional<PronClass> pronoun_class(const std::string& surface) {
  static const std::unordered_map<std::string, PronClass> kTable = {
      {"he", PronClass::MascSing},      {"him", PronClass::MascSing},
      {"his", PronClass::MascSing},     {"himself", PronClass::MascSing},
      {"she", PronClass::FemSing},      {"her", PronClass::FemSing},
      {"hers", PronClass::FemSing},     {"herself", PronClass::FemSing},
      {"it", PronClass::NeutSing},      {"its", PronClass::NeutSing},
      {"itself", PronClass::NeutSing},  {"they", PronClass::ThirdPlur},
      {"them", PronClass::ThirdPlur},   {"their", PronClass::ThirdPlur},
      {"theirs", PronClass::ThirdPlur}, {"themselves", PronClass::ThirdPlur},
      {"i", PronClass::FirstSing},      {"me", PronClass::FirstSing},
      {"my", PronClass::FirstSing},     {"mine", PronClass::FirstSing},
      {"myself", PronClass::FirstSing}, {"we", PronClass::FirstPlur},
      {"us", PronClass::FirstPlur},     {"our", PronClass::FirstPlur},
      {"ours", PronClass::FirstPlur},   {"ourselves", PronClass::FirstPlur},
      {"you", PronClass::Second},       {"your", PronClass::Second},
      {"yours", PronClass::Second},     {"yourself", PronClass::Second},
      {"yourselves", PronClass::Second}};
  std::string key;
  key.reserve(surface.size());
  for (char c : surface)
    key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  auto it = kTable.find(key);
  if (it == kTable.end()) return std::nullopt;
  return it->second;
}

namespace detail {
inline bool is_detached_punct(char c) {
  static const std::string kPunct = ".,;:!?\"'()";
  return kPunct.find(c) != std::string::npos;
}
}  // namespace detail

// Whitespace split, then punctuation from .,;:!?"'() is detached as its own
// token. Apostrophes inside a word stay put so contractions survive.
inline std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  const std::size_t n = line.size();
  while (i < n) {
    while (i < n && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i >= n) break;
    std::size_t j = i;
    while (j < n && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    std::string piece = line.substr(i, j - i);
    i = j;

    std::size_t lo = 0, hi = piece.size();
    while (lo < hi && detail::is_detached_punct(piece[lo])) {
      tokens.push_back(std::string(1, piece[lo]));
      ++lo;
    }
    std::vector<std::string> trailing;
    while (hi > lo && detail::is_detached_punct(piece[hi - 1])) {
      trailing.push_back(std::string(1, piece[hi - 1]));
      --hi;
    }
    // interior punctuation other than the apostrophe also splits
    std::string core;
    for (std::size_t k = lo; k < hi; ++k) {
      char c = piece[k];
      if (detail::is_detached_punct(c) && c != '\'') {
        if (!core.empty()) tokens.push_back(core);
        core.clear();
        tokens.push_back(std::string(1, c));
      } else {
        core.push_back(c);
      }
    }
    if (!core.empty()) tokens.push_back(core);
    for (auto it = trailing.rbegin(); it != trailing.rend(); ++it)
      tokens.push_back(*it);
  }
  return tokens;
}

namespace detail {
inline bool starts_upper(const std::string& s) {
  return !s.empty() && std::isupper(static_cast<unsigned char>(s[0]));
}
inline bool starts_alnum(const std::string& s) {
  return !s.empty() && std::isalnum(static_cast<unsigned char>(s[0]));
}
inline std::string lower_ascii(const std::string& s) {
  std::string out = s;
  for (char& c : out)
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}
}  // namespace detail

// Heuristic fallback tagger. PRON beats everything; NOUN fires on lexicon
// membership, non-initial capitalization, or a word right after a determiner.
inline std::vector<TaggedToken> tag_tokens(
    const std::vector<std::string>& tokens,
    const std::unordered_set<std::string>& noun_lexicon) {
  static const std::unordered_set<std::string> kDeterminers = {
      "the", "a", "an", "this", "that", "these", "those"};
  std::vector<TaggedToken> out;
  out.reserve(tokens.size());
  for (std::size_t idx = 0; idx < tokens.size(); ++idx) {
    const std::string& surface = tokens[idx];
    TaggedToken t;
    t.surface = surface;
    std::string lower = detail::lower_ascii(surface);
    if (auto cls = pronoun_class(lower)) {
      t.tag = Tag::Pron;
      t.pron_class = cls;
    } else if (noun_lexicon.count(lower) ||
               (idx > 0 && detail::starts_upper(surface)) ||
               (idx > 0 && detail::starts_alnum(surface) &&
                kDeterminers.count(detail::lower_ascii(tokens[idx - 1])))) {
      t.tag = Tag::Noun;
    }
    out.push_back(std::move(t));
  }
  return out;
}

// `surface<TAB>tag` lines, blank line between sentences. PRON surfaces outside
// the pronoun table degrade to OTHER (counted in *warnings).
inline std::vector<std::vector<TaggedToken>> parse_tagged_file(
    const std::string& path, std::size_t* warnings = nullptr) {
  std::ifstream in(path);
  if (!in) throw ParseError("parse_tagged_file: cannot open " + path);
  std::vector<std::vector<TaggedToken>> sentences;
  std::vector<TaggedToken> current;
  std::string line;
  std::size_t line_no = 0, warn = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      if (!current.empty()) sentences.push_back(std::move(current));
      current.clear();
      continue;
    }
    auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 >= line.size()) {
      throw ParseError("parse_tagged_file: " + path + ":" +
                       std::to_string(line_no) + ": expected surface<TAB>tag");
    }
    TaggedToken t;
    t.surface = line.substr(0, tab);
    std::string tag = line.substr(tab + 1);
    if (tag == "NOUN") {
      t.tag = Tag::Noun;
    } else if (tag == "PRON") {
      if (auto cls = pronoun_class(t.surface)) {
        t.tag = Tag::Pron;
        t.pron_class = cls;
      } else {
        t.tag = Tag::Other;
        ++warn;
      }
    } else if (tag == "OTHER") {
      t.tag = Tag::Other;
    } else {
      throw ParseError("parse_tagged_file: " + path + ":" +
                       std::to_string(line_no) + ": unknown tag '" + tag + "'");
    }
    current.push_back(std::move(t));
  }
  if (!current.empty()) sentences.push_back(std::move(current));
  if (warnings) *warnings = warn;
  return sentences;
}

// One mined example per qualifying sentence under Assumption I.
struct PairExampleI {
  std::vector<std::string> x_tokens;
  std::vector<std::size_t> noun_positions;  // 1-based into x_tokens
  std::vector<std::string> y_tokens;        // pronoun at position 2
  std::string source_id;
};

// One mined example per in-sentence pronoun pair under Assumption II.
struct PairExampleII {
  std::vector<std::string> tokens;  // tokens[i-1] == "@Ponoun"
  std::size_t i = 0;                // 1-based masked position
  std::size_t j = 0;                // 1-based anchor pronoun, i < j
  int label = 0;                    // 1 iff same gender+plurality
  std::string source_id;
};

constexpr const char* kPlaceholderToken = "@Ponoun";

struct ExtractOptions {
  std::size_t min_len = 10;
  std::size_t max_len = 50;
};

namespace detail {

// 1-based positions of the last token of each maximal NOUN run.
inline std::vector<std::size_t> noun_run_heads(
    const std::vector<TaggedToken>& sentence) {
  std::vector<std::size_t> heads;
  for (std::size_t k = 0; k < sentence.size(); ++k) {
    if (sentence[k].tag == Tag::Noun &&
        (k + 1 == sentence.size() || sentence[k + 1].tag != Tag::Noun)) {
      heads.push_back(k + 1);
    }
  }
  return heads;
}

}  // namespace detail

// Splits at the first pronoun with at least two noun-phrase heads strictly
// inside the prefix: S^x = tokens[1 .. p-2], S^y = tokens[p-1 .. end], so the
// pronoun lands at position 2 of S^y. Sentences outside [min_len, max_len]
// or without such a pronoun yield nothing.
inline std::optional<PairExampleI> extract_assumption1(
    const std::vector<TaggedToken>& sentence, const std::string& source_id,
    const ExtractOptions& opts = {}) {
  const std::size_t n = sentence.size();
  if (n < opts.min_len || n > opts.max_len) return std::nullopt;
  std::vector<std::size_t> heads = detail::noun_run_heads(sentence);
  for (std::size_t p = 1; p <= n; ++p) {
    if (sentence[p - 1].tag != Tag::Pron) continue;
    if (p < 4) continue;  // S^x needs room for two nouns
    std::vector<std::size_t> in_prefix;
    for (std::size_t h : heads)
      if (h <= p - 2) in_prefix.push_back(h);
    if (in_prefix.size() < 2) continue;
    PairExampleI ex;
    for (std::size_t k = 1; k <= p - 2; ++k) ex.x_tokens.push_back(sentence[k - 1].surface);
    for (std::size_t k = p - 1; k <= n; ++k) ex.y_tokens.push_back(sentence[k - 1].surface);
    ex.noun_positions = std::move(in_prefix);
    ex.source_id = source_id;
    return ex;
  }
  return std::nullopt;
}

// Emits one example per unordered pronoun pair (i < j): the earlier pronoun
// is replaced by the placeholder, the label records class agreement.
inline std::vector<PairExampleII> extract_assumption2(
    const std::vector<TaggedToken>& sentence, const std::string& source_id,
    const ExtractOptions& opts = {}) {
  std::vector<PairExampleII> out;
  const std::size_t n = sentence.size();
  if (n < opts.min_len || n > opts.max_len) return out;
  std::vector<std::size_t> prons;
  for (std::size_t k = 0; k < n; ++k)
    if (sentence[k].tag == Tag::Pron) prons.push_back(k + 1);
  for (std::size_t a = 0; a < prons.size(); ++a) {
    for (std::size_t b = a + 1; b < prons.size(); ++b) {
      PairExampleII ex;
      ex.tokens.reserve(n);
      for (const auto& t : sentence) ex.tokens.push_back(t.surface);
      ex.i = prons[a];
      ex.j = prons[b];
      ex.tokens[ex.i - 1] = kPlaceholderToken;
      ex.label = sentence[prons[a] - 1].pron_class == sentence[prons[b] - 1].pron_class
                     ? 1
                     : 0;
      ex.source_id = source_id;
      out.push_back(std::move(ex));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pair files: one JSON object per line, field names fixed.

inline void write_pairs1(const std::string& path,
                         const std::vector<PairExampleI>& records) {
  std::ofstream out(path);
  if (!out) throw ParseError("write_pairs1: cannot open " + path);
  for (const auto& r : records) {
    nlohmann::json j;
    j["x"] = r.x_tokens;
    j["nouns"] = r.noun_positions;
    j["y"] = r.y_tokens;
    j["source_id"] = r.source_id;
    out << j.dump() << "\n";
  }
}

inline void write_pairs2(const std::string& path,
                         const std::vector<PairExampleII>& records) {
  std::ofstream out(path);
  if (!out) throw ParseError("write_pairs2: cannot open " + path);
  for (const auto& r : records) {
    nlohmann::json j;
    j["tokens"] = r.tokens;
    j["i"] = r.i;
    j["j"] = r.j;
    j["label"] = r.label;
    j["source_id"] = r.source_id;
    out << j.dump() << "\n";
  }
}

namespace detail {

inline nlohmann::json parse_record_line(const std::string& path,
                                        const std::string& line,
                                        std::size_t line_no) {
  try {
    return nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what());
  }
}

}  // namespace detail

inline std::vector<PairExampleI> read_pairs1(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("read_pairs1: cannot open " + path);
  std::vector<PairExampleI> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j = detail::parse_record_line(path, line, line_no);
    PairExampleI r;
    try {
      r.x_tokens = j.at("x").get<std::vector<std::string>>();
      r.noun_positions = j.at("nouns").get<std::vector<std::size_t>>();
      r.y_tokens = j.at("y").get<std::vector<std::string>>();
      r.source_id = j.at("source_id").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (r.noun_positions.size() < 2) {
      throw ParseError(path + ":" + std::to_string(line_no) +
                       ": fewer than 2 noun positions");
    }
    for (std::size_t pos : r.noun_positions) {
      if (pos == 0 || pos > r.x_tokens.size()) {
        throw ParseError(path + ":" + std::to_string(line_no) +
                         ": noun position " + std::to_string(pos) +
                         " outside x");
      }
    }
    if (r.y_tokens.size() < 2 || !pronoun_class(r.y_tokens[1])) {
      throw ParseError(path + ":" + std::to_string(line_no) +
                       ": y position 2 is not a pronoun");
    }
    out.push_back(std::move(r));
  }
  return out;
}

inline std::vector<PairExampleII> read_pairs2(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("read_pairs2: cannot open " + path);
  std::vector<PairExampleII> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j = detail::parse_record_line(path, line, line_no);
    PairExampleII r;
    try {
      r.tokens = j.at("tokens").get<std::vector<std::string>>();
      r.i = j.at("i").get<std::size_t>();
      r.j = j.at("j").get<std::size_t>();
      r.label = j.at("label").get<int>();
      r.source_id = j.at("source_id").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (r.i == 0 || r.j <= r.i || r.j > r.tokens.size() ||
        r.tokens[r.i - 1] != kPlaceholderToken || !pronoun_class(r.tokens[r.j - 1]) ||
        (r.label != 0 && r.label != 1)) {
      throw ParseError(path + ":" + std::to_string(line_no) +
                       ": record violates pair invariants");
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace udssm

#endif  // UDSSM_CORPUS_HPP
