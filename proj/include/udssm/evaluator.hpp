#ifndef UDSSM_EVALUATOR_HPP
#define UDSSM_EVALUATOR_HPP

#include <cstdio>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <json.hpp>

#include "udssm/corpus.hpp"
#include "udssm/question.hpp"
#include "udssm/tensor.hpp"
#include "udssm/udssm1.hpp"
#include "udssm/udssm2.hpp"

// Question ingestion (canonical JSONL + collection-XML conversion), scoring
// of single models and softmax-averaged ensembles.

namespace udssm {

// A scorer maps a question to one raw score per candidate; it may throw
// UnsupportedQuestion. Model scorers close over loaded parameters; tests may
// pass stubs.
using Scorer = std::function<std::vector<double>(const Question&)>;

// ---------------------------------------------------------------------------
// Canonical question file: one JSON object per line with fields
// {id, tokens, pronoun, candidates: [[s,e],...], gold}, all indices 1-based.

inline std::vector<Question> parse_questions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("parse_questions: cannot open " + path);
  std::vector<Question> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    Question q;
    try {
      q.id = j.at("id").get<std::string>();
      q.tokens = j.at("tokens").get<std::vector<std::string>>();
      q.pronoun_index = j.at("pronoun").get<std::size_t>();
      for (const auto& span : j.at("candidates")) {
        if (!span.is_array() || span.size() != 2) {
          throw DataError("candidate span must be [start, end]");
        }
        CandidateSpan c;
        c.start = span[0].get<std::size_t>();
        c.end = span[1].get<std::size_t>();
        c.label = static_cast<char>('A' + q.candidates.size());
        q.candidates.push_back(c);
      }
      q.gold = j.at("gold").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    q.validate();  // DataError carries the question id
    out.push_back(std::move(q));
  }
  return out;
}

inline void write_questions(const std::string& path,
                            const std::vector<Question>& questions) {
  std::ofstream out(path);
  if (!out) throw ParseError("write_questions: cannot open " + path);
  for (const auto& q : questions) {
    nlohmann::json j;
    j["id"] = q.id;
    j["tokens"] = q.tokens;
    j["pronoun"] = q.pronoun_index;
    auto spans = nlohmann::json::array();
    for (const auto& c : q.candidates)
      spans.push_back({c.start, c.end});
    j["candidates"] = spans;
    j["gold"] = q.gold;
    out << j.dump() << "\n";
  }
}

// ---------------------------------------------------------------------------
// Collection XML conversion

enum class CollectionKind { Wsc, Pdp };

struct ConversionResult {
  std::vector<Question> questions;
  std::vector<std::string> log;  // one line per skipped or odd item
};

namespace detail {

inline std::string collapse_ws(const std::string& s) {
  std::string out;
  bool in_space = true;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!in_space) out.push_back(' ');
      in_space = true;
    } else {
      out.push_back(c);
      in_space = false;
    }
  }
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

// First matching element anywhere under `node`, depth first.
inline std::optional<std::string> find_text(
    const boost::property_tree::ptree& node, const std::string& name) {
  for (const auto& [key, child] : node) {
    if (key == name) return collapse_ws(child.get_value<std::string>());
    if (key == "<xmlattr>" || key == "<xmltext>") continue;
    if (auto nested = find_text(child, name)) return nested;
  }
  return std::nullopt;
}

inline std::optional<const boost::property_tree::ptree*> find_node(
    const boost::property_tree::ptree& node, const std::string& name) {
  for (const auto& [key, child] : node) {
    if (key == name) return &child;
    if (key == "<xmlattr>" || key == "<xmltext>") continue;
    if (auto nested = find_node(child, name)) return nested;
  }
  return std::nullopt;
}

inline std::string lower_tokens_key(const std::vector<std::string>& tokens,
                                    std::size_t start, std::size_t len) {
  std::string key;
  for (std::size_t k = 0; k < len; ++k) {
    key += lower_ascii(tokens[start + k]);
    key.push_back('\x1f');
  }
  return key;
}

// Last occurrence of `needle` (case-insensitive token sequence) in `tokens`
// that does not overlap the pronoun; occurrences before the pronoun win.
inline std::optional<std::size_t> locate_span(
    const std::vector<std::string>& tokens, const std::vector<std::string>& needle,
    std::size_t pronoun_index) {
  if (needle.empty() || needle.size() > tokens.size()) return std::nullopt;
  std::string want = lower_tokens_key(needle, 0, needle.size());
  std::optional<std::size_t> best_before, best_any;
  for (std::size_t start = 0; start + needle.size() <= tokens.size(); ++start) {
    if (lower_tokens_key(tokens, start, needle.size()) != want) continue;
    std::size_t s = start + 1, e = start + needle.size();
    if (s <= pronoun_index && pronoun_index <= e) continue;
    if (e < pronoun_index) best_before = start;
    best_any = start;
  }
  return best_before ? best_before : best_any;
}

}  // namespace detail

// Items are any elements carrying an answer list, a correct-answer letter and
// a text split around the pronoun (txt1/pron/txt2). Candidates are located by
// token-sequence search, preferring the last match before the pronoun; items
// whose candidates cannot be located are logged and skipped, never fatal.
inline ConversionResult convert_collection_xml(const std::string& path,
                                               CollectionKind kind) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    std::ifstream in(path);
    if (!in) throw ParseError("convert_collection_xml: cannot open " + path);
    pt::read_xml(in, tree);
  } catch (const pt::xml_parser_error& e) {
    throw ParseError("convert_collection_xml: " + path + ": " + e.what());
  }

  ConversionResult result;
  const std::string prefix = kind == CollectionKind::Wsc ? "wsc-" : "pdp-";
  std::size_t ordinal = 0;

  std::function<void(const pt::ptree&)> walk = [&](const pt::ptree& node) {
    for (const auto& [key, child] : node) {
      if (key == "<xmlattr>" || key == "<xmltext>") continue;
      bool is_item = child.get_child_optional("answers").has_value() &&
                     (child.get_child_optional("correctAnswer").has_value() ||
                      child.get_child_optional("correctanswer").has_value());
      if (!is_item) {
        walk(child);
        continue;
      }
      ++ordinal;
      std::string id = prefix + std::to_string(ordinal);
      auto txt1 = detail::find_text(child, "txt1");
      auto pron = detail::find_text(child, "pron");
      auto txt2 = detail::find_text(child, "txt2");
      if (!txt1 || !pron || !txt2) {
        result.log.push_back(id + ": missing txt1/pron/txt2 split");
        continue;
      }
      std::vector<std::string> answers;
      if (auto answers_node = detail::find_node(child, "answers")) {
        for (const auto& [akey, achild] : **answers_node) {
          if (akey == "answer")
            answers.push_back(detail::collapse_ws(achild.get_value<std::string>()));
        }
      }
      auto correct = detail::find_text(child, "correctAnswer");
      if (!correct) correct = detail::find_text(child, "correctanswer");
      if (answers.empty() || !correct || correct->empty()) {
        result.log.push_back(id + ": missing answers or correct letter");
        continue;
      }

      Question q;
      q.id = id;
      std::vector<std::string> before = tokenize(*txt1);
      std::vector<std::string> pron_tokens = tokenize(*pron);
      if (pron_tokens.size() != 1) {
        result.log.push_back(id + ": pronoun is not a single token: '" + *pron +
                             "'");
        continue;
      }
      q.tokens = before;
      q.tokens.push_back(pron_tokens[0]);
      q.pronoun_index = before.size() + 1;
      std::vector<std::string> after = tokenize(*txt2);
      q.tokens.insert(q.tokens.end(), after.begin(), after.end());

      char letter = static_cast<char>(std::toupper(
          static_cast<unsigned char>((*correct)[0])));
      if (letter < 'A' || static_cast<std::size_t>(letter - 'A') >= answers.size()) {
        result.log.push_back(id + ": correct answer letter '" +
                             std::string(1, letter) + "' outside answers");
        continue;
      }
      q.gold = static_cast<std::size_t>(letter - 'A') + 1;

      bool located_all = true;
      for (std::size_t a = 0; a < answers.size(); ++a) {
        std::vector<std::string> needle = tokenize(answers[a]);
        auto start = detail::locate_span(q.tokens, needle, q.pronoun_index);
        if (!start && needle.size() > 1) {
          // tolerate a leading article mismatch between answer and text
          std::string head = detail::lower_ascii(needle[0]);
          if (head == "the" || head == "a" || head == "an") {
            std::vector<std::string> trimmed(needle.begin() + 1, needle.end());
            start = detail::locate_span(q.tokens, trimmed, q.pronoun_index);
            if (start) needle = trimmed;
          }
        }
        if (!start) {
          result.log.push_back(id + ": candidate '" + answers[a] +
                               "' not found in the sentence");
          located_all = false;
          break;
        }
        CandidateSpan span;
        span.start = *start + 1;
        span.end = *start + needle.size();
        span.label = static_cast<char>('A' + a);
        q.candidates.push_back(span);
      }
      if (!located_all) continue;
      try {
        q.validate();
      } catch (const DataError& e) {
        result.log.push_back(id + ": " + e.what());
        continue;
      }
      result.questions.push_back(std::move(q));
    }
  };
  walk(tree);
  return result;
}

// ---------------------------------------------------------------------------
// Evaluation

struct QuestionRecord {
  std::string id;
  std::vector<double> scores;
  std::size_t pick = 0;  // 1-based; 0 when unsupported
  std::size_t gold = 0;
  bool correct = false;
  bool unsupported = false;
};

struct EvalReport {
  std::size_t total = 0;
  std::size_t answered = 0;
  std::size_t unsupported = 0;  // counted as incorrect
  std::size_t correct = 0;
  double accuracy = 0.0;
  std::vector<QuestionRecord> records;
  std::size_t member_count = 0;            // ensembles only
  std::vector<double> member_accuracies;   // ensembles only
};

// Parameter structs hold shared tensor handles, so the by-value capture is
// cheap and keeps the scorer alive independently of the caller's copy.
inline Scorer make_scorer(Udssm1Params params) {
  return [params = std::move(params)](const Question& q) {
    return predict_question(params, q).scores;
  };
}

inline Scorer make_scorer(Udssm2Params params) {
  return [params = std::move(params)](const Question& q) {
    return predict_question(params, q).scores;
  };
}

inline EvalReport evaluate_scorer(const Scorer& scorer,
                                  const std::vector<Question>& questions) {
  EvalReport report;
  report.total = questions.size();
  for (const auto& q : questions) {
    QuestionRecord rec;
    rec.id = q.id;
    rec.gold = q.gold;
    try {
      Prediction pred = argmax_prediction(scorer(q));
      rec.scores = pred.scores;
      rec.pick = pred.chosen;
      rec.correct = pred.chosen == q.gold;
      ++report.answered;
      report.correct += rec.correct;
    } catch (const UnsupportedQuestion&) {
      rec.unsupported = true;
      ++report.unsupported;
    }
    report.records.push_back(std::move(rec));
  }
  report.accuracy = report.total == 0
                        ? 0.0
                        : static_cast<double>(report.correct) /
                              static_cast<double>(report.total);
  return report;
}

// Softmax-normalizes each member's candidate scores, averages the probability
// vectors, then takes the argmax (ties to the earlier candidate). A question
// any member cannot score counts as unsupported for the whole ensemble.
inline EvalReport evaluate_ensemble(const std::vector<Scorer>& members,
                                    const std::vector<Question>& questions) {
  if (members.empty()) throw ConfigError("evaluate_ensemble: no members");
  EvalReport report;
  report.total = questions.size();
  report.member_count = members.size();
  for (const auto& q : questions) {
    QuestionRecord rec;
    rec.id = q.id;
    rec.gold = q.gold;
    std::vector<double> averaged(q.candidates.size(), 0.0);
    bool supported = true;
    for (std::size_t m = 0; m < members.size(); ++m) {
      std::vector<double> scores;
      try {
        scores = members[m](q);
      } catch (const UnsupportedQuestion&) {
        supported = false;
        break;
      }
      Tensor probs = softmax(Tensor({scores.size()}, scores));
      for (std::size_t k = 0; k < averaged.size(); ++k)
        averaged[k] += probs.at(k) / static_cast<double>(members.size());
    }
    if (!supported) {
      rec.unsupported = true;
      ++report.unsupported;
    } else {
      Prediction pred = argmax_prediction(std::move(averaged));
      rec.scores = pred.scores;
      rec.pick = pred.chosen;
      rec.correct = pred.chosen == q.gold;
      ++report.answered;
      report.correct += rec.correct;
    }
    report.records.push_back(std::move(rec));
  }
  report.accuracy = report.total == 0
                        ? 0.0
                        : static_cast<double>(report.correct) /
                              static_cast<double>(report.total);
  for (const auto& member : members) {
    report.member_accuracies.push_back(
        evaluate_scorer(member, questions).accuracy);
  }
  return report;
}

inline EvalReport evaluate_model(const Udssm1Params& params,
                                 const std::vector<Question>& questions) {
  return evaluate_scorer(make_scorer(params), questions);
}

inline EvalReport evaluate_model(const Udssm2Params& params,
                                 const std::vector<Question>& questions) {
  return evaluate_scorer(make_scorer(params), questions);
}

// Accuracy in the paper's table style, e.g. "75.0%".
inline std::string format_accuracy(double accuracy) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f%%", accuracy * 100.0);
  return buf;
}

inline nlohmann::json report_to_json(const EvalReport& r) {
  nlohmann::json j;
  j["total"] = r.total;
  j["answered"] = r.answered;
  j["unsupported"] = r.unsupported;
  j["correct"] = r.correct;
  j["accuracy"] = r.accuracy;
  if (r.member_count > 0) {
    j["member_count"] = r.member_count;
    j["member_accuracies"] = r.member_accuracies;
  }
  auto records = nlohmann::json::array();
  for (const auto& rec : r.records) {
    nlohmann::json q;
    q["id"] = rec.id;
    q["gold"] = rec.gold;
    if (rec.unsupported) {
      q["unsupported"] = true;
    } else {
      q["scores"] = rec.scores;
      q["pick"] = rec.pick;
      q["correct"] = rec.correct;
    }
    records.push_back(std::move(q));
  }
  j["questions"] = std::move(records);
  return j;
}

}  // namespace udssm

#endif  // UDSSM_EVALUATOR_HPP
