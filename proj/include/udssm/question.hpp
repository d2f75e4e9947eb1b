#ifndef UDSSM_QUESTION_HPP
#define UDSSM_QUESTION_HPP

#include <string>
#include <vector>

#include "udssm/common.hpp"

namespace udssm {

// Inclusive 1-based token span of one answer candidate.
struct CandidateSpan {
  std::size_t start = 0;
  std::size_t end = 0;
  char label = 'A';
};

// One multiple-choice pronoun question. All indices are 1-based.
struct Question {
  std::string id;
  std::vector<std::string> tokens;
  std::size_t pronoun_index = 0;
  std::vector<CandidateSpan> candidates;
  std::size_t gold = 0;  // 1-based candidate index

  void validate() const {
    if (tokens.empty() || pronoun_index == 0 || pronoun_index > tokens.size()) {
      throw DataError("question " + id + ": pronoun index " +
                      std::to_string(pronoun_index) + " outside sentence");
    }
    if (candidates.empty()) {
      throw DataError("question " + id + ": no candidates");
    }
    for (const auto& c : candidates) {
      if (c.start == 0 || c.start > c.end || c.end > tokens.size()) {
        throw DataError("question " + id + ": candidate span [" +
                        std::to_string(c.start) + "," + std::to_string(c.end) +
                        "] outside sentence");
      }
      if (c.start <= pronoun_index && pronoun_index <= c.end) {
        throw DataError("question " + id + ": candidate span overlaps pronoun");
      }
    }
    if (gold == 0 || gold > candidates.size()) {
      throw DataError("question " + id + ": gold index " + std::to_string(gold) +
                      " outside candidates");
    }
  }
};

// Model output for one question: 1-based argmax (ties to the earlier
// candidate) plus the raw per-candidate scores.
struct Prediction {
  std::size_t chosen = 0;
  std::vector<double> scores;
};

inline Prediction argmax_prediction(std::vector<double> scores) {
  Prediction p;
  p.chosen = 1;
  for (std::size_t k = 1; k < scores.size(); ++k)
    if (scores[k] > scores[p.chosen - 1]) p.chosen = k + 1;
  p.scores = std::move(scores);
  return p;
}

}  // namespace udssm

#endif  // UDSSM_QUESTION_HPP
