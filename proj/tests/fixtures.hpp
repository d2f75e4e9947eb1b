#ifndef UDSSM_TESTS_FIXTURES_HPP
#define UDSSM_TESTS_FIXTURES_HPP

#include <string>
#include <vector>

#include "udssm/corpus.hpp"

// Synthetic planted-pattern corpora. They are learnable by construction,
// which makes them brute-force oracles for the training loop: a correct
// model/optimizer pair must be able to overfit them at tiny scale.

namespace udssm::fixtures {

struct Fixture1 {
  std::vector<PairExampleI> train, val;
  std::vector<std::string> vocab;
};

// Each entity token ent<k> is paired with a cue token cue<k> that appears
// right after the pronoun. The prefix holds the true entity plus a distractor
// in random order; ranking the pronoun state against in-batch negatives is
// solvable exactly by learning the cue<->entity correspondence through the
// attention query. Validation repeats one seen combination per entity, so
// every validation batch holds 16 distinct cues: this is an overfit oracle
// for the training loop, not a generalization test.
inline Fixture1 make_fixture1(std::size_t entities, std::size_t per_entity,
                              std::uint64_t seed) {
  Fixture1 fx;
  std::vector<std::string> fillers = {"near", "while", "under", "beside"};
  for (std::size_t k = 0; k < entities; ++k) {
    fx.vocab.push_back("ent" + std::to_string(k));
    fx.vocab.push_back("cue" + std::to_string(k));
  }
  fx.vocab.insert(fx.vocab.end(), fillers.begin(), fillers.end());
  fx.vocab.insert(fx.vocab.end(), {"the", "and", "stood", "then", "it", "soon",
                                   "after"});

  Rng rng(seed);
  auto build = [&](std::size_t entity, const std::string& id) {
    std::size_t other = rng.below(entities - 1);
    if (other >= entity) ++other;
    bool entity_first = rng.below(2) == 0;
    PairExampleI ex;
    std::string ent = "ent" + std::to_string(entity);
    std::string dis = "ent" + std::to_string(other);
    ex.x_tokens = {"the", entity_first ? ent : dis, fillers[rng.below(fillers.size())],
                   entity_first ? dis : ent, "stood"};
    ex.noun_positions = {2, 4};
    ex.y_tokens = {"then", "it", "cue" + std::to_string(entity), "soon", "after"};
    ex.source_id = id;
    return ex;
  };

  for (std::size_t k = 0; k < entities; ++k)
    for (std::size_t r = 0; r < per_entity; ++r)
      fx.train.push_back(build(k, "fx1-train-" + std::to_string(k * per_entity + r)));
  for (std::size_t k = 0; k < entities; ++k) {
    fx.val.push_back(fx.train[k * per_entity]);
    fx.val.back().source_id = "fx1-val-" + std::to_string(k);
  }
  return fx;
}

// Training configuration both fixture consumers pin: lr 0.01 moves the tiny
// models fast enough to overfit inside the epoch budgets.
inline double fixture_learning_rate() { return 0.01; }

struct Fixture2 {
  std::vector<PairExampleII> train;
  std::vector<std::string> vocab;
};

// The token right after the masked pronoun decides the label ("match" = 1,
// "clash" = 0), so the backward state at i+1 carries the class linearly.
inline Fixture2 make_fixture2(std::size_t n, std::uint64_t seed) {
  Fixture2 fx;
  std::vector<std::string> fillers = {"river", "stone", "cloud", "meadow",
                                      "lantern", "garden"};
  fx.vocab = fillers;
  fx.vocab.insert(fx.vocab.end(), {"match", "clash", "she", "walked", "by"});

  Rng rng(seed);
  for (std::size_t k = 0; k < n; ++k) {
    int label = static_cast<int>(k % 2);
    PairExampleII ex;
    ex.tokens = {fillers[rng.below(fillers.size())],
                 kPlaceholderToken,
                 label == 1 ? "match" : "clash",
                 fillers[rng.below(fillers.size())],
                 fillers[rng.below(fillers.size())],
                 "she",
                 "walked",
                 "by",
                 fillers[rng.below(fillers.size())]};
    ex.i = 2;
    ex.j = 6;
    ex.label = label;
    ex.source_id = "fx2-" + std::to_string(k);
    fx.train.push_back(std::move(ex));
  }
  return fx;
}

}  // namespace udssm::fixtures

#endif  // UDSSM_TESTS_FIXTURES_HPP
