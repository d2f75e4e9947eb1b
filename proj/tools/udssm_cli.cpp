// Command-line front end: pseudo-label data generation, vocabulary building,
// training, evaluation/ensembling, collection conversion and gradient checks.
//
// Exit codes: 0 success, 1 data/format errors, 2 usage errors.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "udssm/corpus.hpp"
#include "udssm/evaluator.hpp"
#include "udssm/trainer.hpp"
#include "udssm/udssm1.hpp"
#include "udssm/udssm2.hpp"

namespace {

using namespace udssm;

std::string basename_of(const std::string& path) {
  return std::filesystem::path(path).filename().string();
}

std::unordered_set<std::string> read_lexicon(const std::string& path) {
  std::unordered_set<std::string> out;
  if (path.empty()) return out;
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open noun lexicon " + path);
  std::string line;
  while (std::getline(in, line)) {
    auto tokens = tokenize(line);
    for (auto& t : tokens) out.insert(detail::lower_ascii(t));
  }
  return out;
}

std::vector<std::string> read_vocab_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open vocabulary " + path);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Flat config files: `key = value` lines with '#' comments. Command-line
// flags override file values; unknown keys are usage errors.

using ConfigSetters = std::map<std::string, std::function<void(const std::string&)>>;

template <class T>
std::function<void(const std::string&)> config_setter(T& field) {
  return [&field](const std::string& raw) {
    if constexpr (std::is_same_v<T, std::string>) {
      field = raw;
    } else if constexpr (std::is_same_v<T, bool>) {
      if (raw == "true" || raw == "1") {
        field = true;
      } else if (raw == "false" || raw == "0") {
        field = false;
      } else {
        throw UsageError("config: bad boolean '" + raw + "'");
      }
    } else {
      std::istringstream ss(raw);
      ss >> field;
      if (ss.fail() || !ss.eof()) {
        throw UsageError("config: bad value '" + raw + "'");
      }
    }
  };
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

void apply_config(const CLI::App& sub, const ConfigSetters& setters,
                  const std::string& path) {
  if (path.empty()) return;
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file " + path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError("config " + path + ":" + std::to_string(line_no) +
                       ": expected key = value");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    auto it = setters.find(key);
    if (it == setters.end()) {
      throw UsageError("config " + path + ":" + std::to_string(line_no) +
                       ": unknown key '" + key + "'");
    }
    if (sub.count("--" + key) > 0) continue;  // command line wins
    it->second(value);
  }
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// ---------------------------------------------------------------------------
// gen-data

struct GenDataArgs {
  int assumption = 1;
  std::string input, output;
  std::string format = "raw";
  std::string noun_lexicon;
  std::size_t min_len = 10, max_len = 50;
  std::string config;
};

int run_gen_data(const GenDataArgs& args) {
  ExtractOptions opts{args.min_len, args.max_len};
  std::vector<std::vector<TaggedToken>> sentences;
  if (args.format == "tagged") {
    std::size_t warnings = 0;
    sentences = parse_tagged_file(args.input, &warnings);
    if (warnings) {
      std::cerr << warnings << " PRON tokens outside the pronoun table "
                << "degraded to OTHER\n";
    }
  } else {
    auto lexicon = read_lexicon(args.noun_lexicon);
    std::ifstream in(args.input);
    if (!in) throw ParseError("cannot open corpus " + args.input);
    std::string line;
    while (std::getline(in, line)) {
      auto tokens = tokenize(line);
      if (tokens.empty()) {
        sentences.emplace_back();  // keep line numbering aligned
        continue;
      }
      sentences.push_back(tag_tokens(tokens, lexicon));
    }
  }

  const std::string base = basename_of(args.input);
  std::size_t emitted = 0;
  if (args.assumption == 1) {
    std::vector<PairExampleI> pairs;
    for (std::size_t k = 0; k < sentences.size(); ++k) {
      if (sentences[k].empty()) continue;
      auto ex = extract_assumption1(sentences[k], base + "#" + std::to_string(k + 1),
                                    opts);
      if (ex) pairs.push_back(std::move(*ex));
    }
    write_pairs1(args.output, pairs);
    emitted = pairs.size();
  } else {
    std::vector<PairExampleII> pairs;
    for (std::size_t k = 0; k < sentences.size(); ++k) {
      if (sentences[k].empty()) continue;
      auto ex = extract_assumption2(sentences[k], base + "#" + std::to_string(k + 1),
                                    opts);
      for (auto& e : ex) pairs.push_back(std::move(e));
    }
    write_pairs2(args.output, pairs);
    emitted = pairs.size();
  }
  std::cout << "gen-data: " << sentences.size() << " sentences -> " << emitted
            << " assumption-" << args.assumption << " pairs in " << args.output
            << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// build-vocab

struct BuildVocabArgs {
  std::vector<std::string> pairs;
  std::size_t min_count = 5;
  std::string glove;
  std::string output;
  std::string config;
};

int run_build_vocab(const BuildVocabArgs& args) {
  std::map<std::string, std::size_t> counts;
  auto add = [&](const std::vector<std::string>& tokens) {
    for (const auto& t : tokens) {
      if (t == kPlaceholderToken) continue;  // reserved row, always present
      ++counts[detail::lower_ascii(t)];
    }
  };
  for (const auto& path : args.pairs) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open pair file " + path);
    std::string first;
    while (std::getline(in, first) && first.empty()) {
    }
    if (first.empty()) continue;
    bool kind1 = nlohmann::json::parse(first).contains("x");
    if (kind1) {
      for (const auto& r : read_pairs1(path)) {
        add(r.x_tokens);
        add(r.y_tokens);
      }
    } else {
      for (const auto& r : read_pairs2(path)) add(r.tokens);
    }
  }

  std::set<std::string> glove_tokens;
  if (!args.glove.empty()) {
    std::ifstream in(args.glove);
    if (!in) throw ParseError("cannot open embeddings " + args.glove);
    std::string line;
    while (std::getline(in, line)) {
      auto sp = line.find(' ');
      if (sp != std::string::npos && sp > 0) glove_tokens.insert(line.substr(0, sp));
    }
  }

  std::ofstream out(args.output);
  if (!out) throw ParseError("cannot open output " + args.output);
  std::size_t kept = 0;
  for (const auto& [token, count] : counts) {
    if (count >= args.min_count || glove_tokens.count(token)) {
      out << token << "\n";
      ++kept;
    }
  }
  std::cout << "build-vocab: " << counts.size() << " distinct tokens, kept "
            << kept << " in " << args.output << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string model;
  std::string pairs, glove, vocab, output;
  std::size_t dim = 300, hidden = 300;
  TrainConfig cfg;
  std::string config;
};

std::vector<std::pair<std::string, std::string>> train_hyper(const TrainArgs& a,
                                                             const FitResult& res) {
  return {{"model", a.model},
          {"learning_rate", std::to_string(a.cfg.learning_rate)},
          {"dropout", std::to_string(a.cfg.dropout)},
          {"batch_size", std::to_string(a.cfg.batch_size)},
          {"max_epochs", std::to_string(a.cfg.max_epochs)},
          {"patience", std::to_string(a.cfg.patience)},
          {"seed", std::to_string(a.cfg.seed)},
          {"validation_fraction", std::to_string(a.cfg.validation_fraction)},
          {"best_epoch", std::to_string(res.best_epoch)},
          {"best_metric", std::to_string(res.best_metric)}};
}

EmbeddingTable build_table(const TrainArgs& args,
                           const std::vector<std::string>& derived_vocab,
                           Rng& rng) {
  std::vector<std::string> vocab =
      args.vocab.empty() ? derived_vocab : read_vocab_file(args.vocab);
  if (!args.glove.empty()) {
    std::size_t duplicates = 0;
    EmbeddingTable t = load_glove(args.glove, args.dim, vocab, rng, &duplicates);
    if (duplicates) {
      std::cerr << "load_glove: " << duplicates
                << " duplicate tokens, last occurrence kept\n";
    }
    return t;
  }
  return EmbeddingTable::create(vocab, args.dim, rng);
}

void print_history(const FitResult& res) {
  for (const auto& e : res.history) {
    std::cout << "epoch " << e.epoch << ": train loss " << e.train_loss
              << ", val metric " << e.val_metric << "\n";
  }
  std::cout << "best metric " << res.best_metric << " at epoch "
            << res.best_epoch << "\n";
}

int run_train(const TrainArgs& args) {
  Rng rng(args.cfg.seed);
  if (args.model == "udssm1") {
    auto pairs = read_pairs1(args.pairs);
    auto [train, val] =
        split_train_val(pairs, args.cfg.validation_fraction, args.cfg.seed);
    std::cout << "train: " << train.size() << " train / " << val.size()
              << " validation pairs\n";
    std::vector<std::string> derived;
    for (const auto& r : pairs) {
      derived.insert(derived.end(), r.x_tokens.begin(), r.x_tokens.end());
      derived.insert(derived.end(), r.y_tokens.begin(), r.y_tokens.end());
    }
    Udssm1Params model = Udssm1Params::init(build_table(args, derived, rng),
                                            args.hidden, rng);
    FitResult res = fit(model, train, val, args.cfg);
    print_history(res);
    save_udssm1(args.output, model, train_hyper(args, res));
  } else {
    auto pairs = read_pairs2(args.pairs);
    auto [train, val] =
        split_train_val(pairs, args.cfg.validation_fraction, args.cfg.seed);
    std::cout << "train: " << train.size() << " train / " << val.size()
              << " validation pairs\n";
    std::vector<std::string> derived;
    for (const auto& r : pairs)
      derived.insert(derived.end(), r.tokens.begin(), r.tokens.end());
    Udssm2Params model = Udssm2Params::init(build_table(args, derived, rng),
                                            args.hidden, rng);
    FitResult res = fit(model, train, val, args.cfg);
    print_history(res);
    save_udssm2(args.output, model, train_hyper(args, res));
  }
  std::cout << "saved checkpoint " << args.output << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  std::string models;  // comma-separated checkpoint list
  std::string questions;
  bool ensemble = false;
  std::string report;
  std::string config;
};

void print_report(const std::string& name, const EvalReport& rep) {
  std::cout << name << ": accuracy " << format_accuracy(rep.accuracy) << " ("
            << rep.correct << "/" << rep.total << " correct, " << rep.answered
            << " answered, " << rep.unsupported << " unsupported)\n";
}

int run_eval(const EvalArgs& args) {
  auto paths = split_commas(args.models);
  if (paths.empty()) throw ConfigError("eval: no checkpoints given");
  auto questions = parse_questions(args.questions);

  std::vector<Scorer> scorers;
  int kind = 0;
  for (const auto& path : paths) {
    LoadedCheckpoint ck = checkpoint_load(path);
    if (kind == 0) {
      kind = ck.kind;
    } else if (kind != ck.kind) {
      throw ConfigError("eval: mixed model kinds in the checkpoint list");
    }
    if (ck.kind == 1) {
      scorers.push_back(make_scorer(udssm1_from_checkpoint(ck)));
    } else {
      scorers.push_back(make_scorer(udssm2_from_checkpoint(ck)));
    }
  }

  nlohmann::json out;
  if (args.ensemble) {
    EvalReport rep = evaluate_ensemble(scorers, questions);
    print_report("ensemble[" + std::to_string(scorers.size()) + "]", rep);
    for (std::size_t m = 0; m < rep.member_accuracies.size(); ++m) {
      std::cout << "  member " << paths[m] << ": "
                << format_accuracy(rep.member_accuracies[m]) << "\n";
    }
    out = report_to_json(rep);
  } else {
    out = nlohmann::json::array();
    for (std::size_t m = 0; m < scorers.size(); ++m) {
      EvalReport rep = evaluate_scorer(scorers[m], questions);
      print_report(paths[m], rep);
      out.push_back(report_to_json(rep));
    }
  }
  if (!args.report.empty()) {
    std::ofstream rf(args.report);
    if (!rf) throw ParseError("cannot open report file " + args.report);
    rf << out.dump(2) << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// convert

struct ConvertArgs {
  std::string xml, kind = "wsc", output, log;
  std::string config;
};

int run_convert(const ConvertArgs& args) {
  CollectionKind kind =
      args.kind == "pdp" ? CollectionKind::Pdp : CollectionKind::Wsc;
  ConversionResult res = convert_collection_xml(args.xml, kind);
  write_questions(args.output, res.questions);
  if (!args.log.empty()) {
    std::ofstream lf(args.log);
    for (const auto& line : res.log) lf << line << "\n";
  } else {
    for (const auto& line : res.log) std::cerr << "skip: " << line << "\n";
  }
  std::cout << "convert: " << res.questions.size() << " questions ("
            << res.log.size() << " skipped) -> " << args.output << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// gradcheck

struct GradcheckArgs {
  std::string model;
  std::string dims = "tiny";
  std::uint64_t seed = 0;
  double tolerance = 1e-4;
  std::size_t samples = 8;
  std::string config;
};

int run_gradcheck(const GradcheckArgs& args) {
  // tiny dims: d = 8, h = 8, T <= 12, B = 4
  const std::size_t d = 8, h = 8, batch = 4;
  Rng rng(args.seed);
  std::vector<std::string> vocab;
  for (int k = 0; k < 12; ++k) vocab.push_back("tok" + std::to_string(k));
  vocab.insert(vocab.end(), {"she", "he", "it", "they"});

  auto word = [&]() { return vocab[rng.below(12)]; };
  GradCheckReport report;
  if (args.model == "udssm1") {
    EmbeddingTable table = EmbeddingTable::create(vocab, d, rng);
    Udssm1Params model = Udssm1Params::init(std::move(table), h, rng);
    std::vector<PairExampleI> examples;
    for (std::size_t b = 0; b < batch; ++b) {
      PairExampleI ex;
      std::size_t x_len = 5 + rng.below(5);
      for (std::size_t k = 0; k < x_len; ++k) ex.x_tokens.push_back(word());
      ex.noun_positions = {1 + rng.below(x_len), 1 + rng.below(x_len)};
      ex.y_tokens = {"then", "she", word(), word()};
      ex.source_id = "gradcheck";
      examples.push_back(std::move(ex));
    }
    auto loss = [&]() { return batch_nce_loss(model, examples); };
    report = finite_diff_check(loss, model.named_params(), 1e-5, args.tolerance,
                               args.samples, args.seed);
  } else {
    EmbeddingTable table = EmbeddingTable::create(vocab, d, rng);
    Udssm2Params model = Udssm2Params::init(std::move(table), h, rng);
    std::vector<PairExampleII> examples;
    for (std::size_t b = 0; b < batch; ++b) {
      PairExampleII ex;
      std::size_t len = 8 + rng.below(5);
      for (std::size_t k = 0; k < len; ++k) ex.tokens.push_back(word());
      ex.i = 2 + rng.below(3);
      ex.j = ex.i + 1 + rng.below(len - ex.i - 1);
      ex.tokens[ex.i - 1] = kPlaceholderToken;
      ex.tokens[ex.j - 1] = "she";
      ex.label = static_cast<int>(b % 2);
      ex.source_id = "gradcheck";
      examples.push_back(std::move(ex));
    }
    auto loss = [&]() { return pair_loss(model, examples); };
    report = finite_diff_check(loss, model.named_params(), 1e-5, args.tolerance,
                               args.samples, args.seed);
  }
  std::cout << "gradcheck " << args.model << ": max relative error "
            << report.max_rel_error << " over " << report.coords_checked
            << " coordinates (worst " << report.worst_param << "["
            << report.worst_index << "]) -> "
            << (report.pass ? "PASS" : "FAIL") << " at tolerance "
            << args.tolerance << "\n";
  return report.pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"UDSSM pronoun-disambiguation pipeline"};
  app.require_subcommand(1);

  GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand(
      "gen-data", "Mine pseudo-labeled pairs from a sentence-per-line corpus");
  gen_cmd->add_option("--assumption", gen.assumption,
                      "Pairing assumption (1 or 2)")
      ->required()
      ->check(CLI::IsMember({1, 2}));
  gen_cmd->add_option("--in", gen.input, "Input corpus (raw or tagged)")
      ->required();
  gen_cmd->add_option("--out", gen.output, "Output pair file")->required();
  gen_cmd->add_option("--format", gen.format, "Input format")
      ->check(CLI::IsMember({"raw", "tagged"}))
      ->capture_default_str();
  gen_cmd->add_option("--noun-lexicon", gen.noun_lexicon,
                      "Noun list for the heuristic tagger (raw format)");
  gen_cmd->add_option("--min-len", gen.min_len, "Shortest kept sentence")
      ->capture_default_str();
  gen_cmd->add_option("--max-len", gen.max_len, "Longest kept sentence")
      ->capture_default_str();
  gen_cmd->add_option("--config", gen.config, "Key = value config file");

  BuildVocabArgs vocab;
  auto* vocab_cmd =
      app.add_subcommand("build-vocab", "Collect tokens from pair files");
  vocab_cmd->add_option("--pairs", vocab.pairs, "Pair files")->required();
  vocab_cmd->add_option("--min-count", vocab.min_count, "Minimum occurrences")
      ->capture_default_str();
  vocab_cmd->add_option("--glove", vocab.glove,
                        "Keep rare tokens covered by these embeddings");
  vocab_cmd->add_option("--out", vocab.output, "Output vocabulary")->required();
  vocab_cmd->add_option("--config", vocab.config, "Key = value config file");

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train a model on mined pairs");
  train_cmd->add_option("--model", train.model, "Model kind")
      ->required()
      ->check(CLI::IsMember({"udssm1", "udssm2"}));
  train_cmd->add_option("--pairs", train.pairs, "Pair file")->required();
  train_cmd->add_option("--glove", train.glove,
                        "GloVe text embeddings for initialization");
  train_cmd->add_option("--vocab", train.vocab,
                        "Vocabulary file (default: derive from pairs)");
  train_cmd->add_option("--out", train.output, "Checkpoint path")->required();
  train_cmd->add_option("--dim", train.dim, "Embedding dimension")
      ->capture_default_str();
  train_cmd->add_option("--hidden", train.hidden,
                        "Single-direction LSTM hidden size")
      ->capture_default_str();
  train_cmd->add_option("--lr", train.cfg.learning_rate, "Adamax learning rate")
      ->capture_default_str();
  train_cmd->add_option("--beta1", train.cfg.beta1, "Adamax beta1")
      ->capture_default_str();
  train_cmd->add_option("--beta2", train.cfg.beta2, "Adamax beta2")
      ->capture_default_str();
  train_cmd->add_option("--epsilon", train.cfg.epsilon, "Adamax epsilon")
      ->capture_default_str();
  train_cmd->add_option("--dropout", train.cfg.dropout,
                        "Dropout rate (paper grid: 0, 0.1, 0.2)")
      ->capture_default_str();
  train_cmd->add_option("--batch-size", train.cfg.batch_size,
                        "Batch size (paper grid: 30, 50, 100, 200)")
      ->capture_default_str();
  train_cmd->add_option("--epochs", train.cfg.max_epochs, "Epoch budget")
      ->capture_default_str();
  train_cmd->add_option("--patience", train.cfg.patience,
                        "Non-improving epochs before early stop")
      ->capture_default_str();
  train_cmd->add_option("--seed", train.cfg.seed, "Run seed")
      ->capture_default_str();
  train_cmd->add_option("--val-fraction", train.cfg.validation_fraction,
                        "Validation split fraction")
      ->capture_default_str();
  train_cmd->add_option("--config", train.config, "Key = value config file");

  EvalArgs eval;
  auto* eval_cmd =
      app.add_subcommand("eval", "Evaluate checkpoints on a question file");
  eval_cmd->add_option("--model", eval.models,
                       "Checkpoint path, or comma-separated list")
      ->required();
  eval_cmd->add_option("--questions", eval.questions, "Canonical question file")
      ->required();
  eval_cmd->add_flag("--ensemble", eval.ensemble,
                     "Average softmax-normalized scores across checkpoints");
  eval_cmd->add_option("--report", eval.report, "Write a JSON report here");
  eval_cmd->add_option("--config", eval.config, "Key = value config file");

  ConvertArgs convert;
  auto* convert_cmd = app.add_subcommand(
      "convert", "Convert a collection XML file to canonical questions");
  convert_cmd->add_option("--xml", convert.xml, "Collection XML")->required();
  convert_cmd->add_option("--kind", convert.kind, "Collection kind")
      ->required()
      ->check(CLI::IsMember({"wsc", "pdp"}));
  convert_cmd->add_option("--out", convert.output, "Output question file")
      ->required();
  convert_cmd->add_option("--log", convert.log,
                          "Write the skip log here instead of stderr");
  convert_cmd->add_option("--config", convert.config, "Key = value config file");

  GradcheckArgs gradcheck;
  auto* grad_cmd = app.add_subcommand(
      "gradcheck", "Verify analytic gradients against central differences");
  grad_cmd->add_option("--model", gradcheck.model, "Model kind")
      ->required()
      ->check(CLI::IsMember({"udssm1", "udssm2"}));
  grad_cmd->add_option("--dims", gradcheck.dims, "Problem size")
      ->check(CLI::IsMember({"tiny"}))
      ->capture_default_str();
  grad_cmd->add_option("--seed", gradcheck.seed, "Run seed")
      ->capture_default_str();
  grad_cmd->add_option("--tolerance", gradcheck.tolerance,
                       "Max relative error allowed")
      ->capture_default_str();
  grad_cmd->add_option("--samples", gradcheck.samples,
                       "Coordinates checked per parameter")
      ->capture_default_str();
  grad_cmd->add_option("--config", gradcheck.config, "Key = value config file");

  ConfigSetters gen_keys = {
      {"assumption", config_setter(gen.assumption)},
      {"in", config_setter(gen.input)},
      {"out", config_setter(gen.output)},
      {"format", config_setter(gen.format)},
      {"noun-lexicon", config_setter(gen.noun_lexicon)},
      {"min-len", config_setter(gen.min_len)},
      {"max-len", config_setter(gen.max_len)}};
  ConfigSetters vocab_keys = {
      {"pairs", [&vocab](const std::string& raw) { vocab.pairs = split_commas(raw); }},
      {"min-count", config_setter(vocab.min_count)},
      {"glove", config_setter(vocab.glove)},
      {"out", config_setter(vocab.output)}};
  ConfigSetters train_keys = {
      {"model", config_setter(train.model)},
      {"pairs", config_setter(train.pairs)},
      {"glove", config_setter(train.glove)},
      {"vocab", config_setter(train.vocab)},
      {"out", config_setter(train.output)},
      {"dim", config_setter(train.dim)},
      {"hidden", config_setter(train.hidden)},
      {"lr", config_setter(train.cfg.learning_rate)},
      {"beta1", config_setter(train.cfg.beta1)},
      {"beta2", config_setter(train.cfg.beta2)},
      {"epsilon", config_setter(train.cfg.epsilon)},
      {"dropout", config_setter(train.cfg.dropout)},
      {"batch-size", config_setter(train.cfg.batch_size)},
      {"epochs", config_setter(train.cfg.max_epochs)},
      {"patience", config_setter(train.cfg.patience)},
      {"seed", config_setter(train.cfg.seed)},
      {"val-fraction", config_setter(train.cfg.validation_fraction)}};
  ConfigSetters eval_keys = {
      {"model", config_setter(eval.models)},
      {"questions", config_setter(eval.questions)},
      {"ensemble", config_setter(eval.ensemble)},
      {"report", config_setter(eval.report)}};
  ConfigSetters convert_keys = {
      {"xml", config_setter(convert.xml)},
      {"kind", config_setter(convert.kind)},
      {"out", config_setter(convert.output)},
      {"log", config_setter(convert.log)}};
  ConfigSetters grad_keys = {
      {"model", config_setter(gradcheck.model)},
      {"dims", config_setter(gradcheck.dims)},
      {"seed", config_setter(gradcheck.seed)},
      {"tolerance", config_setter(gradcheck.tolerance)},
      {"samples", config_setter(gradcheck.samples)}};

  try {
    app.parse(argc, argv);
    if (gen_cmd->parsed()) {
      apply_config(*gen_cmd, gen_keys, gen.config);
      return run_gen_data(gen);
    }
    if (vocab_cmd->parsed()) {
      apply_config(*vocab_cmd, vocab_keys, vocab.config);
      return run_build_vocab(vocab);
    }
    if (train_cmd->parsed()) {
      apply_config(*train_cmd, train_keys, train.config);
      return run_train(train);
    }
    if (eval_cmd->parsed()) {
      apply_config(*eval_cmd, eval_keys, eval.config);
      return run_eval(eval);
    }
    if (convert_cmd->parsed()) {
      apply_config(*convert_cmd, convert_keys, convert.config);
      return run_convert(convert);
    }
    if (grad_cmd->parsed()) {
      apply_config(*grad_cmd, grad_keys, gradcheck.config);
      return run_gradcheck(gradcheck);
    }
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
