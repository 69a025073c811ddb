// Command-line front end: train, generate, evaluate, parse, synthesize, crossval.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cfgdec/controller.hpp"
#include "cfgdec/corpus.hpp"
#include "cfgdec/earley.hpp"
#include "cfgdec/error.hpp"
#include "cfgdec/evaluate.hpp"
#include "cfgdec/grammar.hpp"
#include "cfgdec/model.hpp"
#include "cfgdec/trainer.hpp"

namespace {

using namespace cfgdec;
using json = nlohmann::json;

enum class LogLevel { kQuiet = 0, kInfo = 1, kDebug = 2 };

LogLevel log_level() {
  const char* env = std::getenv("CFGDEC_LOG");
  if (!env) return LogLevel::kInfo;
  const std::string v(env);
  if (v == "quiet" || v == "off" || v == "0") return LogLevel::kQuiet;
  if (v == "debug" || v == "2") return LogLevel::kDebug;
  return LogLevel::kInfo;
}

void log(LogLevel level, const std::string& msg) {
  if (static_cast<int>(level) <= static_cast<int>(log_level())) std::cerr << msg << '\n';
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// Left-aligned first column, right-aligned others.
std::string table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) {
    width[c] = header[c].size();
    for (const auto& r : rows) width[c] = std::max(width[c], r[c].size());
  }
  std::ostringstream out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c > 0) out << "  ";
      const std::string pad(width[c] - cells[c].size(), ' ');
      out << (c == 0 ? cells[c] + pad : pad + cells[c]);
    }
    out << '\n';
  };
  line(header);
  std::size_t total = 0;
  for (std::size_t w : width) total += w;
  out << std::string(total + 2 * (width.size() - 1), '-') << '\n';
  for (const auto& r : rows) line(r);
  return out.str();
}

class RecordSink {
 public:
  explicit RecordSink(const std::string& path) {
    if (path.empty()) return;
    out_.open(path);
    if (!out_) throw Error("cannot open records file '" + path + "'");
  }
  void write(const json& record) {
    if (out_.is_open()) out_ << record.dump() << '\n';
  }

 private:
  std::ofstream out_;
};

struct Options {
  std::string grammar;
  std::string corpus;
  std::string checkpoint;
  std::string ctx_size = "inf";
  std::string ctx_sizes = "3,5,inf";
  std::string templates;
  std::string out;
  std::string query;
  std::string sentence;
  std::string records;
  std::string validator;
  double init_scale = 0.08;
  int hidden = 200;
  int embed = 300;
  int epochs = 100;
  std::uint64_t seed = 1;
  int folds = 10;
  std::size_t n = 100;
  std::size_t max_len = 100;
  bool baseline = false;
  bool allow_skip = false;
  bool exhaustive = false;
};

TrainConfig config_from(const Options& o) {
  TrainConfig cfg;
  cfg.epochs = o.epochs;
  cfg.ctx = ContextSize::parse(o.ctx_size);
  cfg.hidden_dim = o.hidden;
  cfg.embed_dim = o.embed;
  cfg.init_scale = o.init_scale;
  cfg.seed = o.seed;
  cfg.folds = o.folds;
  cfg.validate();
  return cfg;
}

std::vector<Example> load_examples(const Options& o, const Grammar& g) {
  Corpus corpus = load_corpus_file(o.corpus, g, o.allow_skip);
  for (const auto& d : corpus.diagnostics) log(LogLevel::kInfo, "skipped " + d);
  log(LogLevel::kInfo, "loaded " + std::to_string(corpus.examples.size()) + " pairs (" +
                           std::to_string(corpus.rejected) + " rejected)");
  return std::move(corpus.examples);
}

json epoch_record(const EpochRecord& e) {
  return {{"type", "epoch"},         {"epoch", e.epoch},   {"mean_loss", e.mean_loss},
          {"learning_rate", e.learning_rate}, {"seconds", e.seconds}, {"skipped_updates", e.skipped_updates},
          {"clamped", e.clamped}};
}

int cmd_train(const Options& o) {
  const Grammar g = load_grammar_file(o.grammar);
  const TrainConfig cfg = config_from(o);
  const std::vector<Example> examples = load_examples(o, g);
  RecordSink sink(o.records);
  auto on_epoch = [&](const EpochRecord& e) {
    log(LogLevel::kInfo, "epoch " + std::to_string(e.epoch + 1) + "/" + std::to_string(cfg.epochs) + "  loss " +
                             fixed(e.mean_loss, 6) + "  lr " + fixed(e.learning_rate, 4) + "  " + fixed(e.seconds, 2) +
                             "s");
    sink.write(epoch_record(e));
  };
  TrainReport report;
  if (o.baseline) {
    BaselineModel model(g, build_source_vocabulary(examples), cfg.dims(), cfg.seed);
    report = train_baseline(model, g, examples, cfg, on_epoch);
    save_checkpoint(model, o.checkpoint);
  } else {
    CfgDecoderModel model(g, build_source_vocabulary(examples), cfg.dims(), cfg.seed);
    report = train(model, g, examples, cfg, on_epoch);
    save_checkpoint(model, o.checkpoint);
  }
  std::cout << table({"model", "pairs", "epochs", "final loss", "train time (s)"},
                     {{o.baseline ? "baseline" : "cfg-decoder", std::to_string(examples.size()),
                       std::to_string(report.epochs.size()), fixed(report.epochs.back().mean_loss, 6),
                       fixed(report.total_seconds, 2)}});
  sink.write({{"type", "train"},
              {"model", o.baseline ? "baseline" : "cfg-decoder"},
              {"pairs", examples.size()},
              {"final_loss", report.epochs.back().mean_loss},
              {"seconds", report.total_seconds},
              {"checkpoint", o.checkpoint}});
  log(LogLevel::kInfo, "checkpoint written to " + o.checkpoint);
  return 0;
}

void require_file(const std::string& path, const std::string& what) {
  std::ifstream in(path);
  if (!in) throw Error(what + " '" + path + "' not found (run `cfgdec train` first?)");
}

int cmd_generate(const Options& o) {
  const Grammar g = load_grammar_file(o.grammar);
  require_file(o.checkpoint, "checkpoint");
  const Tokens words = tokenize_source(o.sentence);
  if (words.empty()) throw Error("empty --sentence");
  Tokens out;
  if (checkpoint_kind(o.checkpoint) == ModelKind::kBaseline) {
    BaselineModel model = load_baseline_checkpoint(o.checkpoint, g);
    out = generate_unconstrained(model, g, model.vocab().sentence_ids(words), o.max_len);
  } else {
    CfgDecoderModel model = load_cfg_checkpoint(o.checkpoint, g);
    GenerationTrace trace;
    out = generate(model, g, words, ContextSize::parse(o.ctx_size), kDefaultStepBudget, &trace);
    log(LogLevel::kDebug, std::to_string(trace.steps.size()) + " expansions");
  }
  std::cout << join_tokens(out) << '\n';
  return 0;
}

int cmd_evaluate(const Options& o) {
  const Grammar g = load_grammar_file(o.grammar);
  require_file(o.checkpoint, "checkpoint");
  const std::vector<Example> examples = load_examples(o, g);
  SyntaxValidator valid = o.validator.empty() ? grammar_validator(g) : shell_validator(o.validator);
  Metrics m;
  std::string name;
  if (checkpoint_kind(o.checkpoint) == ModelKind::kBaseline) {
    name = "baseline";
    m = evaluate_baseline(load_baseline_checkpoint(o.checkpoint, g), g, examples, o.max_len, valid);
  } else {
    name = "cfg-decoder";
    m = evaluate(load_cfg_checkpoint(o.checkpoint, g), g, examples, ContextSize::parse(o.ctx_size), valid);
  }
  std::cout << table({"model", "total", "correct", "accuracy (%)", "syntax errors", "syn. error (%)"},
                     {{name, std::to_string(m.total), std::to_string(m.correct), fixed(100 * m.accuracy(), 2),
                       std::to_string(m.syntax_errors), fixed(100 * m.syn_error_rate(), 2)}});
  RecordSink sink(o.records);
  sink.write({{"type", "evaluate"},
              {"model", name},
              {"total", m.total},
              {"correct", m.correct},
              {"syntax_errors", m.syntax_errors},
              {"accuracy", m.accuracy()},
              {"syn_error_rate", m.syn_error_rate()}});
  return 0;
}

int cmd_parse(const Options& o) {
  const Grammar g = load_grammar_file(o.grammar);
  ParseResult result = parse(g, split_tokens(o.query));
  if (result.ambiguous) std::cerr << "warning: query is ambiguous; showing the canonical tree\n";
  std::cout << render_tree(g, result.tree);
  return 0;
}

int cmd_synthesize(const Options& o) {
  const Grammar g = load_grammar_file(o.grammar);
  const Templates t = load_templates_file(o.templates);
  std::vector<Example> examples = o.exhaustive ? synthesize_exhaustive(g, t, o.seed) : synthesize(g, t, o.n, o.seed);
  const std::string text = write_corpus(examples);
  if (o.out.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(o.out);
    if (!out) throw Error("cannot write '" + o.out + "'");
    out << text;
    log(LogLevel::kInfo, std::to_string(examples.size()) + " pairs written to " + o.out);
  }
  return 0;
}

std::vector<ContextSize> parse_ctx_list(const std::string& text) {
  std::vector<ContextSize> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(ContextSize::parse(item));
  if (out.empty()) throw Error("empty --ctx-sizes");
  return out;
}

int cmd_crossval(const Options& o) {
  const Grammar g = load_grammar_file(o.grammar);
  TrainConfig cfg = config_from(o);
  const std::vector<Example> examples = load_examples(o, g);
  RecordSink sink(o.records);
  std::vector<std::vector<std::string>> rows;
  for (ContextSize ctx : parse_ctx_list(o.ctx_sizes)) {
    cfg.ctx = ctx;
    CrossValReport report = cross_validate(g, examples, cfg, [&](const FoldResult& f) {
      log(LogLevel::kInfo, "ctx " + ctx.str() + " fold " + std::to_string(f.fold + 1) + "/" +
                               std::to_string(cfg.folds) + "  accuracy " + fixed(100 * f.metrics.accuracy(), 2) +
                               "%  " + fixed(f.train_seconds, 1) + "s");
      sink.write({{"type", "fold"},
                  {"ctx", ctx.str()},
                  {"fold", f.fold},
                  {"train_size", f.train_size},
                  {"test_size", f.test_size},
                  {"accuracy", f.metrics.accuracy()},
                  {"syn_error_rate", f.metrics.syn_error_rate()},
                  {"train_seconds", f.train_seconds},
                  {"final_loss", f.final_loss}});
    });
    rows.push_back({ctx.str(), fixed(100 * report.mean_accuracy, 2), fixed(100 * report.mean_syn_error_rate, 2),
                    fixed(report.train_seconds, 1)});
    sink.write({{"type", "crossval"},
                {"ctx", ctx.str()},
                {"mean_accuracy", report.mean_accuracy},
                {"mean_syn_error_rate", report.mean_syn_error_rate},
                {"train_seconds", report.train_seconds}});
  }
  std::cout << table({"context size", "accuracy (%)", "syn. error (%)", "train time (s)"}, rows);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Grammar-constrained encoder-decoder for sentence-to-query translation"};
  app.require_subcommand(1);
  Options o;

  auto add_model_flags = [&](CLI::App* sub) {
    sub->add_option("--hidden", o.hidden, "LSTM hidden size")->check(CLI::PositiveNumber);
    sub->add_option("--embed", o.embed, "embedding size")->check(CLI::PositiveNumber);
    sub->add_option("--epochs", o.epochs, "training epochs")->check(CLI::PositiveNumber);
    sub->add_option("--seed", o.seed, "random seed");
    sub->add_option("--init-scale", o.init_scale, "uniform initialization half-width")->check(CLI::PositiveNumber);
  };

  auto* train = app.add_subcommand("train", "train a model and write a checkpoint");
  train->add_option("--grammar", o.grammar, "grammar file")->required();
  train->add_option("--corpus", o.corpus, "TSV corpus")->required();
  train->add_option("--checkpoint", o.checkpoint, "output checkpoint")->required();
  train->add_option("--ctx-size", o.ctx_size, "context window: N or inf");
  train->add_flag("--baseline", o.baseline, "train the unconstrained baseline");
  train->add_flag("--allow-skip", o.allow_skip, "skip targets the grammar rejects");
  train->add_option("--records", o.records, "JSON-lines records file");
  add_model_flags(train);

  auto* gen = app.add_subcommand("generate", "translate one sentence");
  gen->add_option("--grammar", o.grammar, "grammar file")->required();
  gen->add_option("--checkpoint", o.checkpoint, "checkpoint")->required();
  gen->add_option("--sentence", o.sentence, "input sentence")->required();
  gen->add_option("--ctx-size", o.ctx_size, "context window: N or inf");
  gen->add_option("--max-len", o.max_len, "baseline output bound");

  auto* eval = app.add_subcommand("evaluate", "accuracy and syntax-error rate on a corpus");
  eval->add_option("--grammar", o.grammar, "grammar file")->required();
  eval->add_option("--checkpoint", o.checkpoint, "checkpoint")->required();
  eval->add_option("--corpus", o.corpus, "TSV corpus")->required();
  eval->add_option("--ctx-size", o.ctx_size, "context window: N or inf");
  eval->add_option("--max-len", o.max_len, "baseline output bound");
  eval->add_option("--validator", o.validator, "shell command judging validity (query on stdin)");
  eval->add_flag("--allow-skip", o.allow_skip, "skip targets the grammar rejects");
  eval->add_option("--records", o.records, "JSON-lines records file");

  auto* parse_cmd = app.add_subcommand("parse", "parse a query and print its tree");
  parse_cmd->add_option("--grammar", o.grammar, "grammar file")->required();
  parse_cmd->add_option("--query", o.query, "query text")->required();

  auto* synth = app.add_subcommand("synthesize", "generate a corpus from a grammar and templates");
  synth->add_option("--grammar", o.grammar, "grammar file")->required();
  synth->add_option("--templates", o.templates, "template file")->required();
  synth->add_option("--n", o.n, "number of sampled pairs");
  synth->add_flag("--exhaustive", o.exhaustive, "one pair per sentence of the language");
  synth->add_option("--seed", o.seed, "random seed");
  synth->add_option("--out", o.out, "output corpus (default stdout)");

  auto* cv = app.add_subcommand("crossval", "k-fold cross-validation over context sizes");
  cv->add_option("--grammar", o.grammar, "grammar file")->required();
  cv->add_option("--corpus", o.corpus, "TSV corpus")->required();
  cv->add_option("--ctx-sizes", o.ctx_sizes, "comma-separated context sizes");
  cv->add_option("--folds", o.folds, "number of folds")->check(CLI::Range(2, 1000));
  cv->add_flag("--allow-skip", o.allow_skip, "skip targets the grammar rejects");
  cv->add_option("--records", o.records, "JSON-lines records file");
  add_model_flags(cv);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) return cmd_train(o);
    if (*gen) return cmd_generate(o);
    if (*eval) return cmd_evaluate(o);
    if (*parse_cmd) return cmd_parse(o);
    if (*synth) return cmd_synthesize(o);
    if (*cv) return cmd_crossval(o);
  } catch (const GrammarError& e) {
    std::cerr << "error: grammar: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
