#include "commands.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>

#include "covnmt/checkpoint.hpp"
#include "covnmt/config.hpp"
#include "covnmt/corpus.hpp"
#include "covnmt/decoder.hpp"
#include "covnmt/errors.hpp"
#include "covnmt/evaluation.hpp"
#include "covnmt/synthetic.hpp"
#include "covnmt/trainer.hpp"

namespace covnmt::cli {

namespace fs = std::filesystem;

namespace {

const char* const kBoolKeys[] = {"replace_unk", "length_normalize"};

bool is_bool_key(const std::string& key) {
  for (const char* k : kBoolKeys)
    if (key == k) return true;
  return false;
}

std::string dashed(std::string key) {
  for (auto& c : key)
    if (c == '_') c = '-';
  return key;
}

// Registers --config plus one flag per RunConfig key. Values are applied
// after the file, so flags win.
struct ConfigFlags {
  std::string config_path;
  std::map<std::string, std::string> values;
  std::map<std::string, bool> switches;
  std::map<std::string, CLI::Option*> options;

  void attach(CLI::App& app) {
    app.add_option("--config", config_path, "key = value configuration file");
    for (const auto& key : config_keys()) {
      if (is_bool_key(key)) {
        switches[key] = false;
        options[key] = app.add_flag("--" + dashed(key), switches[key]);
      } else {
        options[key] = app.add_option("--" + dashed(key), values[key]);
      }
    }
  }

  RunConfig resolve() const {
    RunConfig c;
    if (!config_path.empty()) apply_config_file(c, config_path);
    for (const auto& [key, opt] : options) {
      if (opt->count() == 0) continue;
      set_config_value(c, key, is_bool_key(key) ? "true" : values.at(key));
    }
    return c;
  }
};

std::ofstream open_out(const fs::path& path, std::string_view field) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError(std::string(field) + ": cannot write '" + path.string() + "'");
  return out;
}

std::string checkpoint_name(std::size_t epoch) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "checkpoint.%03zu.bin", epoch);
  return buf;
}

struct LoadedCorpus {
  std::vector<Sentence> source, target;
  std::optional<std::vector<Links>> links;
};

LoadedCorpus load_corpus(const fs::path& src, const fs::path& tgt, const fs::path& align) {
  LoadedCorpus c;
  c.source = read_sentences(src);
  c.target = read_sentences(tgt);
  check_parallel(c.source.size(), c.target.size(), src.string(), tgt.string());
  if (!align.empty()) {
    c.links = read_links(align);
    check_parallel(c.source.size(), c.links->size(), src.string(), align.string());
  }
  return c;
}

// Drops pairs with an empty side or a side longer than max_len.
std::size_t filter_corpus(LoadedCorpus& c, std::size_t max_len) {
  LoadedCorpus kept;
  if (c.links) kept.links.emplace();
  for (std::size_t k = 0; k < c.source.size(); ++k) {
    const bool ok = !c.source[k].empty() && !c.target[k].empty() && c.source[k].size() <= max_len &&
                    c.target[k].size() <= max_len;
    if (!ok) continue;
    kept.source.push_back(std::move(c.source[k]));
    kept.target.push_back(std::move(c.target[k]));
    if (c.links) kept.links->push_back(std::move((*c.links)[k]));
  }
  const std::size_t dropped = c.source.size() - kept.source.size();
  c = std::move(kept);
  return dropped;
}

template <typename T>
int train_with(const RunConfig& c, std::ostream& out, std::ostream& err) {
  auto train_corpus = load_corpus(c.train_src, c.train_tgt, c.train_align);
  if (const auto dropped = filter_corpus(train_corpus, c.max_len))
    err << "note: skipped " << dropped << " training pairs that are empty or longer than " << c.max_len << "\n";
  if (train_corpus.source.empty()) throw DataError("train_src: no usable sentence pairs");

  const auto src_vocab = Vocabulary::build(train_corpus.source, c.src_vocab_size);
  const auto tgt_vocab = Vocabulary::build(train_corpus.target, c.tgt_vocab_size);
  fs::create_directories(c.out);
  src_vocab.save(c.out / "src.vocab");
  tgt_vocab.save(c.out / "tgt.vocab");

  const auto train_set =
      make_examples(train_corpus.source, train_corpus.target, train_corpus.links, src_vocab, tgt_vocab);
  std::vector<TrainingExample> dev_set;
  if (!c.dev_src.empty()) {
    auto dev_corpus = load_corpus(c.dev_src, c.dev_tgt, c.dev_align);
    filter_corpus(dev_corpus, c.max_len);
    dev_set = make_examples(dev_corpus.source, dev_corpus.target, dev_corpus.links, src_vocab, tgt_vocab);
  }

  auto params = ModelParams<T>::init(c.dims(src_vocab.size(), tgt_vocab.size()), c.mode, c.seed);
  auto metrics = open_out(c.out / "metrics.tsv", "out");
  train(params, c.train_config(), std::span<const TrainingExample>(train_set),
        std::span<const TrainingExample>(dev_set), [&](const EpochMetrics& m) {
          save_checkpoint(c.out / checkpoint_name(m.epoch), params);
          metrics << format_metrics(m) << '\n' << std::flush;
          out << format_metrics(m) << '\n';
        });
  save_checkpoint(c.out / "model.bin", params);
  out << "wrote " << (c.out / "model.bin").string() << " (" << params.parameter_count() << " parameters, mode "
      << to_string(params.mode) << ")\n";
  return kOk;
}

int cmd_train(const RunConfig& c, std::ostream& out, std::ostream& err) {
  validate_for_train(c);
  return c.precision == Precision::wide ? train_with<double>(c, out, err) : train_with<float>(c, out, err);
}

template <typename T>
void check_against_checkpoint(const RunConfig& c, const ModelParams<T>& params) {
  auto mismatch = [](const std::string& key, const std::string& want, const std::string& have) {
    throw DataError(key + ": configuration asks for " + want + " but the checkpoint holds " + have);
  };
  if (c.given("mode") && c.mode != params.mode)
    mismatch("mode", std::string(to_string(c.mode)), std::string(to_string(params.mode)));
  if (c.given("d_h") && c.d_h != params.dims.hidden)
    mismatch("d_h", std::to_string(c.d_h), std::to_string(params.dims.hidden));
  if (c.given("d_emb") && c.d_emb != params.dims.embed)
    mismatch("d_emb", std::to_string(c.d_emb), std::to_string(params.dims.embed));
  if (c.given("d_c") && params.mode != CoverageMode::base && c.d_c != params.dims.coverage)
    mismatch("d_c", std::to_string(c.d_c), std::to_string(params.dims.coverage));
}

template <typename T>
int translate_with(const RunConfig& c, std::ostream& out) {
  const auto src_vocab = Vocabulary::load(c.model / "src.vocab");
  const auto tgt_vocab = Vocabulary::load(c.model / "tgt.vocab");
  const auto params = load_checkpoint<T>(c.checkpoint.empty() ? c.model / "model.bin" : c.checkpoint);
  check_against_checkpoint(c, params);
  if (src_vocab.size() != params.dims.src_vocab || tgt_vocab.size() != params.dims.tgt_vocab)
    throw DataError("model: vocabulary files do not match the checkpoint");

  const auto input = read_sentences(c.input);
  std::optional<std::vector<Sentence>> reference;
  if (!c.reference.empty()) {
    reference = read_sentences(c.reference);
    check_parallel(input.size(), reference->size(), c.input.string(), c.reference.string());
  }

  auto translations = open_out(c.output, "output");
  std::optional<std::ofstream> attention, coverage, alignment;
  if (!c.attention_dump.empty()) attention = open_out(c.attention_dump, "attention_dump");
  if (!c.coverage_dump.empty()) coverage = open_out(c.coverage_dump, "coverage_dump");
  if (!c.alignment_out.empty()) alignment = open_out(c.alignment_out, "alignment_out");

  const SearchOptions options{c.beam, c.max_len, c.length_normalize};
  for (std::size_t k = 0; k < input.size(); ++k) {
    const auto& source = input[k];
    if (source.empty()) {
      translations << '\n';
      if (alignment) *alignment << '\n';
      continue;
    }
    const auto ids = src_vocab.encode(source);
    const auto result = reference ? force_decode(params, ids, tgt_vocab.encode((*reference)[k]))
                                  : beam_decode(params, ids, options);
    const auto words = c.replace_unk ? replace_unk(result, tgt_vocab, source) : tgt_vocab.decode(result.tokens);
    translations << join(words) << '\n';
    if (attention) write_attention_dump(*attention, k, source.size(), result);
    if (coverage) write_coverage_dump(*coverage, k, result);
    if (alignment) *alignment << format_links(extract_alignment(result.attention)) << '\n';
  }
  out << "translated " << input.size() << " sentences\n";
  return kOk;
}

int cmd_translate(const RunConfig& c, std::ostream& out) {
  validate_for_translate(c);
  return c.precision == Precision::wide ? translate_with<double>(c, out) : translate_with<float>(c, out);
}

void print_metric(std::ostream& out, const char* name, double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", value);
  out << name << '\t' << buf << '\n';
}

std::vector<Sentence> read_required(const std::string& path, const char* field) {
  if (path.empty()) throw ConfigError(std::string(field) + ": required");
  if (!fs::is_regular_file(path)) throw ConfigError(std::string(field) + ": no such file '" + path + "'");
  return read_sentences(fs::path(path));
}

int cmd_eval(const std::string& kind, const std::string& hyp, const std::string& ref, std::size_t n,
             std::ostream& out) {
  if (kind == "repetition") {
    const auto lines = read_required(hyp, "hyp");
    std::size_t total = 0;
    for (const auto& s : lines) total += repetition_count(s, n);
    out << "repeated\t" << total << '\n' << "sentences\t" << lines.size() << '\n';
    print_metric(out, "mean", lines.empty() ? 0.0 : static_cast<double>(total) / static_cast<double>(lines.size()));
    return kOk;
  }
  const auto hyp_lines = read_required(hyp, "hyp");
  const auto ref_lines = read_required(ref, "ref");
  check_parallel(hyp_lines.size(), ref_lines.size(), hyp, ref);
  if (kind == "align-f1") {
    // Re-read as links so that malformed pairs report their line.
    const auto predicted = read_links(hyp);
    const auto gold = read_links(ref);
    AlignmentCounts counts;
    for (std::size_t k = 0; k < predicted.size(); ++k) counts.add(predicted[k], gold[k]);
    const auto s = counts.score();
    print_metric(out, "precision", s.precision);
    print_metric(out, "recall", s.recall);
    print_metric(out, "f1", s.f1);
  } else if (kind == "bleu") {
    print_metric(out, "bleu", bleu4(hyp_lines, ref_lines));
  } else if (kind == "accuracy") {
    print_metric(out, "accuracy", token_accuracy(hyp_lines, ref_lines));
  } else {
    throw ConfigError("kind: expected align-f1|repetition|bleu|accuracy, got '" + kind + "'");
  }
  return kOk;
}

struct GenFlags {
  std::string task = "copy";
  SyntheticOptions options;
  std::string prefix;
};

int cmd_gen(const GenFlags& g, std::ostream& out) {
  if (g.prefix.empty()) throw ConfigError("prefix: required");
  const auto corpus = generate_synthetic(parse_synthetic_task(g.task), g.options);
  const fs::path prefix(g.prefix);
  if (prefix.has_parent_path()) fs::create_directories(prefix.parent_path());
  write_sentences(fs::path(g.prefix + ".src"), corpus.source);
  write_sentences(fs::path(g.prefix + ".tgt"), corpus.target);
  write_links(fs::path(g.prefix + ".align"), corpus.links);
  out << "wrote " << corpus.source.size() << " pairs to " << g.prefix << ".{src,tgt,align}\n";
  return kOk;
}

}  // namespace

int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Attention NMT with coverage embeddings", "covnmt"};
  app.require_subcommand(1);

  ConfigFlags train_flags, translate_flags;
  auto* train_cmd = app.add_subcommand("train", "train a model and write checkpoints");
  train_flags.attach(*train_cmd);
  auto* translate_cmd = app.add_subcommand("translate", "decode an input file with a trained model");
  translate_flags.attach(*translate_cmd);

  std::string eval_kind, eval_hyp, eval_ref;
  std::size_t eval_n = 4;
  auto* eval_cmd = app.add_subcommand("eval", "score outputs: align-f1, repetition, bleu, accuracy");
  eval_cmd->add_option("kind", eval_kind, "align-f1 | repetition | bleu | accuracy")->required();
  eval_cmd->add_option("--hyp", eval_hyp, "hypothesis (or predicted alignment) file");
  eval_cmd->add_option("--ref", eval_ref, "reference (or gold alignment) file");
  eval_cmd->add_option("--n", eval_n, "n-gram length for repetition")->check(CLI::PositiveNumber);

  GenFlags gen;
  auto* gen_cmd = app.add_subcommand("gen", "write a synthetic parallel corpus with gold alignments");
  gen_cmd->add_option("--task", gen.task, "copy | reverse | fertility");
  gen_cmd->add_option("--size", gen.options.size, "sentence pairs");
  gen_cmd->add_option("--vocab", gen.options.vocab, "source vocabulary size");
  gen_cmd->add_option("--seed", gen.options.seed);
  gen_cmd->add_option("--min-len", gen.options.min_len);
  gen_cmd->add_option("--max-len", gen.options.max_len);
  gen_cmd->add_option("--prefix", gen.prefix, "writes <prefix>.src, <prefix>.tgt, <prefix>.align")->required();

  try {
    std::reverse(args.begin(), args.end());
    app.parse(std::move(args));
    if (train_cmd->parsed()) return cmd_train(train_flags.resolve(), out, err);
    if (translate_cmd->parsed()) return cmd_translate(translate_flags.resolve(), out);
    if (eval_cmd->parsed()) return cmd_eval(eval_kind, eval_hyp, eval_ref, eval_n, out);
    return cmd_gen(gen, out);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kNumericError;
  } catch (const Error& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const fs::filesystem_error& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  }
}

}  // namespace covnmt::cli
