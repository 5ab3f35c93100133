#include "covnmt/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "covnmt/errors.hpp"

namespace covnmt {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad(std::string_view key, std::string_view value, std::string_view want) {
  throw ConfigError(std::string(key) + ": expected " + std::string(want) + ", got '" + std::string(value) + "'");
}

std::uint64_t to_u64(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || r.ec != std::errc() || r.ptr != v.data() + v.size()) bad(key, v, "a nonnegative integer");
  return out;
}

std::size_t to_count(std::string_view key, std::string_view v) {
  const auto n = to_u64(key, v);
  if (n == 0) bad(key, v, "a positive integer");
  return static_cast<std::size_t>(n);
}

double to_lambda(std::string_view key, std::string_view v) {
  double out = 0;
  try {
    std::size_t used = 0;
    out = std::stod(std::string(v), &used);
    if (used != v.size()) bad(key, v, "a nonnegative number");
  } catch (const std::logic_error&) {
    bad(key, v, "a nonnegative number");
  }
  if (!(out >= 0.0) || !std::isfinite(out)) bad(key, v, "a nonnegative number");
  return out;
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  bad(key, v, "true|false");
}

void require_file(const std::filesystem::path& path, std::string_view key) {
  if (path.empty()) throw ConfigError(std::string(key) + ": required");
  if (!std::filesystem::is_regular_file(path))
    throw ConfigError(std::string(key) + ": no such file '" + path.string() + "'");
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "mode",        "objective",      "lambda_gru",     "lambda_sub",     "d_c",
      "d_h",         "d_emb",          "d_att",          "beam",           "batch",
      "epochs",      "seed",           "max_len",        "src_vocab_size", "tgt_vocab_size",
      "precision",   "replace_unk",    "length_normalize", "train_src",    "train_tgt",
      "train_align", "dev_src",        "dev_tgt",        "dev_align",      "out",
      "model",       "checkpoint",     "input",          "output",         "attention_dump",
      "coverage_dump", "alignment_out", "reference"};
  return keys;
}

std::string normalize_key(std::string_view key) {
  std::string out(key);
  for (auto& c : out)
    if (c == '-') c = '_';
  return out;
}

void set_config_value(RunConfig& c, std::string_view raw_key, std::string_view value) {
  const std::string key = normalize_key(raw_key);
  const std::string v(value);
  if (key == "mode") c.mode = parse_coverage_mode(v);
  else if (key == "objective") {
    if (v == "mix") c.objective = ObjectiveKind::mix;
    else if (v == "aligned") c.objective = ObjectiveKind::aligned;
    else bad(key, v, "mix|aligned");
  }
  else if (key == "lambda_gru") c.lambda_gru = to_lambda(key, v);
  else if (key == "lambda_sub") c.lambda_sub = to_lambda(key, v);
  else if (key == "d_c") c.d_c = to_count(key, v);
  else if (key == "d_h") c.d_h = to_count(key, v);
  else if (key == "d_emb") c.d_emb = to_count(key, v);
  else if (key == "d_att") c.d_att = to_count(key, v);
  else if (key == "beam") c.beam = to_count(key, v);
  else if (key == "batch") c.batch = to_count(key, v);
  else if (key == "epochs") c.epochs = to_count(key, v);
  else if (key == "seed") c.seed = to_u64(key, v);
  else if (key == "max_len") c.max_len = to_count(key, v);
  else if (key == "src_vocab_size") c.src_vocab_size = to_count(key, v);
  else if (key == "tgt_vocab_size") c.tgt_vocab_size = to_count(key, v);
  else if (key == "precision") {
    if (v == "standard") c.precision = Precision::standard;
    else if (v == "wide") c.precision = Precision::wide;
    else bad(key, v, "standard|wide");
  }
  else if (key == "replace_unk") c.replace_unk = to_bool(key, v);
  else if (key == "length_normalize") c.length_normalize = to_bool(key, v);
  else if (key == "train_src") c.train_src = v;
  else if (key == "train_tgt") c.train_tgt = v;
  else if (key == "train_align") c.train_align = v;
  else if (key == "dev_src") c.dev_src = v;
  else if (key == "dev_tgt") c.dev_tgt = v;
  else if (key == "dev_align") c.dev_align = v;
  else if (key == "out") c.out = v;
  else if (key == "model") c.model = v;
  else if (key == "checkpoint") c.checkpoint = v;
  else if (key == "input") c.input = v;
  else if (key == "output") c.output = v;
  else if (key == "attention_dump") c.attention_dump = v;
  else if (key == "coverage_dump") c.coverage_dump = v;
  else if (key == "alignment_out") c.alignment_out = v;
  else if (key == "reference") c.reference = v;
  else throw ConfigError("unknown config key '" + std::string(raw_key) + "'");
  c.explicit_keys.insert(key);
}

void apply_config_text(RunConfig& config, std::string_view text, std::string_view origin) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw ConfigError(std::string(origin) + " line " + std::to_string(n) + ": expected 'key = value'");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    if (key.empty()) throw ConfigError(std::string(origin) + " line " + std::to_string(n) + ": missing key");
    set_config_value(config, key, trim(std::string_view(body).substr(eq + 1)));
  }
}

void apply_config_file(RunConfig& config, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: no such file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  apply_config_text(config, ss.str(), path.string());
}

ObjectiveConfig RunConfig::objective_config() const {
  ObjectiveConfig o;
  o.kind = objective;
  o.lambdas.gru = uses_gru(mode) ? lambda_gru : 0.0;
  o.lambdas.sub = uses_sub(mode) ? lambda_sub : 0.0;
  return o;
}

ModelDims RunConfig::dims(std::size_t src_vocab, std::size_t tgt_vocab) const {
  ModelDims d;
  d.src_vocab = src_vocab;
  d.tgt_vocab = tgt_vocab;
  d.embed = d_emb;
  d.hidden = d_h;
  d.attention = d_att ? d_att : d_h;
  d.coverage = d_c;
  return d;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig t;
  t.objective = objective_config();
  t.batch = batch;
  t.epochs = epochs;
  t.seed = seed;
  return t;
}

void validate_for_train(const RunConfig& c) {
  require_file(c.train_src, "train_src");
  require_file(c.train_tgt, "train_tgt");
  if (c.objective == ObjectiveKind::aligned) {
    if (c.train_align.empty()) throw ConfigError("train_align: required when objective = aligned");
    require_file(c.train_align, "train_align");
  } else if (!c.train_align.empty()) {
    require_file(c.train_align, "train_align");
  }
  if (c.dev_src.empty() != c.dev_tgt.empty()) throw ConfigError("dev_src/dev_tgt: give both or neither");
  if (!c.dev_src.empty()) {
    require_file(c.dev_src, "dev_src");
    require_file(c.dev_tgt, "dev_tgt");
    if (c.objective == ObjectiveKind::aligned) {
      if (c.dev_align.empty()) throw ConfigError("dev_align: required when objective = aligned");
      require_file(c.dev_align, "dev_align");
    }
  }
  if (c.out.empty()) throw ConfigError("out: required");
  if (c.src_vocab_size < kReservedTokens) throw ConfigError("src_vocab_size: must be at least 4");
  if (c.tgt_vocab_size < kReservedTokens) throw ConfigError("tgt_vocab_size: must be at least 4");
}

void validate_for_translate(const RunConfig& c) {
  if (c.model.empty()) throw ConfigError("model: required");
  if (!std::filesystem::is_directory(c.model))
    throw ConfigError("model: no such directory '" + c.model.string() + "'");
  if (!c.checkpoint.empty()) require_file(c.checkpoint, "checkpoint");
  require_file(c.input, "input");
  if (c.output.empty()) throw ConfigError("output: required");
  if (!c.reference.empty()) require_file(c.reference, "reference");
}

}  // namespace covnmt
