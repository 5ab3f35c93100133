#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "covnmt/objective.hpp"
#include "covnmt/params.hpp"
#include "covnmt/trainer.hpp"

namespace covnmt {

enum class Precision { standard, wide };

struct RunConfig {
  CoverageMode mode = CoverageMode::base;
  ObjectiveKind objective = ObjectiveKind::mix;
  double lambda_gru = 1e-4;
  double lambda_sub = 1e-2;
  std::size_t d_c = 100;
  std::size_t d_h = 64;
  std::size_t d_emb = 32;
  std::size_t d_att = 0;  // 0: same as d_h
  std::size_t beam = 5;
  std::size_t batch = 80;
  std::size_t epochs = 10;
  std::uint64_t seed = 1;
  std::size_t max_len = 80;  // longest training sentence kept, and the decoding length cap
  std::size_t src_vocab_size = 30000;
  std::size_t tgt_vocab_size = 30000;
  Precision precision = Precision::standard;
  bool replace_unk = false;
  bool length_normalize = false;

  std::filesystem::path train_src, train_tgt, train_align;
  std::filesystem::path dev_src, dev_tgt, dev_align;
  std::filesystem::path out;         // train: output directory
  std::filesystem::path model;       // translate: directory written by train
  std::filesystem::path checkpoint;  // translate: overrides <model>/model.bin
  std::filesystem::path input, output;
  std::filesystem::path attention_dump, coverage_dump, alignment_out;
  std::filesystem::path reference;  // translate: force-decode these targets instead of searching

  // Keys given explicitly by a file or a flag.
  std::set<std::string> explicit_keys;

  bool given(std::string_view key) const { return explicit_keys.count(std::string(key)) != 0; }

  ObjectiveConfig objective_config() const;
  ModelDims dims(std::size_t src_vocab, std::size_t tgt_vocab) const;
  TrainConfig train_config() const;
};

// Every recognised key, underscore spelling. Flags use dashes.
const std::vector<std::string>& config_keys();

std::string normalize_key(std::string_view key);

// Throws ConfigError naming the key on unknown keys or unparsable values.
void set_config_value(RunConfig& config, std::string_view key, std::string_view value);

// "key = value" lines; '#' starts a comment.
void apply_config_text(RunConfig& config, std::string_view text, std::string_view origin = "config");
void apply_config_file(RunConfig& config, const std::filesystem::path& path);

// Startup checks. Missing files name the config field.
void validate_for_train(const RunConfig& config);
void validate_for_translate(const RunConfig& config);

}  // namespace covnmt
