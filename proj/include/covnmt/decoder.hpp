#pragma once

#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "covnmt/attention.hpp"
#include "covnmt/coverage.hpp"
#include "covnmt/encoder.hpp"
#include "covnmt/params.hpp"
#include "covnmt/search.hpp"
#include "covnmt/vocab.hpp"

namespace covnmt {

// Coverage row norms after each update: [t][state][j], t = 0..m.
using CoverageTrace = std::vector<std::vector<std::vector<double>>>;

// Drives the attention decoder for one source sentence. Each search state
// owns its coverage matrices.
template <typename T>
class NmtScorer {
 public:
  struct State {
    DecoderState<T> s;
    CoverageStates<T> coverage;
    Tensor<T> y_prev_emb;
    CoverageTrace trace;
  };
  struct Step {
    std::vector<double> log_probs;
    std::vector<double> attention;
    DecoderState<T> s;
    Tensor<T> alpha;
  };

  NmtScorer(const ModelParams<T>& params, std::span<const TokenId> source_ids);
  NmtScorer(const NmtScorer&) = delete;
  NmtScorer& operator=(const NmtScorer&) = delete;

  State initial() const;
  Step score(const State& state) const;
  State advance(const State& state, const Step& step, TokenId token) const;

  std::size_t source_length() const { return source_.size(); }

 private:
  const ModelParams<T>& params_;
  std::vector<TokenId> source_;
  mutable Tape<T> tape_{Tape<T>::Recording::disabled};
  EncodedSource<T> enc_;
  Tensor<T> keys_;
};

struct TranslationResult {
  std::vector<TokenId> tokens;                 // EOS excluded
  double log_prob = 0;
  bool finished = false;                       // false when cut off at max_len
  std::vector<std::vector<double>> attention;  // tokens.size() rows of source length
  std::vector<std::vector<double>> final_coverage_l1;  // [state][j]
  CoverageTrace coverage_trace;
};

template <typename T>
TranslationResult beam_decode(const ModelParams<T>& params, std::span<const TokenId> source_ids,
                              const SearchOptions& options);

template <typename T>
TranslationResult greedy_decode(const ModelParams<T>& params, std::span<const TokenId> source_ids,
                                std::size_t max_len);

// Teacher-forced pass over a known target; attention rows cover the target
// tokens (the EOS step is dropped).
template <typename T>
TranslationResult force_decode(const ModelParams<T>& params, std::span<const TokenId> source_ids,
                               std::span<const TokenId> target_ids);

// Replaces each UNK output with the source token under the step's attention
// argmax (lowest position on ties).
std::vector<std::string> replace_unk(const TranslationResult& result, const Vocabulary& target_vocab,
                                     std::span<const std::string> source_tokens);

// "sent <id> <l> <m>" then m lines of l probabilities with 6 decimals.
void write_attention_dump(std::ostream& out, std::size_t sentence_id, std::size_t source_len,
                          const TranslationResult& result);

// One line per (t, j): "<sent>\t<t>\t<j>\t<l1 of state 0>[\t<l1 of state 1>]".
void write_coverage_dump(std::ostream& out, std::size_t sentence_id, const TranslationResult& result);

extern template class NmtScorer<float>;
extern template class NmtScorer<double>;

}  // namespace covnmt
