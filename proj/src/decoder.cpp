#include "covnmt/decoder.hpp"

#include <cmath>
#include <cstdio>

#include "covnmt/embedding.hpp"
#include "covnmt/objective.hpp"

namespace covnmt {

namespace {

template <typename T>
std::vector<std::vector<double>> coverage_norms(const CoverageStates<T>& states) {
  std::vector<std::vector<double>> out;
  out.reserve(states.size());
  for (const auto& s : states) out.push_back(row_l1(s));
  return out;
}

template <typename T>
std::vector<double> to_doubles(const Tensor<T>& t) {
  return {t.values().begin(), t.values().end()};
}

template <typename State>
TranslationResult to_result(const Hypothesis<State>& h) {
  TranslationResult r;
  r.tokens = h.tokens;
  r.log_prob = h.log_prob;
  r.finished = h.finished;
  r.attention = h.attention;
  r.coverage_trace = h.state.trace;
  if (!r.coverage_trace.empty()) r.final_coverage_l1 = r.coverage_trace.back();
  return r;
}

}  // namespace

template <typename T>
NmtScorer<T>::NmtScorer(const ModelParams<T>& params, std::span<const TokenId> source_ids)
    : params_(params), source_(source_ids.begin(), source_ids.end()) {
  for (TokenId id : source_)
    if (id >= params.dims.src_vocab)
      throw DataError("source id " + std::to_string(id) + " outside the source vocabulary");
  enc_ = encode(tape_, params_, source_);
  keys_ = attention_keys(tape_, params_, enc_);
}

template <typename T>
typename NmtScorer<T>::State NmtScorer<T>::initial() const {
  State st;
  st.s = initial_state(tape_, params_, enc_);
  st.coverage = init_coverage_states(tape_, params_, source_);
  st.y_prev_emb = lookup(tape_, params_.tgt_embed, kBos);
  st.trace.push_back(coverage_norms(st.coverage));
  return st;
}

template <typename T>
typename NmtScorer<T>::Step NmtScorer<T>::score(const State& state) const {
  const auto rec = attend(tape_, params_, state.s, enc_, state.y_prev_emb,
                          std::span<const CoverageState<T>>(state.coverage), keys_);
  const auto ctx = context(tape_, rec.probs, enc_);
  Step step;
  step.s = decode_step(tape_, params_, state.s, state.y_prev_emb, ctx);
  const auto probs = predict(tape_, params_, step.s, state.y_prev_emb);
  step.log_probs.reserve(probs.size());
  for (T p : probs.values()) step.log_probs.push_back(std::log(static_cast<double>(p)));
  step.attention = to_doubles(rec.probs);
  step.alpha = rec.probs;
  return step;
}

template <typename T>
typename NmtScorer<T>::State NmtScorer<T>::advance(const State& state, const Step& step, TokenId token) const {
  State next;
  next.s = step.s;
  next.y_prev_emb = lookup(tape_, params_.tgt_embed, token);
  next.coverage = step_all(tape_, params_, state.coverage, next.y_prev_emb, step.alpha);
  next.trace = state.trace;
  next.trace.push_back(coverage_norms(next.coverage));
  return next;
}

template <typename T>
TranslationResult beam_decode(const ModelParams<T>& params, std::span<const TokenId> source_ids,
                              const SearchOptions& options) {
  NmtScorer<T> scorer(params, source_ids);
  return to_result(beam_search(scorer, options));
}

template <typename T>
TranslationResult greedy_decode(const ModelParams<T>& params, std::span<const TokenId> source_ids,
                                std::size_t max_len) {
  NmtScorer<T> scorer(params, source_ids);
  return to_result(greedy_search(scorer, max_len));
}

template <typename T>
TranslationResult force_decode(const ModelParams<T>& params, std::span<const TokenId> source_ids,
                               std::span<const TokenId> target_ids) {
  Tape<T> tape(Tape<T>::Recording::disabled);
  TrainingExample ex;
  ex.source.assign(source_ids.begin(), source_ids.end());
  ex.target.assign(target_ids.begin(), target_ids.end());
  ObjectiveConfig config;
  config.lambdas = {0.0, 0.0};
  const auto run = run_sentence(tape, params, ex, config);

  TranslationResult r;
  r.tokens = ex.target;
  r.log_prob = -static_cast<double>(run.nll.item());
  r.finished = true;
  for (std::size_t t = 0; t < ex.target.size(); ++t) r.attention.push_back(to_doubles(run.attention[t]));
  for (const auto& states : run.coverage) r.coverage_trace.push_back(coverage_norms(states));
  r.final_coverage_l1 = r.coverage_trace.back();
  return r;
}

std::vector<std::string> replace_unk(const TranslationResult& result, const Vocabulary& target_vocab,
                                     std::span<const std::string> source_tokens) {
  std::vector<std::string> out;
  out.reserve(result.tokens.size());
  for (std::size_t t = 0; t < result.tokens.size(); ++t) {
    const TokenId id = result.tokens[t];
    if (id != kUnk || t >= result.attention.size() || result.attention[t].empty()) {
      out.push_back(target_vocab.token(id));
      continue;
    }
    const auto& row = result.attention[t];
    std::size_t best = 0;
    for (std::size_t j = 1; j < row.size(); ++j)
      if (row[j] > row[best]) best = j;
    out.push_back(best < source_tokens.size() ? source_tokens[best] : target_vocab.token(id));
  }
  return out;
}

void write_attention_dump(std::ostream& out, std::size_t sentence_id, std::size_t source_len,
                          const TranslationResult& result) {
  out << "sent " << sentence_id << ' ' << source_len << ' ' << result.attention.size() << '\n';
  char buf[32];
  for (const auto& row : result.attention) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      std::snprintf(buf, sizeof buf, "%.6f", row[j]);
      if (j) out << ' ';
      out << buf;
    }
    out << '\n';
  }
}

void write_coverage_dump(std::ostream& out, std::size_t sentence_id, const TranslationResult& result) {
  char buf[32];
  for (std::size_t t = 0; t < result.coverage_trace.size(); ++t) {
    const auto& states = result.coverage_trace[t];
    if (states.empty()) continue;
    for (std::size_t j = 0; j < states.front().size(); ++j) {
      out << sentence_id << '\t' << t << '\t' << j;
      for (const auto& norms : states) {
        std::snprintf(buf, sizeof buf, "%.6f", norms[j]);
        out << '\t' << buf;
      }
      out << '\n';
    }
  }
}

template class NmtScorer<float>;
template class NmtScorer<double>;

#define COVNMT_INSTANTIATE(T)                                                                             \
  template TranslationResult beam_decode(const ModelParams<T>&, std::span<const TokenId>,                 \
                                         const SearchOptions&);                                           \
  template TranslationResult greedy_decode(const ModelParams<T>&, std::span<const TokenId>, std::size_t); \
  template TranslationResult force_decode(const ModelParams<T>&, std::span<const TokenId>,                \
                                          std::span<const TokenId>);

COVNMT_INSTANTIATE(float)
COVNMT_INSTANTIATE(double)

#undef COVNMT_INSTANTIATE

}  // namespace covnmt
