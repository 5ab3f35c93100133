#include "covnmt/attention.hpp"

#include <algorithm>

namespace covnmt {

template <typename T>
Tensor<T> attention_keys(Tape<T>& tape, const ModelParams<T>& params, const EncodedSource<T>& enc) {
  return tape.matmul(enc.states, params.att.w_h);
}

template <typename T>
AttentionRecord<T> attend(Tape<T>& tape, const ModelParams<T>& params, const DecoderState<T>& s_prev,
                          const EncodedSource<T>& enc, const Tensor<T>& y_prev_emb,
                          std::span<const CoverageState<T>> coverage, const Tensor<T>& keys) {
  if (coverage.size() != coverage_state_count(params.mode))
    throw ConfigError("attend: mode " + std::string(to_string(params.mode)) + " expects " +
                      std::to_string(coverage_state_count(params.mode)) + " coverage states, got " +
                      std::to_string(coverage.size()));
  const auto& att = params.att;
  const auto query = tape.add(tape.matmul(s_prev.s, att.w_s), tape.matmul(y_prev_emb, att.w_y));
  auto hidden = tape.add_row(keys.defined() ? keys : attention_keys(tape, params, enc), query);
  for (const auto& cov : coverage) {
    const auto& proj = cov.rule == CoverageRule::gru ? att.w_cov_gru : att.w_cov_sub;
    if (!proj.defined()) throw ConfigError("attend: coverage state without a matching projection");
    hidden = tape.add(hidden, tape.matmul(cov.matrix, proj));
  }
  AttentionRecord<T> rec;
  rec.pre_activation = tape.tanh(hidden);
  rec.logits = tape.transpose(tape.matmul(rec.pre_activation, att.w_e));
  rec.probs = tape.masked_softmax(rec.logits, enc.mask);
  return rec;
}

template <typename T>
Tensor<T> context(Tape<T>& tape, const Tensor<T>& probs, const EncodedSource<T>& enc) {
  if (probs.rows() != 1 || probs.cols() != enc.states.rows())
    throw DimensionError("context: attention " + probs.shape().str() + " over states " +
                         enc.states.shape().str());
  return tape.matmul(probs, enc.states);
}

template <typename T>
DecoderState<T> decode_step(Tape<T>& tape, const ModelParams<T>& params, const DecoderState<T>& s_prev,
                            const Tensor<T>& y_prev_emb, const Tensor<T>& context_vec) {
  return {gru_cell(tape, params.dec, tape.concat_cols(y_prev_emb, context_vec), s_prev.s)};
}

template <typename T>
Tensor<T> predict(Tape<T>& tape, const ModelParams<T>& params, const DecoderState<T>& s_t,
                  const Tensor<T>& y_prev_emb) {
  const auto& out = params.out;
  const auto o = tape.tanh(tape.add(tape.matmul(s_t.s, out.w_o), tape.matmul(y_prev_emb, out.w_oy)));
  return tape.masked_softmax(tape.matmul(o, out.w_v));
}

template <typename T>
DecoderState<T> initial_state(Tape<T>& tape, const ModelParams<T>& params, const EncodedSource<T>& enc) {
  const auto first = std::find_if(enc.mask.begin(), enc.mask.end(), [](auto m) { return m != 0; });
  if (first == enc.mask.end()) throw InvalidMaskError("initial_state: source has no real tokens");
  const auto row = tape.slice_row(enc.states, static_cast<std::size_t>(first - enc.mask.begin()));
  const auto backward_state = tape.slice_cols(row, 0, enc.hidden());
  return {tape.tanh(tape.matmul(backward_state, params.dec_init))};
}

#define COVNMT_INSTANTIATE(T)                                                                                \
  template Tensor<T> attention_keys(Tape<T>&, const ModelParams<T>&, const EncodedSource<T>&);               \
  template AttentionRecord<T> attend(Tape<T>&, const ModelParams<T>&, const DecoderState<T>&,                \
                                     const EncodedSource<T>&, const Tensor<T>&,                              \
                                     std::span<const CoverageState<T>>, const Tensor<T>&);                   \
  template Tensor<T> context(Tape<T>&, const Tensor<T>&, const EncodedSource<T>&);                           \
  template DecoderState<T> decode_step(Tape<T>&, const ModelParams<T>&, const DecoderState<T>&,              \
                                       const Tensor<T>&, const Tensor<T>&);                                  \
  template Tensor<T> predict(Tape<T>&, const ModelParams<T>&, const DecoderState<T>&, const Tensor<T>&);     \
  template DecoderState<T> initial_state(Tape<T>&, const ModelParams<T>&, const EncodedSource<T>&);

COVNMT_INSTANTIATE(float)
COVNMT_INSTANTIATE(double)

#undef COVNMT_INSTANTIATE

}  // namespace covnmt
