#pragma once

#include <span>

#include "covnmt/coverage.hpp"
#include "covnmt/encoder.hpp"
#include "covnmt/params.hpp"
#include "covnmt/tape.hpp"

namespace covnmt {

template <typename T>
struct AttentionRecord {
  Tensor<T> pre_activation;  // l x d_a hidden layer A_{t,j}
  Tensor<T> logits;          // 1 x l scores e_{t,j}
  Tensor<T> probs;           // 1 x l attention alpha_{t,j}
};

template <typename T>
struct DecoderState {
  Tensor<T> s;  // 1 x d_h
};

// h_j W_h for every source row. Step-invariant, so computed once per sentence.
template <typename T>
Tensor<T> attention_keys(Tape<T>& tape, const ModelParams<T>& params, const EncodedSource<T>& enc);

// A_{t,j} = tanh(s_{t-1} W_s + h_j W_h + emb(y_{t-1}) W_y + sum_k c^k_{t-1,x_j} W_c^k)
// e_{t,j} = A_{t,j} w_e, alpha_t = masked_softmax(e_t).
// keys may be left undefined, in which case they are computed here.
template <typename T>
AttentionRecord<T> attend(Tape<T>& tape, const ModelParams<T>& params, const DecoderState<T>& s_prev,
                          const EncodedSource<T>& enc, const Tensor<T>& y_prev_emb,
                          std::span<const CoverageState<T>> coverage, const Tensor<T>& keys = {});

// H_t = sum_i alpha_{t,i} h_i.
template <typename T>
Tensor<T> context(Tape<T>& tape, const Tensor<T>& probs, const EncodedSource<T>& enc);

// s_t = GRU(s_{t-1}, [emb(y_{t-1}) ; H_t]).
template <typename T>
DecoderState<T> decode_step(Tape<T>& tape, const ModelParams<T>& params, const DecoderState<T>& s_prev,
                            const Tensor<T>& y_prev_emb, const Tensor<T>& context_vec);

// o_t = tanh(s_t W_o + emb(y_{t-1}) W_oy); p = softmax(o_t W_v). Returns 1 x V_y.
template <typename T>
Tensor<T> predict(Tape<T>& tape, const ModelParams<T>& params, const DecoderState<T>& s_t,
                  const Tensor<T>& y_prev_emb);

// s_0 = tanh(<right-to-left state of the first real token> W_init).
template <typename T>
DecoderState<T> initial_state(Tape<T>& tape, const ModelParams<T>& params, const EncodedSource<T>& enc);

}  // namespace covnmt
