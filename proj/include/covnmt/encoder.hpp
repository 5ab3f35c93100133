#pragma once

#include <span>

#include "covnmt/params.hpp"
#include "covnmt/tape.hpp"
#include "covnmt/vocab.hpp"

namespace covnmt {

template <typename T>
struct EncodedSource {
  Tensor<T> states;  // l x 2h, row i = [right-to-left state ; left-to-right state]
  Mask mask;         // 1 = real token; PAD rows of states are zero

  std::size_t length() const { return mask.size(); }
  std::size_t hidden() const { return states.cols() / 2; }
};

// z = sigmoid(x W_z + h U_z), r = sigmoid(x W_r + h U_r),
// h~ = tanh(x W + (r * h) U), h' = (1 - z) * h + z * h~.
template <typename T>
Tensor<T> gru_cell(Tape<T>& tape, const GruWeights<T>& w, const Tensor<T>& x, const Tensor<T>& h_prev);

// Both sweeps start from a zero state. PAD positions are skipped by the
// recurrences and produce zero rows.
template <typename T>
EncodedSource<T> encode(Tape<T>& tape, const ModelParams<T>& params, std::span<const TokenId> source_ids,
                        std::size_t max_len = 0);

extern template Tensor<float> gru_cell(Tape<float>&, const GruWeights<float>&, const Tensor<float>&,
                                       const Tensor<float>&);
extern template Tensor<double> gru_cell(Tape<double>&, const GruWeights<double>&, const Tensor<double>&,
                                        const Tensor<double>&);
extern template EncodedSource<float> encode(Tape<float>&, const ModelParams<float>&, std::span<const TokenId>,
                                            std::size_t);
extern template EncodedSource<double> encode(Tape<double>&, const ModelParams<double>&,
                                             std::span<const TokenId>, std::size_t);

}  // namespace covnmt
