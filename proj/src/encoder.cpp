#include "covnmt/encoder.hpp"

#include <vector>

#include "covnmt/embedding.hpp"

namespace covnmt {

template <typename T>
Tensor<T> gru_cell(Tape<T>& tape, const GruWeights<T>& w, const Tensor<T>& x, const Tensor<T>& h_prev) {
  auto z = tape.sigmoid(tape.add(tape.matmul(x, w.w_z), tape.matmul(h_prev, w.u_z)));
  auto r = tape.sigmoid(tape.add(tape.matmul(x, w.w_r), tape.matmul(h_prev, w.u_r)));
  auto candidate = tape.tanh(tape.add(tape.matmul(x, w.w), tape.matmul(tape.mul(r, h_prev), w.u)));
  return tape.add(tape.mul(tape.one_minus(z), h_prev), tape.mul(z, candidate));
}

template <typename T>
EncodedSource<T> encode(Tape<T>& tape, const ModelParams<T>& params, std::span<const TokenId> source_ids,
                        std::size_t max_len) {
  if (source_ids.empty()) throw EmptyInputError("encode: empty source sentence");
  if (max_len != 0 && source_ids.size() > max_len)
    throw DataError("encode: source length " + std::to_string(source_ids.size()) + " exceeds maximum " +
                    std::to_string(max_len));
  const std::size_t l = source_ids.size();
  const std::size_t h = params.dims.hidden;

  EncodedSource<T> enc;
  enc.mask = source_mask(source_ids);
  const auto embedded = lookup(tape, params.src_embed, source_ids);

  std::vector<Tensor<T>> inputs;
  inputs.reserve(l);
  for (std::size_t i = 0; i < l; ++i) inputs.push_back(tape.slice_row(embedded, i));

  std::vector<Tensor<T>> forward(l), backward(l);
  Tensor<T> state(Shape{1, h});
  for (std::size_t i = 0; i < l; ++i) {
    if (!enc.mask[i]) continue;
    state = gru_cell(tape, params.enc_fwd, inputs[i], state);
    forward[i] = state;
  }
  state = Tensor<T>(Shape{1, h});
  for (std::size_t i = l; i-- > 0;) {
    if (!enc.mask[i]) continue;
    state = gru_cell(tape, params.enc_bwd, inputs[i], state);
    backward[i] = state;
  }

  std::vector<Tensor<T>> rows;
  rows.reserve(l);
  for (std::size_t i = 0; i < l; ++i)
    rows.push_back(enc.mask[i] ? tape.concat_cols(backward[i], forward[i]) : Tensor<T>(Shape{1, 2 * h}));
  enc.states = tape.stack_rows(rows);
  return enc;
}

template Tensor<float> gru_cell(Tape<float>&, const GruWeights<float>&, const Tensor<float>&,
                                const Tensor<float>&);
template Tensor<double> gru_cell(Tape<double>&, const GruWeights<double>&, const Tensor<double>&,
                                 const Tensor<double>&);
template EncodedSource<float> encode(Tape<float>&, const ModelParams<float>&, std::span<const TokenId>,
                                     std::size_t);
template EncodedSource<double> encode(Tape<double>&, const ModelParams<double>&, std::span<const TokenId>,
                                      std::size_t);

}  // namespace covnmt
