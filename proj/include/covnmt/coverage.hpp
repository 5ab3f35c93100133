#pragma once

#include <span>
#include <vector>

#include "covnmt/params.hpp"
#include "covnmt/tape.hpp"
#include "covnmt/vocab.hpp"

namespace covnmt {

enum class CoverageRule { gru, sub };

// Coverage embeddings c_{t,x_1..x_l} of one sentence under one update rule.
template <typename T>
struct CoverageState {
  Tensor<T> matrix;  // l x d_c
  CoverageRule rule = CoverageRule::gru;
  std::size_t step = 0;
  Mask mask;  // rows with mask 0 (PAD) are never modified

  std::size_t length() const { return mask.size(); }
};

template <typename T>
using CoverageStates = std::vector<CoverageState<T>>;

// Row j is the table row of x_j; step 0.
template <typename T>
CoverageState<T> init_coverage(Tape<T>& tape, const EmbeddingTable<T>& table, std::span<const TokenId> source_ids,
                               CoverageRule rule);

// All states the mode needs, GRU state first.
template <typename T>
CoverageStates<T> init_coverage_states(Tape<T>& tape, const ModelParams<T>& params,
                                       std::span<const TokenId> source_ids);

// Per position j, with y = emb(y_t) and a = alpha_{t,j}:
//   z = sigmoid(y W_zy + a w_za + c U_z)
//   r = sigmoid(y W_ry + a w_ra + c U_r)
//   c~ = tanh(y W_y + a w_a + r * (c U))
//   c' = z * c + (1 - z) * c~
// alpha is the 1 x l attention row of step t; y_emb is 1 x d_emb.
template <typename T>
CoverageState<T> update_gru(Tape<T>& tape, const CoverageGruWeights<T>& w, const CoverageState<T>& cov,
                            const Tensor<T>& y_emb, const Tensor<T>& alpha);

// c' = c - alpha_j * (emb(y_t) W_yc).
template <typename T>
CoverageState<T> update_sub(Tape<T>& tape, const CoverageSubWeights<T>& w, const CoverageState<T>& cov,
                            const Tensor<T>& y_emb, const Tensor<T>& alpha);

// Applies every rule of the mode with the same alpha. base is a no-op.
template <typename T>
CoverageStates<T> step_all(Tape<T>& tape, const ModelParams<T>& params, const CoverageStates<T>& states,
                           const Tensor<T>& y_emb, const Tensor<T>& alpha);

// ||c_j||_1 for every row of a state.
template <typename T>
std::vector<double> row_l1(const CoverageState<T>& cov);

}  // namespace covnmt
