#pragma once

#include <span>

#include "covnmt/params.hpp"
#include "covnmt/tape.hpp"
#include "covnmt/vocab.hpp"

namespace covnmt {

// Row gather from an embedding table: ids.size() x width.
template <typename T>
Tensor<T> lookup(Tape<T>& tape, const EmbeddingTable<T>& table, std::span<const TokenId> ids) {
  return tape.gather_rows(table.matrix, ids);
}

template <typename T>
Tensor<T> lookup(Tape<T>& tape, const EmbeddingTable<T>& table, TokenId id) {
  const TokenId one[] = {id};
  return tape.gather_rows(table.matrix, one);
}

// 1 where the id is a real token, 0 for PAD.
inline Mask source_mask(std::span<const TokenId> ids) {
  Mask mask(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) mask[i] = ids[i] != kPad;
  return mask;
}

}  // namespace covnmt
