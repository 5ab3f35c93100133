#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "covnmt/grad_check.hpp"
#include "covnmt/tensor.hpp"

namespace covnmt {

// Which coverage update rules are active. both runs the GRU and subtraction
// rules side by side on separate coverage tables.
enum class CoverageMode { base, gru, sub, both };

inline bool uses_gru(CoverageMode m) { return m == CoverageMode::gru || m == CoverageMode::both; }
inline bool uses_sub(CoverageMode m) { return m == CoverageMode::sub || m == CoverageMode::both; }
inline std::size_t coverage_state_count(CoverageMode m) {
  return static_cast<std::size_t>(uses_gru(m)) + static_cast<std::size_t>(uses_sub(m));
}

std::string_view to_string(CoverageMode m);
CoverageMode parse_coverage_mode(std::string_view text);

struct ModelDims {
  std::size_t src_vocab = 0;
  std::size_t tgt_vocab = 0;
  std::size_t embed = 32;
  std::size_t hidden = 64;     // per encoder direction, decoder state, output layer
  std::size_t attention = 64;
  std::size_t coverage = 100;

  bool operator==(const ModelDims&) const = default;
};

template <typename T>
struct EmbeddingTable {
  Tensor<T> matrix;  // vocabulary x width

  std::size_t rows() const { return matrix.rows(); }
  std::size_t width() const { return matrix.cols(); }
};

// Input maps are [input x hidden], recurrent maps [hidden x hidden]. No biases.
template <typename T>
struct GruWeights {
  Tensor<T> w_z, w_r, w;
  Tensor<T> u_z, u_r, u;
};

template <typename T>
struct AttentionWeights {
  Tensor<T> w_s, w_h, w_y;  // project s_{t-1}, h_j, emb(y_{t-1}) into the hidden layer A
  Tensor<T> w_e;            // attention hidden -> scalar score
  Tensor<T> w_cov_gru, w_cov_sub;  // coverage rows into A; present per mode
};

template <typename T>
struct OutputWeights {
  Tensor<T> w_o, w_oy, w_v;
};

template <typename T>
struct CoverageGruWeights {
  EmbeddingTable<T> table;
  Tensor<T> w_zy, w_za, u_z;
  Tensor<T> w_ry, w_ra, u_r;
  Tensor<T> w_y, w_a, u;
};

template <typename T>
struct CoverageSubWeights {
  EmbeddingTable<T> table;
  Tensor<T> w_yc;
};

template <typename T>
class ModelParams {
 public:
  ModelDims dims;
  CoverageMode mode = CoverageMode::base;

  EmbeddingTable<T> src_embed, tgt_embed;
  GruWeights<T> enc_fwd, enc_bwd;
  GruWeights<T> dec;
  Tensor<T> dec_init;  // backward encoder state at position 1 -> s_0
  AttentionWeights<T> att;
  OutputWeights<T> out;
  std::optional<CoverageGruWeights<T>> cov_gru;
  std::optional<CoverageSubWeights<T>> cov_sub;

  // Every tensor is drawn uniformly from [-0.08, 0.08] by a generator seeded
  // from (seed, parameter name), so a parameter's initial value does not
  // depend on which other parameters the mode creates.
  static ModelParams init(const ModelDims& dims, CoverageMode mode, std::uint64_t seed,
                          double range = 0.08);

  static ModelParams zeros(const ModelDims& dims, CoverageMode mode);

  // Rebuilds a parameter set from named tensors; dims and mode are inferred
  // from the names and shapes present. Throws DataError on anything
  // inconsistent.
  static ModelParams from_tensors(const std::map<std::string, Tensor<T>>& tensors);

  // Sorted by name.
  std::vector<NamedParam<T>> named() const;
  std::size_t parameter_count() const;

  ModelParams clone() const;
  template <typename U>
  ModelParams<U> cast() const;

  void zero_grad() const;

  // Expected (name, shape) layout for the given configuration, sorted by name.
  static std::vector<std::pair<std::string, Shape>> layout(const ModelDims& dims, CoverageMode mode);

 private:
  template <typename F>
  void visit(F&& f);
};

template <typename T>
template <typename U>
ModelParams<U> ModelParams<T>::cast() const {
  std::map<std::string, Tensor<U>> tensors;
  for (const auto& p : named()) tensors.emplace(p.name, p.tensor.template cast<U>());
  return ModelParams<U>::from_tensors(tensors);
}

extern template class ModelParams<float>;
extern template class ModelParams<double>;

}  // namespace covnmt
