#include "covnmt/coverage.hpp"

#include <algorithm>
#include <cmath>

#include "covnmt/embedding.hpp"

namespace covnmt {

namespace {

template <typename T>
void check_alpha(const CoverageState<T>& cov, const Tensor<T>& alpha) {
  if (alpha.rows() != 1 || alpha.cols() != cov.length())
    throw DimensionError("coverage update: attention " + alpha.shape().str() + " for " +
                         std::to_string(cov.length()) + " source positions");
}

template <typename T>
CoverageState<T> finish(Tape<T>& tape, const CoverageState<T>& cov, const Tensor<T>& updated) {
  CoverageState<T> next;
  next.rule = cov.rule;
  next.step = cov.step + 1;
  next.mask = cov.mask;
  const bool all_live = std::all_of(cov.mask.begin(), cov.mask.end(), [](auto m) { return m != 0; });
  next.matrix = all_live ? updated : tape.select_rows(cov.mask, updated, cov.matrix);
  return next;
}

}  // namespace

template <typename T>
CoverageState<T> init_coverage(Tape<T>& tape, const EmbeddingTable<T>& table, std::span<const TokenId> source_ids,
                               CoverageRule rule) {
  CoverageState<T> cov;
  cov.matrix = lookup(tape, table, source_ids);
  cov.rule = rule;
  cov.step = 0;
  cov.mask = source_mask(source_ids);
  return cov;
}

template <typename T>
CoverageStates<T> init_coverage_states(Tape<T>& tape, const ModelParams<T>& params,
                                       std::span<const TokenId> source_ids) {
  CoverageStates<T> states;
  if (uses_gru(params.mode))
    states.push_back(init_coverage(tape, params.cov_gru->table, source_ids, CoverageRule::gru));
  if (uses_sub(params.mode))
    states.push_back(init_coverage(tape, params.cov_sub->table, source_ids, CoverageRule::sub));
  return states;
}

template <typename T>
CoverageState<T> update_gru(Tape<T>& tape, const CoverageGruWeights<T>& w, const CoverageState<T>& cov,
                            const Tensor<T>& y_emb, const Tensor<T>& alpha) {
  if (cov.rule != CoverageRule::gru) throw ConfigError("update_gru applied to a subtraction coverage state");
  check_alpha(cov, alpha);
  const auto a = tape.transpose(alpha);  // l x 1
  const auto& c = cov.matrix;
  auto gate = [&](const Tensor<T>& w_y, const Tensor<T>& w_a, const Tensor<T>& u) {
    return tape.sigmoid(
        tape.add_row(tape.add(tape.matmul(a, w_a), tape.matmul(c, u)), tape.matmul(y_emb, w_y)));
  };
  const auto z = gate(w.w_zy, w.w_za, w.u_z);
  const auto r = gate(w.w_ry, w.w_ra, w.u_r);
  const auto candidate = tape.tanh(
      tape.add_row(tape.add(tape.matmul(a, w.w_a), tape.mul(r, tape.matmul(c, w.u))), tape.matmul(y_emb, w.w_y)));
  const auto updated = tape.add(tape.mul(z, c), tape.mul(tape.one_minus(z), candidate));
  return finish(tape, cov, updated);
}

template <typename T>
CoverageState<T> update_sub(Tape<T>& tape, const CoverageSubWeights<T>& w, const CoverageState<T>& cov,
                            const Tensor<T>& y_emb, const Tensor<T>& alpha) {
  if (cov.rule != CoverageRule::sub) throw ConfigError("update_sub applied to a GRU coverage state");
  check_alpha(cov, alpha);
  const auto projected = tape.matmul(y_emb, w.w_yc);                    // 1 x d_c
  const auto removed = tape.matmul(tape.transpose(alpha), projected);   // l x d_c
  return finish(tape, cov, tape.sub(cov.matrix, removed));
}

template <typename T>
CoverageStates<T> step_all(Tape<T>& tape, const ModelParams<T>& params, const CoverageStates<T>& states,
                           const Tensor<T>& y_emb, const Tensor<T>& alpha) {
  if (states.size() != coverage_state_count(params.mode))
    throw ConfigError("mode " + std::string(to_string(params.mode)) + " expects " +
                      std::to_string(coverage_state_count(params.mode)) + " coverage states, got " +
                      std::to_string(states.size()));
  CoverageStates<T> next;
  next.reserve(states.size());
  for (const auto& s : states) {
    if (s.rule == CoverageRule::gru) {
      if (!params.cov_gru) throw ConfigError("GRU coverage state without GRU coverage weights");
      next.push_back(update_gru(tape, *params.cov_gru, s, y_emb, alpha));
    } else {
      if (!params.cov_sub) throw ConfigError("subtraction coverage state without subtraction weights");
      next.push_back(update_sub(tape, *params.cov_sub, s, y_emb, alpha));
    }
  }
  return next;
}

template <typename T>
std::vector<double> row_l1(const CoverageState<T>& cov) {
  const std::size_t l = cov.matrix.rows(), d = cov.matrix.cols();
  std::vector<double> out(l, 0.0);
  const auto v = cov.matrix.values();
  for (std::size_t i = 0; i < l; ++i)
    for (std::size_t j = 0; j < d; ++j) out[i] += std::abs(static_cast<double>(v[i * d + j]));
  return out;
}

#define COVNMT_INSTANTIATE(T)                                                                               \
  template CoverageState<T> init_coverage(Tape<T>&, const EmbeddingTable<T>&, std::span<const TokenId>,     \
                                          CoverageRule);                                                    \
  template CoverageStates<T> init_coverage_states(Tape<T>&, const ModelParams<T>&, std::span<const TokenId>); \
  template CoverageState<T> update_gru(Tape<T>&, const CoverageGruWeights<T>&, const CoverageState<T>&,     \
                                       const Tensor<T>&, const Tensor<T>&);                                 \
  template CoverageState<T> update_sub(Tape<T>&, const CoverageSubWeights<T>&, const CoverageState<T>&,     \
                                       const Tensor<T>&, const Tensor<T>&);                                 \
  template CoverageStates<T> step_all(Tape<T>&, const ModelParams<T>&, const CoverageStates<T>&,            \
                                      const Tensor<T>&, const Tensor<T>&);                                  \
  template std::vector<double> row_l1(const CoverageState<T>&);

COVNMT_INSTANTIATE(float)
COVNMT_INSTANTIATE(double)

#undef COVNMT_INSTANTIATE

}  // namespace covnmt
