#include "covnmt/objective.hpp"

#include <algorithm>
#include <string>

#include "covnmt/attention.hpp"
#include "covnmt/embedding.hpp"
#include "covnmt/encoder.hpp"

namespace covnmt {

void validate(const CoverageLambdas& lambdas) {
  if (!(lambdas.gru >= 0.0)) throw ConfigError("lambda_gru must be nonnegative");
  if (!(lambdas.sub >= 0.0)) throw ConfigError("lambda_sub must be nonnegative");
}

std::vector<std::size_t> last_aligned_steps(std::span<const Link> links, std::size_t source_len,
                                            std::size_t target_steps) {
  std::vector<std::size_t> last(source_len, 0);
  for (const auto& [i, j] : links) {
    if (i >= source_len || j >= target_steps)
      throw DataError("alignment link " + std::to_string(i) + "-" + std::to_string(j) + " outside a " +
                      std::to_string(source_len) + "x" + std::to_string(target_steps) + " sentence pair");
    last[i] = std::max(last[i], j + 1);
  }
  for (auto& a : last)
    if (a == 0) a = target_steps;
  return last;
}

namespace {

template <typename T>
double lambda_for(const CoverageState<T>& s, const CoverageLambdas& lambdas) {
  return s.rule == CoverageRule::gru ? lambdas.gru : lambdas.sub;
}

template <typename T>
Tensor<T> accumulate(Tape<T>& tape, std::vector<Tensor<T>>& terms) {
  if (terms.empty()) return Tensor<T>::scalar(T(0));
  Tensor<T> total = terms.front();
  for (std::size_t i = 1; i < terms.size(); ++i) total = tape.add(total, terms[i]);
  return total;
}

}  // namespace

template <typename T>
Tensor<T> coverage_penalty_final(Tape<T>& tape, const CoverageStates<T>& final_states,
                                 const CoverageLambdas& lambdas) {
  validate(lambdas);
  std::vector<Tensor<T>> terms;
  for (const auto& s : final_states) {
    const double lambda = lambda_for(s, lambdas);
    if (lambda == 0.0) continue;
    std::vector<T> weights(s.mask.begin(), s.mask.end());
    terms.push_back(tape.scale(tape.weighted_row_l1(s.matrix, weights), static_cast<T>(lambda)));
  }
  return accumulate(tape, terms);
}

template <typename T>
Tensor<T> coverage_penalty_aligned(Tape<T>& tape, std::span<const CoverageStates<T>> history,
                                   std::span<const Link> links, const CoverageLambdas& lambdas) {
  validate(lambdas);
  if (history.size() < 2) throw DataError("aligned penalty needs at least one coverage update");
  const std::size_t m = history.size() - 1;
  const auto& first = history.front();
  if (first.empty()) return Tensor<T>::scalar(T(0));
  const std::size_t l = first.front().length();
  const auto last = last_aligned_steps(links, l, m);

  std::vector<Tensor<T>> terms;
  for (std::size_t k = 0; k < first.size(); ++k) {
    const double lambda = lambda_for(first[k], lambdas);
    if (lambda == 0.0) continue;
    std::vector<Tensor<T>> rule_terms;
    for (std::size_t step = 1; step <= m; ++step) {
      const auto& s = history[step][k];
      std::vector<T> weights(l, T(0));
      bool any = false;
      for (std::size_t i = 0; i < l; ++i)
        if (s.mask[i] && step >= last[i]) {
          weights[i] = T(1);
          any = true;
        }
      if (any) rule_terms.push_back(tape.weighted_row_l1(s.matrix, weights));
    }
    if (!rule_terms.empty()) terms.push_back(tape.scale(accumulate(tape, rule_terms), static_cast<T>(lambda)));
  }
  return accumulate(tape, terms);
}

template <typename T>
SentenceRun<T> run_sentence(Tape<T>& tape, const ModelParams<T>& params, const TrainingExample& example,
                            const ObjectiveConfig& config) {
  for (TokenId id : example.target)
    if (id >= params.dims.tgt_vocab)
      throw DataError("target id " + std::to_string(id) + " outside the target vocabulary");
  for (TokenId id : example.source)
    if (id >= params.dims.src_vocab)
      throw DataError("source id " + std::to_string(id) + " outside the source vocabulary");

  SentenceRun<T> run;
  const auto enc = encode(tape, params, example.source);
  const auto keys = attention_keys(tape, params, enc);
  auto state = initial_state(tape, params, enc);
  run.coverage.push_back(init_coverage_states(tape, params, example.source));

  std::vector<TokenId> reference = example.target;
  reference.push_back(kEos);
  run.steps = reference.size();

  const std::size_t guarded_before = tape.guarded_logs();
  std::vector<Tensor<T>> losses;
  losses.reserve(reference.size());
  TokenId y_prev = kBos;
  auto y_prev_emb = lookup(tape, params.tgt_embed, y_prev);
  for (TokenId y : reference) {
    const auto rec = attend(tape, params, state, enc, y_prev_emb, std::span<const CoverageState<T>>(run.coverage.back()), keys);
    const auto ctx = context(tape, rec.probs, enc);
    state = decode_step(tape, params, state, y_prev_emb, ctx);
    const auto probs = predict(tape, params, state, y_prev_emb);
    losses.push_back(tape.neg_log_pick(probs, y));

    const auto p = probs.values();
    const auto best = static_cast<TokenId>(std::max_element(p.begin(), p.end()) - p.begin());
    run.correct += best == y;

    const auto y_emb = lookup(tape, params.tgt_embed, y);
    run.coverage.push_back(step_all(tape, params, run.coverage.back(), y_emb, rec.probs));
    run.attention.push_back(rec.probs);
    y_prev = y;
    y_prev_emb = y_emb;
  }
  run.guarded_logs = tape.guarded_logs() - guarded_before;
  run.nll = accumulate(tape, losses);

  if (config.kind == ObjectiveKind::aligned) {
    if (!example.links) throw DataError("aligned objective needs gold alignment links");
    run.penalty = coverage_penalty_aligned(tape, std::span<const CoverageStates<T>>(run.coverage),
                                           std::span<const Link>(*example.links), config.lambdas);
  } else {
    run.penalty = coverage_penalty_final(tape, run.coverage.back(), config.lambdas);
  }
  run.total = tape.add(run.nll, run.penalty);
  return run;
}

template <typename T>
Tensor<T> nll(Tape<T>& tape, const ModelParams<T>& params, const TrainingExample& example) {
  ObjectiveConfig config;
  config.lambdas = {0.0, 0.0};
  return run_sentence(tape, params, example, config).nll;
}

#define COVNMT_INSTANTIATE(T)                                                                               \
  template SentenceRun<T> run_sentence(Tape<T>&, const ModelParams<T>&, const TrainingExample&,             \
                                       const ObjectiveConfig&);                                             \
  template Tensor<T> nll(Tape<T>&, const ModelParams<T>&, const TrainingExample&);                          \
  template Tensor<T> coverage_penalty_final(Tape<T>&, const CoverageStates<T>&, const CoverageLambdas&);    \
  template Tensor<T> coverage_penalty_aligned(Tape<T>&, std::span<const CoverageStates<T>>,                 \
                                              std::span<const Link>, const CoverageLambdas&);

COVNMT_INSTANTIATE(float)
COVNMT_INSTANTIATE(double)

#undef COVNMT_INSTANTIATE

}  // namespace covnmt
