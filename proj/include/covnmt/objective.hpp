#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "covnmt/coverage.hpp"
#include "covnmt/params.hpp"
#include "covnmt/tape.hpp"

namespace covnmt {

// (source index i, target index j), both 0-based.
using Link = std::pair<std::size_t, std::size_t>;

struct TrainingExample {
  std::vector<TokenId> source;
  std::vector<TokenId> target;  // reference without EOS; training appends it
  std::optional<std::vector<Link>> links;
};

// mix: penalise the final coverage matrix only.
// aligned: penalise every step from a word's last aligned target position on.
enum class ObjectiveKind { mix, aligned };

struct CoverageLambdas {
  double gru = 1e-4;
  double sub = 1e-2;
};

struct ObjectiveConfig {
  ObjectiveKind kind = ObjectiveKind::mix;
  CoverageLambdas lambdas;
};

// Teacher-forced pass over one sentence pair.
template <typename T>
struct SentenceRun {
  Tensor<T> nll;
  Tensor<T> penalty;
  Tensor<T> total;
  std::vector<CoverageStates<T>> coverage;  // coverage[t] after t updates, t = 0..m
  std::vector<Tensor<T>> attention;         // attention[t-1] = alpha_t, t = 1..m
  std::size_t steps = 0;                    // m, including EOS
  std::size_t correct = 0;                  // steps whose argmax equals the reference
  std::size_t guarded_logs = 0;
};

template <typename T>
SentenceRun<T> run_sentence(Tape<T>& tape, const ModelParams<T>& params, const TrainingExample& example,
                            const ObjectiveConfig& config);

// -sum_t log p(y*_t | ...), coverage advancing every step per the mode.
template <typename T>
Tensor<T> nll(Tape<T>& tape, const ModelParams<T>& params, const TrainingExample& example);

// sum_rule lambda_rule * sum_{i unmasked} ||c_{m,x_i}||_1
template <typename T>
Tensor<T> coverage_penalty_final(Tape<T>& tape, const CoverageStates<T>& final_states,
                                 const CoverageLambdas& lambdas);

// sum_rule lambda_rule * sum_i sum_{j = a_i}^{m} ||c_{j,x_i}||_1 where a_i is the
// 1-based last target step x_i is linked to, or m when x_i has no link.
// history[t] holds the states after t updates.
template <typename T>
Tensor<T> coverage_penalty_aligned(Tape<T>& tape, std::span<const CoverageStates<T>> history,
                                   std::span<const Link> links, const CoverageLambdas& lambdas);

// a_i per source position (1-based target steps).
std::vector<std::size_t> last_aligned_steps(std::span<const Link> links, std::size_t source_len,
                                            std::size_t target_steps);

void validate(const CoverageLambdas& lambdas);

}  // namespace covnmt
