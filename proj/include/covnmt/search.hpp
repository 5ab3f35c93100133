#pragma once

#include <algorithm>
#include <concepts>
#include <cstddef>
#include <limits>
#include <vector>

#include "covnmt/errors.hpp"
#include "covnmt/vocab.hpp"

namespace covnmt {

// A left-to-right model the search can drive. score() yields the next-token
// log-probabilities (and the attention row of that step) for a state;
// advance() commits one token.
template <typename S>
concept SearchScorer = requires(const S& scorer, const typename S::State& state, const typename S::Step& step,
                                TokenId token) {
  { scorer.initial() } -> std::same_as<typename S::State>;
  { scorer.score(state) } -> std::same_as<typename S::Step>;
  { scorer.advance(state, step, token) } -> std::same_as<typename S::State>;
  { step.log_probs } -> std::convertible_to<std::vector<double>>;
  { step.attention } -> std::convertible_to<std::vector<double>>;
};

template <typename State>
struct Hypothesis {
  std::vector<TokenId> tokens;                 // emitted ids, EOS excluded
  double log_prob = 0;                         // sum of chosen-token log-probabilities, EOS included
  std::vector<std::vector<double>> attention;  // one row per emitted token
  State state;
  bool finished = false;      // EOS emitted (false when cut off at max_len)
  std::size_t completed_at = 0;
};

struct SearchOptions {
  std::size_t beam = 1;
  std::size_t max_len = 100;
  bool length_normalize = false;
  // Return the best result over widths 1..beam instead of a single pass, so a
  // wider beam can never return a worse hypothesis.
  bool nested = true;
};

namespace detail {

// Compares a + [a_last] with b + [b_last] lexicographically.
inline bool lex_less(const std::vector<TokenId>& a, TokenId a_last, const std::vector<TokenId>& b, TokenId b_last) {
  const std::size_t la = a.size() + 1, lb = b.size() + 1;
  for (std::size_t i = 0; i < std::min(la, lb); ++i) {
    const TokenId x = i < a.size() ? a[i] : a_last;
    const TokenId y = i < b.size() ? b[i] : b_last;
    if (x != y) return x < y;
  }
  return la < lb;
}

template <typename State>
double final_score(const Hypothesis<State>& h, bool normalize) {
  if (!normalize) return h.log_prob;
  const std::size_t len = h.tokens.size() + (h.finished ? 1 : 0);
  return h.log_prob / static_cast<double>(std::max<std::size_t>(len, 1));
}

// Highest score, then earliest completion, then smallest id sequence.
template <typename State>
bool better(const Hypothesis<State>& a, const Hypothesis<State>& b, bool normalize) {
  const double sa = final_score(a, normalize), sb = final_score(b, normalize);
  if (sa != sb) return sa > sb;
  if (a.completed_at != b.completed_at) return a.completed_at < b.completed_at;
  return a.tokens < b.tokens;
}

// One length-capped pass at a fixed width. Each step keeps the best `width`
// expansions of the live hypotheses (ties: lexicographically smaller id
// sequence); an expansion by EOS completes. At max_len the live hypotheses
// are cut off and count as completed.
template <SearchScorer Scorer>
Hypothesis<typename Scorer::State> beam_pass(const Scorer& scorer, std::size_t width,
                                             const SearchOptions& options, TokenId eos) {
  using State = typename Scorer::State;

  struct Candidate {
    std::size_t parent;
    TokenId token;
    double score;
  };

  std::vector<Hypothesis<State>> live(1);
  live[0].state = scorer.initial();
  std::vector<Hypothesis<State>> completed;

  for (std::size_t t = 1; t <= options.max_len && !live.empty(); ++t) {
    std::vector<typename Scorer::Step> steps;
    steps.reserve(live.size());
    std::vector<Candidate> candidates;
    for (std::size_t h = 0; h < live.size(); ++h) {
      steps.push_back(scorer.score(live[h].state));
      const auto& lp = steps.back().log_probs;
      for (std::size_t y = 0; y < lp.size(); ++y) candidates.push_back({h, y, live[h].log_prob + lp[y]});
    }
    const std::size_t keep = std::min(width, candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep), candidates.end(),
                      [&](const Candidate& a, const Candidate& b) {
                        if (a.score != b.score) return a.score > b.score;
                        return detail::lex_less(live[a.parent].tokens, a.token, live[b.parent].tokens, b.token);
                      });

    std::vector<Hypothesis<State>> next;
    for (std::size_t c = 0; c < keep; ++c) {
      const auto& cand = candidates[c];
      const auto& parent = live[cand.parent];
      Hypothesis<State> h;
      h.tokens = parent.tokens;
      h.attention = parent.attention;
      h.log_prob = cand.score;
      h.state = scorer.advance(parent.state, steps[cand.parent], cand.token);
      if (cand.token == eos) {
        h.finished = true;
        h.completed_at = t;
        completed.push_back(std::move(h));
      } else {
        h.tokens.push_back(cand.token);
        h.attention.push_back(steps[cand.parent].attention);
        next.push_back(std::move(h));
      }
    }
    live = std::move(next);

    // Log-probabilities only fall, so without normalisation nothing live can
    // overtake the best completed hypothesis.
    if (!options.length_normalize && !completed.empty() && !live.empty()) {
      double best_done = -std::numeric_limits<double>::infinity();
      for (const auto& h : completed) best_done = std::max(best_done, h.log_prob);
      double best_live = -std::numeric_limits<double>::infinity();
      for (const auto& h : live) best_live = std::max(best_live, h.log_prob);
      if (best_done >= best_live) live.clear();
    }
  }
  for (auto& h : live) {
    h.completed_at = options.max_len;
    completed.push_back(std::move(h));
  }

  return *std::min_element(completed.begin(), completed.end(), [&](const auto& a, const auto& b) {
    return better(a, b, options.length_normalize);
  });
}

}  // namespace detail

// Beam search. A single pass at width k can lose the path a narrower pass
// finds, so by default the result is the best over passes of width 1..k.
template <SearchScorer Scorer>
Hypothesis<typename Scorer::State> beam_search(const Scorer& scorer, const SearchOptions& options,
                                               TokenId eos = kEos) {
  if (options.beam == 0) throw ConfigError("beam width must be at least 1");
  if (options.max_len == 0) throw ConfigError("max_len must be at least 1");
  if (!options.nested) return detail::beam_pass(scorer, options.beam, options, eos);
  auto best = detail::beam_pass(scorer, 1, options, eos);
  for (std::size_t width = 2; width <= options.beam; ++width) {
    auto h = detail::beam_pass(scorer, width, options, eos);
    if (detail::better(h, best, options.length_normalize)) best = std::move(h);
  }
  return best;
}

// Argmax decoding (lowest id on ties) until EOS or max_len.
template <SearchScorer Scorer>
Hypothesis<typename Scorer::State> greedy_search(const Scorer& scorer, std::size_t max_len, TokenId eos = kEos) {
  if (max_len == 0) throw ConfigError("max_len must be at least 1");
  Hypothesis<typename Scorer::State> h;
  h.state = scorer.initial();
  for (std::size_t t = 1; t <= max_len; ++t) {
    const auto step = scorer.score(h.state);
    const auto& lp = step.log_probs;
    const auto best = static_cast<TokenId>(std::max_element(lp.begin(), lp.end()) - lp.begin());
    h.log_prob += lp[best];
    h.state = scorer.advance(h.state, step, best);
    if (best == eos) {
      h.finished = true;
      h.completed_at = t;
      return h;
    }
    h.tokens.push_back(best);
    h.attention.push_back(step.attention);
  }
  h.completed_at = max_len;
  return h;
}

}  // namespace covnmt
