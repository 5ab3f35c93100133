#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <sstream>

#include "covnmt/decoder.hpp"
#include "covnmt/search.hpp"
#include "test_util.hpp"

namespace covnmt {
namespace {

using testing::tiny_dims;

// Next-token distributions fixed per prefix. Token 0 is EOS.
struct TableScorer {
  struct State {
    std::vector<TokenId> prefix;
  };
  struct Step {
    std::vector<double> log_probs;
    std::vector<double> attention;
  };

  std::map<std::vector<TokenId>, std::vector<double>> probs;

  State initial() const { return {}; }
  Step score(const State& s) const {
    Step step;
    for (double p : probs.at(s.prefix)) step.log_probs.push_back(std::log(p));
    step.attention = {1.0};
    return step;
  }
  State advance(const State& s, const Step&, TokenId token) const {
    State next = s;
    next.prefix.push_back(token);
    return next;
  }
};

static_assert(SearchScorer<TableScorer>);
static_assert(SearchScorer<NmtScorer<float>>);

struct Enumerated {
  std::vector<TokenId> tokens;
  double log_prob;
  std::size_t completed_at;
};

// Every sequence of at most max_len steps: ended by EOS, or cut off at max_len.
void enumerate(const TableScorer& s, std::vector<TokenId> prefix, double lp, std::size_t max_len,
               std::vector<Enumerated>& out) {
  const auto& p = s.probs.at(prefix);
  for (TokenId y = 0; y < p.size(); ++y) {
    const double next = lp + std::log(p[y]);
    if (y == 0) {
      out.push_back({prefix, next, prefix.size() + 1});
      continue;
    }
    auto longer = prefix;
    longer.push_back(y);
    if (longer.size() == max_len) out.push_back({longer, next, max_len});
    else enumerate(s, longer, next, max_len, out);
  }
}

Enumerated brute_force(const TableScorer& s, std::size_t max_len) {
  std::vector<Enumerated> all;
  enumerate(s, {}, 0.0, max_len, all);
  return *std::min_element(all.begin(), all.end(), [](const Enumerated& a, const Enumerated& b) {
    if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
    if (a.completed_at != b.completed_at) return a.completed_at < b.completed_at;
    return a.tokens < b.tokens;
  });
}

TableScorer two_step_model() {
  TableScorer s;
  s.probs[{}] = {0.1, 0.5, 0.4};
  s.probs[{1}] = {0.4, 0.3, 0.3};
  s.probs[{2}] = {0.9, 0.05, 0.05};
  return s;
}

TEST(BeamSearch, HandBuiltModelMatchesEnumeration) {
  const auto s = two_step_model();
  const auto best = brute_force(s, 2);
  EXPECT_EQ(best.tokens, (std::vector<TokenId>{2}));
  const auto h = beam_search(s, {2, 2, false}, 0);
  EXPECT_EQ(h.tokens, best.tokens);
  EXPECT_EQ(h.log_prob, best.log_prob);
  EXPECT_TRUE(h.finished);
  // Greedy commits to token 1 and ends worse.
  const auto g = greedy_search(s, 2, 0);
  EXPECT_EQ(g.tokens, (std::vector<TokenId>{1}));
  EXPECT_LT(g.log_prob, h.log_prob);
}

TEST(BeamSearch, FullWidthMatchesEnumerationOnRandomTrees) {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    TableScorer s;
    auto dist = [&] {
      std::vector<double> p(3);
      double z = 0;
      for (auto& v : p) z += v = 0.05 + rng.uniform();
      for (auto& v : p) v /= z;
      return p;
    };
    s.probs[{}] = dist();
    for (TokenId a : {1, 2}) s.probs[{a}] = dist();
    const auto best = brute_force(s, 2);
    const auto h = beam_search(s, {3, 2, false}, 0);
    EXPECT_EQ(h.tokens, best.tokens);
    EXPECT_EQ(h.log_prob, best.log_prob);
  }
}

TEST(BeamSearch, CutOffHypothesesCountAsCompleted) {
  TableScorer s;
  s.probs[{}] = {0.01, 0.99};
  s.probs[{1}] = {0.01, 0.99};
  const auto h = beam_search(s, {2, 2, false}, 0);
  EXPECT_EQ(h.tokens, (std::vector<TokenId>{1, 1}));
  EXPECT_FALSE(h.finished);
  EXPECT_EQ(h.completed_at, 2u);
}

TEST(BeamSearch, TiesPreferEarlierThenSmallerIds) {
  TableScorer s;
  s.probs[{}] = {0.25, 0.25, 0.5};
  s.probs[{1}] = {1.0, 1e-300, 1e-300};
  s.probs[{2}] = {0.5, 0.25, 0.25};
  // [EOS] and [1, EOS] and [2, EOS] all score log 0.25; [EOS] completes first.
  const auto h = beam_search(s, {3, 2, false}, 0);
  EXPECT_TRUE(h.tokens.empty());
}

TEST(BeamSearch, LengthNormalizationChangesRanking) {
  TableScorer s;
  s.probs[{}] = {0.3, 0.7};
  s.probs[{1}] = {0.4, 0.6};
  s.probs[{1, 1}] = {0.5, 0.5};
  const auto raw = beam_search(s, {2, 3, false}, 0);
  const auto norm = beam_search(s, {2, 3, true}, 0);
  EXPECT_TRUE(raw.tokens.empty());
  EXPECT_EQ(norm.tokens, (std::vector<TokenId>{1, 1}));
}

TEST(BeamSearch, RejectsBadOptions) {
  const auto s = two_step_model();
  EXPECT_THROW(beam_search(s, {0, 2, false}, 0), ConfigError);
  EXPECT_THROW(beam_search(s, {1, 0, false}, 0), ConfigError);
  EXPECT_THROW(greedy_search(s, 0, 0), ConfigError);
}

std::vector<TokenId> random_sentence(Rng& rng, std::size_t vocab) {
  std::vector<TokenId> ids(1 + rng.below(6));
  for (auto& id : ids) id = kReservedTokens + rng.below(vocab - kReservedTokens);
  return ids;
}

TEST(NmtDecoding, BeamOneEqualsGreedy) {
  for (auto mode : {CoverageMode::base, CoverageMode::both}) {
    const auto p = ModelParams<double>::init(tiny_dims(9, 8), mode, 5, 1.5);
    Rng rng(6);
    for (int k = 0; k < 30; ++k) {
      const auto ids = random_sentence(rng, 9);
      const auto b = beam_decode(p, ids, {1, 12, false});
      const auto g = greedy_decode(p, ids, 12);
      EXPECT_EQ(b.tokens, g.tokens);
      EXPECT_EQ(b.log_prob, g.log_prob);
      EXPECT_EQ(b.attention, g.attention);
    }
  }
}

TEST(NmtDecoding, AlwaysEosModelGivesEmptyTranslation) {
  auto p = ModelParams<double>::init(tiny_dims(), CoverageMode::gru, 7);
  for (auto& v : p.tgt_embed.matrix.values()) v = 1;
  for (auto& v : p.out.w_o.values()) v = 0;
  for (auto& v : p.out.w_oy.values()) v = 0;
  for (auto& v : p.out.w_v.values()) v = 0;
  for (std::size_t r = 0; r < 3; ++r) p.out.w_oy(r, 0) = 10;
  p.out.w_v(0, kEos) = 60;
  const auto r = beam_decode(p, std::vector<TokenId>{4, 5}, {4, 10, false});
  EXPECT_TRUE(r.tokens.empty());
  EXPECT_TRUE(r.finished);
  EXPECT_TRUE(r.attention.empty());
}

TEST(NmtDecoding, LogProbIsSumOfChosenTokenLogProbs) {
  const auto p = ModelParams<double>::init(tiny_dims(9, 8), CoverageMode::both, 8, 1.5);
  Rng rng(9);
  for (int k = 0; k < 20; ++k) {
    const auto ids = random_sentence(rng, 9);
    const auto r = beam_decode(p, ids, {3, 15, false});
    if (!r.finished) continue;
    EXPECT_NEAR(force_decode(p, ids, r.tokens).log_prob, r.log_prob, 1e-9);
  }
}

TEST(NmtDecoding, AttentionRowsAreDistributions) {
  const auto p = ModelParams<double>::init(tiny_dims(9, 8), CoverageMode::sub, 10, 1.5);
  Rng rng(11);
  for (int k = 0; k < 20; ++k) {
    const auto ids = random_sentence(rng, 9);
    const auto r = beam_decode(p, ids, {3, 15, false});
    for (const auto& row : r.attention) {
      ASSERT_EQ(row.size(), ids.size());
      double total = 0;
      for (double v : row) {
        EXPECT_GE(v, 0.0);
        total += v;
      }
      EXPECT_NEAR(total, 1.0, 1e-9);
    }
    ASSERT_EQ(r.final_coverage_l1.size(), 1u);
    EXPECT_EQ(r.final_coverage_l1[0].size(), ids.size());
  }
}

TEST(NmtDecoding, WiderBeamNeverScoresWorseOnRandomModels) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto p = ModelParams<double>::init(tiny_dims(9, 8), CoverageMode::gru, seed, 1.5);
    Rng rng(seed + 100);
    for (int k = 0; k < 20; ++k) {
      const auto ids = random_sentence(rng, 9);
      double previous = -std::numeric_limits<double>::infinity();
      for (std::size_t width = 1; width <= 5; ++width) {
        const double lp = beam_decode(p, ids, {width, 10, false}).log_prob;
        EXPECT_GE(lp, previous);
        previous = lp;
      }
    }
  }
}

TEST(NmtDecoding, SinglePassBeamCanLoseTheGreedyPath) {
  // Why nested search is the default: the same sweep with one pass per width
  // does return worse hypotheses than greedy somewhere.
  std::size_t worse = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto p = ModelParams<double>::init(tiny_dims(9, 8), CoverageMode::gru, seed, 1.5);
    Rng rng(seed + 100);
    for (int k = 0; k < 20; ++k) {
      const auto ids = random_sentence(rng, 9);
      SearchOptions single{4, 10, false};
      single.nested = false;
      worse += beam_decode(p, ids, single).log_prob < beam_decode(p, ids, {1, 10, false}).log_prob;
    }
  }
  EXPECT_GT(worse, 0u);
}

TEST(NmtDecoding, Deterministic) {
  const auto p = ModelParams<float>::init(tiny_dims(9, 8), CoverageMode::both, 12, 1.5);
  const std::vector<TokenId> ids{4, 8, 5};
  const auto a = beam_decode(p, ids, {4, 10, false}), b = beam_decode(p, ids, {4, 10, false});
  EXPECT_EQ(a.tokens, b.tokens);
  EXPECT_EQ(a.log_prob, b.log_prob);
  EXPECT_EQ(a.attention, b.attention);
}

TEST(NmtDecoding, ForceDecodeDropsEosStepFromAttention) {
  const auto p = ModelParams<double>::init(tiny_dims(), CoverageMode::both, 13);
  const std::vector<TokenId> src{4, 5, 6}, tgt{4, 5};
  const auto r = force_decode(p, src, tgt);
  EXPECT_EQ(r.tokens, tgt);
  EXPECT_EQ(r.attention.size(), 2u);
  EXPECT_EQ(r.coverage_trace.size(), 4u);
}

TEST(NmtDecoding, RejectsOutOfVocabularySource) {
  const auto p = ModelParams<double>::init(tiny_dims(), CoverageMode::base, 14);
  EXPECT_THROW(beam_decode(p, std::vector<TokenId>{40}, {2, 5, false}), DataError);
}

Vocabulary target_vocab() {
  const std::vector<Sentence> corpus{{"x", "y"}};
  return Vocabulary::build(corpus, 10);
}

TEST(ReplaceUnk, Cases) {
  const auto vocab = target_vocab();
  const Sentence source{"s0", "s1", "s2", "s3"};
  TranslationResult r;
  r.tokens = {4, 5};
  r.attention = {{1, 0, 0, 0}, {0, 1, 0, 0}};
  EXPECT_EQ(replace_unk(r, vocab, source), (Sentence{"x", "y"}));
  r.tokens = {4, kUnk};
  r.attention = {{1, 0, 0, 0}, {0, 0, 0, 1}};
  EXPECT_EQ(replace_unk(r, vocab, source), (Sentence{"x", "s3"}));
  r.tokens = {kUnk};
  r.attention = {{0.5, 0.5, 0, 0}};
  EXPECT_EQ(replace_unk(r, vocab, source), (Sentence{"s0"}));
}

TEST(Dumps, AttentionFormat) {
  TranslationResult r;
  r.tokens = {4, 5};
  r.attention = {{0.25, 0.75}, {1.0, 0.0}};
  std::ostringstream out;
  write_attention_dump(out, 7, 2, r);
  EXPECT_EQ(out.str(), "sent 7 2 2\n0.250000 0.750000\n1.000000 0.000000\n");
}

TEST(Dumps, CoverageFormat) {
  TranslationResult r;
  r.coverage_trace = {{{1.5, 2}, {3, 4}}, {{0.5, 1}, {2, 3}}};
  std::ostringstream out;
  write_coverage_dump(out, 3, r);
  EXPECT_EQ(out.str(),
            "3\t0\t0\t1.500000\t3.000000\n3\t0\t1\t2.000000\t4.000000\n"
            "3\t1\t0\t0.500000\t2.000000\n3\t1\t1\t1.000000\t3.000000\n");
}

}  // namespace
}  // namespace covnmt
