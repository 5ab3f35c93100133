#include <gtest/gtest.h>

#include "covnmt/coverage.hpp"
#include "covnmt/embedding.hpp"
#include "covnmt/grad_check.hpp"
#include "covnmt/objective.hpp"
#include "test_util.hpp"

namespace covnmt {
namespace {

using testing::random_tensor;
using testing::tiny_dims;

CoverageState<double> state_of(Tensor<double> m, CoverageRule rule, Mask mask = {}) {
  CoverageState<double> s;
  if (mask.empty()) mask.assign(m.rows(), 1);
  s.matrix = std::move(m);
  s.rule = rule;
  s.mask = std::move(mask);
  return s;
}

void zero_all(CoverageGruWeights<double>& w) {
  for (auto* t : {&w.w_zy, &w.w_za, &w.u_z, &w.w_ry, &w.w_ra, &w.u_r, &w.w_y, &w.w_a, &w.u})
    for (auto& v : t->values()) v = 0;
}

TEST(InitCoverage, RepeatedWordsShareRowsAndStepIsZero) {
  const auto p = ModelParams<double>::init(tiny_dims(), CoverageMode::gru, 1);
  Tape<double> tape;
  const auto c = init_coverage(tape, p.cov_gru->table, std::vector<TokenId>{5, 5}, CoverageRule::gru);
  EXPECT_EQ(c.step, 0u);
  for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(c.matrix(0, j), c.matrix(1, j));
  EXPECT_THROW(init_coverage(tape, p.cov_gru->table, std::vector<TokenId>{70}, CoverageRule::gru), IndexError);
}

TEST(InitCoverage, GradientFlowsIntoLookedUpRows) {
  const auto p = ModelParams<double>::init(tiny_dims(), CoverageMode::sub, 2);
  Tape<double> tape;
  const auto c = init_coverage(tape, p.cov_sub->table, std::vector<TokenId>{4, 6}, CoverageRule::sub);
  tape.backward(tape.sum(c.matrix));
  const auto g = p.cov_sub->table.matrix.grad();
  for (std::size_t r = 0; r < 7; ++r)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(g[r * 3 + j], (r == 4 || r == 6) ? 1.0 : 0.0);
}

TEST(UpdateGru, ZeroParamsHalveTheRow) {
  auto p = ModelParams<double>::init(tiny_dims(), CoverageMode::gru, 3);
  zero_all(*p.cov_gru);
  Tape<double> tape;
  const auto cov = state_of(Tensor<double>(Shape{2, 3}, {1, -2, 4, 0.5, 0.25, 8}), CoverageRule::gru);
  const auto next = update_gru(tape, *p.cov_gru, cov, Tensor<double>::row({1, 2, 3}), Tensor<double>::row({0.3, 0.7}));
  for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(next.matrix.values()[i], 0.5 * cov.matrix.values()[i]);
  EXPECT_EQ(next.step, 1u);
}

TEST(UpdateGru, SaturatedUpdateGateKeepsOldMemory) {
  auto p = ModelParams<double>::init(tiny_dims(), CoverageMode::gru, 4, 0.5);
  for (auto& v : p.cov_gru->w_za.values()) v = 1e4;
  Tape<double> tape;
  const auto cov = state_of(Tensor<double>(Shape{2, 3}, {0.1, -0.2, 0.3, 0.4, 0.5, -0.6}), CoverageRule::gru);
  const auto next = update_gru(tape, *p.cov_gru, cov, Tensor<double>::row({0.1, 0.2, 0.3}), Tensor<double>::row({0.5, 0.5}));
  for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(next.matrix.values()[i], cov.matrix.values()[i], 1e-12);
}

TEST(UpdateGru, GradientCheckOverAllNineMatrices) {
  auto p = ModelParams<double>::init(tiny_dims(), CoverageMode::gru, 5, 0.7);
  Rng rng(6);
  auto c = random_tensor(rng, {3, 3}), y = random_tensor(rng, {1, 3});
  const auto alpha = Tensor<double>::row({0.2, 0.5, 0.3});
  const auto& w = *p.cov_gru;
  const std::vector<NamedParam<double>> ps{{"w_zy", w.w_zy}, {"w_za", w.w_za}, {"u_z", w.u_z}, {"w_ry", w.w_ry},
                                           {"w_ra", w.w_ra}, {"u_r", w.u_r},   {"w_y", w.w_y}, {"w_a", w.w_a},
                                           {"u", w.u},       {"c", c},         {"y", y}};
  const auto err = grad_check<double>(
      [&](Tape<double>& t) {
        const auto next = update_gru(t, w, state_of(c, CoverageRule::gru), y, alpha);
        return t.sum(t.tanh(next.matrix));
      },
      ps, 1e-4);
  EXPECT_LT(err, 1e-6);
}

TEST(UpdateSub, ZeroAttentionLeavesRow) {
  const auto p = ModelParams<double>::init(tiny_dims(), CoverageMode::sub, 7);
  Tape<double> tape;
  const auto cov = state_of(Tensor<double>(Shape{2, 3}, {1, 2, 3, 4, 5, 6}), CoverageRule::sub);
  const auto next = update_sub(tape, *p.cov_sub, cov, Tensor<double>::row({1, 1, 1}), Tensor<double>::row({0, 1}));
  for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(next.matrix(0, j), cov.matrix(0, j));
}

TEST(UpdateSub, FullAttentionOnMatchingProjectionEmptiesRow) {
  auto p = ModelParams<double>::init(tiny_dims(), CoverageMode::sub, 8);
  // emb(y) = e_0, so emb(y) W_yc is row 0 of W_yc.
  for (std::size_t j = 0; j < 3; ++j) p.cov_sub->w_yc(0, j) = 0.25 * static_cast<double>(j + 1);
  Tape<double> tape;
  const auto cov = state_of(Tensor<double>(Shape{2, 3}, {9, 9, 9, 0.25, 0.5, 0.75}), CoverageRule::sub);
  const auto next = update_sub(tape, *p.cov_sub, cov, Tensor<double>::row({1, 0, 0}), Tensor<double>::row({0, 1}));
  for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(next.matrix(1, j), 0.0);
}

TEST(UpdateSub, MatchesHandSubtraction) {
  const auto p = ModelParams<double>::init(tiny_dims(), CoverageMode::sub, 9, 0.5);
  Rng rng(10);
  const auto c = random_tensor(rng, {2, 3}, 1.0, false), y = random_tensor(rng, {1, 3}, 1.0, false);
  Tape<double> tape;
  const auto next = update_sub(tape, *p.cov_sub, state_of(c, CoverageRule::sub), y, Tensor<double>::row({0.3, 0.7}));
  const double alpha[2] = {0.3, 0.7};
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      double proj = 0;
      for (std::size_t k = 0; k < 3; ++k) proj += y(0, k) * p.cov_sub->w_yc(k, j);
      EXPECT_NEAR(next.matrix(i, j), c(i, j) - alpha[i] * proj, 1e-15);
    }
}

TEST(UpdateSub, LinearInPreviousCoverage) {
  const auto p = ModelParams<double>::init(tiny_dims(), CoverageMode::sub, 11, 0.5);
  Rng rng(12);
  const auto a = random_tensor(rng, {3, 3}, 1.0, false), b = random_tensor(rng, {3, 3}, 1.0, false);
  const auto y = random_tensor(rng, {1, 3}, 1.0, false);
  const auto alpha = Tensor<double>::row({0.1, 0.6, 0.3});
  Tape<double> tape;
  const auto ab = update_sub(tape, *p.cov_sub, state_of(tape.add(a, b), CoverageRule::sub), y, alpha);
  const auto only_b = update_sub(tape, *p.cov_sub, state_of(b, CoverageRule::sub), y, alpha);
  for (std::size_t i = 0; i < 9; ++i)
    EXPECT_NEAR(ab.matrix.values()[i] - only_b.matrix.values()[i], a.values()[i], 1e-14);
}

TEST(Updates, Errors) {
  const auto p = ModelParams<double>::init(tiny_dims(), CoverageMode::both, 13);
  Tape<double> tape;
  const auto g = state_of(Tensor<double>(Shape{2, 3}), CoverageRule::gru);
  const auto s = state_of(Tensor<double>(Shape{2, 3}), CoverageRule::sub);
  const auto y = Tensor<double>::row({1, 2, 3});
  EXPECT_THROW(update_gru(tape, *p.cov_gru, s, y, Tensor<double>::row({0.5, 0.5})), ConfigError);
  EXPECT_THROW(update_sub(tape, *p.cov_sub, g, y, Tensor<double>::row({0.5, 0.5})), ConfigError);
  EXPECT_THROW(update_gru(tape, *p.cov_gru, g, y, Tensor<double>::row({1, 0, 0})), DimensionError);
  EXPECT_THROW(update_sub(tape, *p.cov_sub, s, y, Tensor<double>::row({1.0})), DimensionError);
  EXPECT_THROW(step_all(tape, p, CoverageStates<double>{g}, y, Tensor<double>::row({0.5, 0.5})), ConfigError);
}

TEST(Updates, PadRowsAreBitIdentical) {
  const auto p = ModelParams<double>::init(tiny_dims(), CoverageMode::both, 14, 0.5);
  const std::vector<TokenId> ids{4, kPad, 6};
  Tape<double> tape;
  auto states = init_coverage_states(tape, p, ids);
  const auto before = states;
  Rng rng(15);
  for (int t = 0; t < 4; ++t)
    states = step_all(tape, p, states, random_tensor(rng, {1, 3}, 1.0, false), Tensor<double>::row({0.5, 0, 0.5}));
  for (std::size_t k = 0; k < 2; ++k)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(states[k].matrix(1, j), before[k].matrix(1, j));
}

TEST(StepAll, BaseIsNoOp) {
  const auto p = ModelParams<double>::init(tiny_dims(), CoverageMode::base, 16);
  Tape<double> tape;
  const auto states = init_coverage_states(tape, p, std::vector<TokenId>{4, 5});
  EXPECT_TRUE(states.empty());
  EXPECT_TRUE(step_all(tape, p, states, Tensor<double>::row({1, 2, 3}), Tensor<double>::row({0.5, 0.5})).empty());
}

TEST(StepAll, BothAppliesEachRuleWithSameAlpha) {
  const auto p = ModelParams<double>::init(tiny_dims(), CoverageMode::both, 17, 0.5);
  const std::vector<TokenId> ids{4, 5, 6};
  Tape<double> tape;
  const auto states = init_coverage_states(tape, p, ids);
  ASSERT_EQ(states[0].rule, CoverageRule::gru);
  ASSERT_EQ(states[1].rule, CoverageRule::sub);
  const auto y = Tensor<double>::row({0.3, -0.1, 0.2});
  const auto alpha = Tensor<double>::row({0.2, 0.3, 0.5});
  const auto both = step_all(tape, p, states, y, alpha);
  const auto g = update_gru(tape, *p.cov_gru, states[0], y, alpha);
  const auto s = update_sub(tape, *p.cov_sub, states[1], y, alpha);
  for (std::size_t i = 0; i < 9; ++i) {
    EXPECT_EQ(both[0].matrix.values()[i], g.matrix.values()[i]);
    EXPECT_EQ(both[1].matrix.values()[i], s.matrix.values()[i]);
  }
}

TEST(StepAll, TrainingRunPerformsOneUpdatePerTargetStep) {
  const auto p = ModelParams<double>::init(tiny_dims(), CoverageMode::both, 18);
  TrainingExample ex{{4, 5, 6}, {4, 5, 4, 5}, std::nullopt};
  Tape<double> tape;
  const auto run = run_sentence(tape, p, ex, ObjectiveConfig{});
  ASSERT_EQ(run.coverage.size(), 6u);  // m = 5 with EOS, plus the initial states
  for (std::size_t t = 0; t < run.coverage.size(); ++t)
    for (const auto& s : run.coverage[t]) EXPECT_EQ(s.step, t);
}

TEST(RowL1, SumsAbsoluteValues) {
  const auto s = state_of(Tensor<double>(Shape{2, 2}, {1, -2, 0, 3}), CoverageRule::sub);
  EXPECT_EQ(row_l1(s), (std::vector<double>{3, 3}));
}

}  // namespace
}  // namespace covnmt
