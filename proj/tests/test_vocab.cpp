#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "covnmt/coverage.hpp"
#include "covnmt/embedding.hpp"
#include "covnmt/grad_check.hpp"
#include "covnmt/vocab.hpp"
#include "test_util.hpp"

namespace covnmt {
namespace {

namespace fs = std::filesystem;

fs::path temp_path(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "covnmt_vocab_test";
  fs::create_directories(dir);
  return dir / name;
}

TEST(Vocabulary, FrequencyOrder) {
  const std::vector<Sentence> corpus{{"a", "a", "b"}};
  const auto v = Vocabulary::build(corpus, 6);
  EXPECT_EQ(v.tokens(), (std::vector<std::string>{"<pad>", "<unk>", "<s>", "</s>", "a", "b"}));
}

TEST(Vocabulary, UnseenTokenIsUnk) {
  const std::vector<Sentence> corpus{{"a"}};
  EXPECT_EQ(Vocabulary::build(corpus, 10).id("zzz"), kUnk);
}

TEST(Vocabulary, TiesGoToFirstOccurrence) {
  const std::vector<Sentence> corpus{{"b", "a"}, {"b", "a"}};
  const auto v = Vocabulary::build(corpus, 10);
  EXPECT_EQ(v.id("b"), 4u);
  EXPECT_EQ(v.id("a"), 5u);
}

TEST(Vocabulary, SizeCapDropsRareTokens) {
  const std::vector<Sentence> corpus{{"x", "y", "y", "z", "z", "z"}};
  const auto v = Vocabulary::build(corpus, 6);
  EXPECT_EQ(v.size(), 6u);
  EXPECT_EQ(v.id("z"), 4u);
  EXPECT_EQ(v.id("y"), 5u);
  EXPECT_EQ(v.id("x"), kUnk);
}

TEST(Vocabulary, ReservedIdsFixed) {
  const Vocabulary v;
  EXPECT_EQ(v.size(), kReservedTokens);
  EXPECT_EQ(v.token(kPad), "<pad>");
  EXPECT_EQ(v.token(kUnk), "<unk>");
  EXPECT_EQ(v.token(kBos), "<s>");
  EXPECT_EQ(v.token(kEos), "</s>");
  EXPECT_THROW(v.token(4), IndexError);
}

TEST(Vocabulary, ReservedSpellingsInCorpusAreNotDuplicated) {
  const std::vector<Sentence> corpus{{"<unk>", "a"}};
  const auto v = Vocabulary::build(corpus, 10);
  EXPECT_EQ(v.size(), 5u);
  EXPECT_EQ(v.id("<unk>"), kUnk);
}

TEST(Vocabulary, Errors) {
  EXPECT_THROW(Vocabulary::build(std::vector<Sentence>{}, 10), EmptyInputError);
  EXPECT_THROW(Vocabulary::build(std::vector<Sentence>{{"a"}}, 3), ConfigError);
}

TEST(Vocabulary, EncodeDecode) {
  const std::vector<Sentence> corpus{{"a", "b"}};
  const auto v = Vocabulary::build(corpus, 10);
  const Sentence s{"b", "q", "a"};
  const auto ids = v.encode(s);
  EXPECT_EQ(ids, (std::vector<TokenId>{5, kUnk, 4}));
  EXPECT_EQ(v.decode(ids), (Sentence{"b", "<unk>", "a"}));
}

TEST(Vocabulary, SaveLoadPreservesEveryPair) {
  Rng rng(7);
  std::vector<Sentence> corpus(50);
  for (auto& s : corpus)
    for (int i = 0; i < 10; ++i) s.push_back("t" + std::to_string(rng.below(40)));
  const auto v = Vocabulary::build(corpus, 30);
  const auto path = temp_path("round.vocab");
  v.save(path);
  const auto back = Vocabulary::load(path);
  EXPECT_EQ(back, v);
  for (TokenId id = 0; id < v.size(); ++id) EXPECT_EQ(back.id(v.token(id)), id);
}

TEST(Vocabulary, LoadRejectsBadFiles) {
  const auto bad_header = temp_path("bad_header.vocab");
  std::ofstream(bad_header) << "<unk>\n<pad>\n<s>\n</s>\na\n";
  EXPECT_THROW(Vocabulary::load(bad_header), DataError);
  const auto dup = temp_path("dup.vocab");
  std::ofstream(dup) << "<pad>\n<unk>\n<s>\n</s>\na\na\n";
  EXPECT_THROW(Vocabulary::load(dup), DataError);
  EXPECT_THROW(Vocabulary::load(temp_path("missing.vocab")), DataError);
}

TEST(Embedding, RepeatedIdsGiveIdenticalRows) {
  Rng rng(1);
  EmbeddingTable<double> table{testing::random_tensor(rng, {6, 3})};
  Tape<double> tape;
  const auto rows = lookup(tape, table, std::vector<TokenId>{0, 0});
  for (std::size_t c = 0; c < 3; ++c) {
    EXPECT_EQ(rows(0, c), table.matrix(0, c));
    EXPECT_EQ(rows(1, c), rows(0, c));
  }
}

TEST(Embedding, GradientScattersIntoLookedUpRowOnly) {
  Rng rng(2);
  EmbeddingTable<double> table{testing::random_tensor(rng, {6, 3})};
  Tape<double> tape;
  tape.backward(tape.sum(lookup(tape, table, TokenId{3})));
  for (std::size_t r = 0; r < 6; ++r)
    for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(table.matrix.grad()[r * 3 + c], r == 3 ? 1.0 : 0.0);
}

TEST(Embedding, GradientCheckWithRepeatedIds) {
  Rng rng(3);
  EmbeddingTable<double> table{testing::random_tensor(rng, {6, 3})};
  const std::vector<NamedParam<double>> ps{{"table", table.matrix}};
  const std::vector<TokenId> ids{2, 5, 2};
  EXPECT_LT(grad_check<double>([&](Tape<double>& t) { return t.sum(t.tanh(lookup(t, table, ids))); }, ps, 1e-4),
            1e-6);
}

TEST(Embedding, OutOfRangeNamesTheId) {
  EmbeddingTable<double> table{Tensor<double>(Shape{4, 2})};
  Tape<double> tape;
  try {
    lookup(tape, table, TokenId{17});
    FAIL();
  } catch (const IndexError& e) {
    EXPECT_NE(std::string(e.what()).find("17"), std::string::npos);
  }
}

TEST(Embedding, SourceMaskMarksPad) {
  EXPECT_EQ(source_mask(std::vector<TokenId>{5, kPad, 4}), (Mask{1, 0, 1}));
}

TEST(Embedding, CoverageInitEqualsTableLookup) {
  const auto params = ModelParams<double>::init(testing::tiny_dims(), CoverageMode::both, 4);
  const std::vector<TokenId> ids{4, 6, 4, 5};
  Tape<double> tape;
  const auto states = init_coverage_states(tape, params, ids);
  ASSERT_EQ(states.size(), 2u);
  const auto expect_gru = lookup(tape, params.cov_gru->table, ids);
  const auto expect_sub = lookup(tape, params.cov_sub->table, ids);
  for (std::size_t i = 0; i < expect_gru.size(); ++i) {
    EXPECT_EQ(states[0].matrix.values()[i], expect_gru.values()[i]);
    EXPECT_EQ(states[1].matrix.values()[i], expect_sub.values()[i]);
  }
}

}  // namespace
}  // namespace covnmt
