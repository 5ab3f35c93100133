#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "covnmt/corpus.hpp"

namespace covnmt {

enum class SyntheticTask { copy, reverse, fertility };

SyntheticTask parse_synthetic_task(std::string_view text);

struct SyntheticCorpus {
  std::vector<Sentence> source;
  std::vector<Sentence> target;
  std::vector<Links> links;
};

struct SyntheticOptions {
  std::size_t size = 1000;
  std::size_t vocab = 20;  // source words w0 .. w{vocab-1}
  std::size_t min_len = 5;
  std::size_t max_len = 12;
  std::uint64_t seed = 1;
};

// Target and gold links for one source sentence.
//   copy:      target = source, links i-i
//   reverse:   target = reversed source, links i-(l-1-i)
//   fertility: a token whose trailing number is even expands to "<tok>_1 <tok>_2",
//              odd ones are copied; links follow the expansion
void synthesize(SyntheticTask task, const Sentence& source, Sentence& target, Links& links);

SyntheticCorpus generate_synthetic(SyntheticTask task, const SyntheticOptions& options);

}  // namespace covnmt
