#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "covnmt/objective.hpp"

namespace covnmt {

struct AlignmentScore {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
};

// Link counts summed over a corpus.
struct AlignmentCounts {
  std::size_t matched = 0;
  std::size_t predicted = 0;
  std::size_t gold = 0;

  void add(std::span<const Link> predicted_links, std::span<const Link> gold_links);
  AlignmentScore score() const;
};

// For each target step t keep (argmax_j alpha_{t,j}, t) when that probability
// is strictly above threshold. Ties pick the lowest j. Rows that are not
// distributions are still processed; malformed_rows (if given) counts them.
std::vector<Link> extract_alignment(const std::vector<std::vector<double>>& attention, double threshold = 0.2,
                                    std::size_t* malformed_rows = nullptr);

// Duplicate links count once.
AlignmentScore alignment_f1(std::span<const Link> predicted, std::span<const Link> gold);

// Positions p whose min_len-gram already started at an earlier position.
std::size_t repetition_count(std::span<const std::string> tokens, std::size_t min_len = 4);

// Corpus BLEU-4: geometric mean of clipped 1..4-gram precisions times the
// brevity penalty. One reference per candidate.
double bleu4(std::span<const std::vector<std::string>> candidates,
             std::span<const std::vector<std::string>> references);

// Fraction of reference positions whose hypothesis token matches.
double token_accuracy(std::span<const std::vector<std::string>> hypotheses,
                      std::span<const std::vector<std::string>> references);

}  // namespace covnmt
