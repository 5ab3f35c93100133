#include "covnmt/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <set>

#include "covnmt/errors.hpp"

namespace covnmt {

std::vector<Link> extract_alignment(const std::vector<std::vector<double>>& attention, double threshold,
                                    std::size_t* malformed_rows) {
  std::vector<Link> links;
  for (std::size_t t = 0; t < attention.size(); ++t) {
    const auto& row = attention[t];
    if (row.empty()) continue;
    double total = 0;
    for (double v : row) total += v;
    if (std::abs(total - 1.0) > 1e-3) {
      if (malformed_rows) ++*malformed_rows;
      std::cerr << "warning: attention row " << t << " sums to " << total << '\n';
    }
    std::size_t best = 0;
    for (std::size_t j = 1; j < row.size(); ++j)
      if (row[j] > row[best]) best = j;
    if (row[best] > threshold) links.emplace_back(best, t);
  }
  return links;
}

void AlignmentCounts::add(std::span<const Link> predicted_links, std::span<const Link> gold_links) {
  const std::set<Link> p(predicted_links.begin(), predicted_links.end());
  const std::set<Link> g(gold_links.begin(), gold_links.end());
  predicted += p.size();
  gold += g.size();
  for (const auto& link : p) matched += g.count(link);
}

AlignmentScore AlignmentCounts::score() const {
  AlignmentScore s;
  const auto ratio = [](std::size_t num, std::size_t den, std::size_t other) {
    if (den == 0) return other == 0 ? 1.0 : 0.0;
    return static_cast<double>(num) / static_cast<double>(den);
  };
  s.precision = ratio(matched, predicted, gold);
  s.recall = ratio(matched, gold, predicted);
  s.f1 = s.precision + s.recall > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

AlignmentScore alignment_f1(std::span<const Link> predicted, std::span<const Link> gold) {
  AlignmentCounts counts;
  counts.add(predicted, gold);
  return counts.score();
}

std::size_t repetition_count(std::span<const std::string> tokens, std::size_t min_len) {
  if (min_len == 0) throw ConfigError("repetition_count: min_len must be at least 1");
  if (tokens.size() < min_len) return 0;
  std::set<std::vector<std::string>> seen;
  std::size_t repeats = 0;
  for (std::size_t p = 0; p + min_len <= tokens.size(); ++p) {
    std::vector<std::string> gram(tokens.begin() + static_cast<std::ptrdiff_t>(p),
                                  tokens.begin() + static_cast<std::ptrdiff_t>(p + min_len));
    if (!seen.insert(std::move(gram)).second) ++repeats;
  }
  return repeats;
}

namespace {

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

NgramCounts ngrams(const std::vector<std::string>& s, std::size_t n) {
  NgramCounts counts;
  for (std::size_t i = 0; i + n <= s.size(); ++i)
    ++counts[std::vector<std::string>(s.begin() + static_cast<std::ptrdiff_t>(i),
                                      s.begin() + static_cast<std::ptrdiff_t>(i + n))];
  return counts;
}

}  // namespace

double bleu4(std::span<const std::vector<std::string>> candidates,
             std::span<const std::vector<std::string>> references) {
  if (candidates.size() != references.size())
    throw DataError("bleu4: " + std::to_string(candidates.size()) + " candidates for " +
                    std::to_string(references.size()) + " references");
  if (candidates.empty()) throw EmptyInputError("bleu4: empty corpus");
  constexpr std::size_t kOrder = 4;
  std::size_t matched[kOrder] = {}, total[kOrder] = {};
  std::size_t cand_len = 0, ref_len = 0;
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    cand_len += candidates[k].size();
    ref_len += references[k].size();
    for (std::size_t n = 1; n <= kOrder; ++n) {
      const auto c = ngrams(candidates[k], n);
      const auto r = ngrams(references[k], n);
      for (const auto& [gram, count] : c) {
        total[n - 1] += count;
        auto it = r.find(gram);
        if (it != r.end()) matched[n - 1] += std::min(count, it->second);
      }
    }
  }
  double log_sum = 0;
  for (std::size_t n = 0; n < kOrder; ++n) {
    if (matched[n] == 0) return 0.0;
    log_sum += std::log(static_cast<double>(matched[n]) / static_cast<double>(total[n]));
  }
  const double brevity =
      cand_len >= ref_len ? 1.0 : std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(cand_len));
  return brevity * std::exp(log_sum / kOrder);
}

double token_accuracy(std::span<const std::vector<std::string>> hypotheses,
                      std::span<const std::vector<std::string>> references) {
  if (hypotheses.size() != references.size())
    throw DataError("accuracy: " + std::to_string(hypotheses.size()) + " hypotheses for " +
                    std::to_string(references.size()) + " references");
  std::size_t correct = 0, total = 0;
  for (std::size_t k = 0; k < references.size(); ++k) {
    total += references[k].size();
    const std::size_t n = std::min(hypotheses[k].size(), references[k].size());
    for (std::size_t i = 0; i < n; ++i) correct += hypotheses[k][i] == references[k][i];
  }
  return total ? static_cast<double>(correct) / static_cast<double>(total) : 1.0;
}

}  // namespace covnmt
