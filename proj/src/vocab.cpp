#include "covnmt/vocab.hpp"

#include <algorithm>
#include <fstream>

#include "covnmt/errors.hpp"

namespace covnmt {

const std::vector<std::string>& reserved_tokens() {
  static const std::vector<std::string> tokens{"<pad>", "<unk>", "<s>", "</s>"};
  return tokens;
}

Vocabulary::Vocabulary() {
  for (const auto& t : reserved_tokens()) add(t);
}

void Vocabulary::add(const std::string& token) {
  index_.emplace(token, tokens_.size());
  tokens_.push_back(token);
}

Vocabulary Vocabulary::build(std::span<const Sentence> corpus, std::size_t max_size) {
  if (max_size < kReservedTokens)
    throw ConfigError("vocabulary size " + std::to_string(max_size) + " cannot hold the 4 reserved tokens");
  struct Count {
    std::size_t freq = 0;
    std::size_t first = 0;
  };
  std::unordered_map<std::string, Count> counts;
  std::vector<std::string> order;
  std::size_t position = 0;
  for (const auto& sentence : corpus)
    for (const auto& tok : sentence) {
      auto [it, inserted] = counts.try_emplace(tok, Count{0, position});
      if (inserted) order.push_back(tok);
      ++it->second.freq;
      ++position;
    }
  if (position == 0) throw EmptyInputError("cannot build a vocabulary from an empty corpus");

  const auto& reserved = reserved_tokens();
  std::erase_if(order, [&](const std::string& t) {
    return std::find(reserved.begin(), reserved.end(), t) != reserved.end();
  });
  std::stable_sort(order.begin(), order.end(), [&](const std::string& a, const std::string& b) {
    return counts[a].freq > counts[b].freq;
  });
  Vocabulary vocab;
  const std::size_t keep = std::min(order.size(), max_size - kReservedTokens);
  for (std::size_t i = 0; i < keep; ++i) vocab.add(order[i]);
  return vocab;
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open vocabulary file " + path.string());
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  const auto& reserved = reserved_tokens();
  if (lines.size() < kReservedTokens || !std::equal(reserved.begin(), reserved.end(), lines.begin()))
    throw DataError("vocabulary file " + path.string() + " does not start with the reserved tokens");
  Vocabulary vocab;
  for (std::size_t i = kReservedTokens; i < lines.size(); ++i) {
    if (lines[i].empty() || vocab.contains(lines[i]))
      throw DataError("vocabulary file " + path.string() + ": bad or duplicate token on line " +
                      std::to_string(i + 1));
    vocab.add(lines[i]);
  }
  return vocab;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write vocabulary file " + path.string());
  for (const auto& t : tokens_) out << t << '\n';
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id >= tokens_.size()) throw IndexError("token id " + std::to_string(id) + " out of range");
  return tokens_[id];
}

TokenId Vocabulary::id(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

std::vector<TokenId> Vocabulary::encode(std::span<const std::string> sentence) const {
  std::vector<TokenId> ids;
  ids.reserve(sentence.size());
  for (const auto& t : sentence) ids.push_back(id(t));
  return ids;
}

std::vector<std::string> Vocabulary::decode(std::span<const TokenId> ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (TokenId id : ids) out.push_back(token(id));
  return out;
}

}  // namespace covnmt
