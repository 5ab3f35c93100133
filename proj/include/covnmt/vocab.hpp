#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace covnmt {

using TokenId = std::size_t;
using Sentence = std::vector<std::string>;

inline constexpr TokenId kPad = 0;
inline constexpr TokenId kUnk = 1;
inline constexpr TokenId kBos = 2;
inline constexpr TokenId kEos = 3;
inline constexpr std::size_t kReservedTokens = 4;

// Token <-> id map with PAD, UNK, BOS and EOS pinned to ids 0..3.
class Vocabulary {
 public:
  Vocabulary();

  // Keeps the max_size - 4 most frequent tokens; ties go to the token seen
  // first in the stream.
  static Vocabulary build(std::span<const Sentence> corpus, std::size_t max_size);

  // One token per line, line number = id, reserved tokens on lines 0-3.
  static Vocabulary load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::string& token(TokenId id) const;
  // Unknown tokens map to kUnk.
  TokenId id(const std::string& token) const;
  bool contains(const std::string& token) const { return index_.count(token) != 0; }

  std::vector<TokenId> encode(std::span<const std::string> sentence) const;
  std::vector<std::string> decode(std::span<const TokenId> ids) const;

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  void add(const std::string& token);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

const std::vector<std::string>& reserved_tokens();

}  // namespace covnmt
