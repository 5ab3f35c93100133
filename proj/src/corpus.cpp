#include "covnmt/corpus.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "covnmt/errors.hpp"

namespace covnmt {

namespace {

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

std::string at_line(std::size_t line) { return line ? " at line " + std::to_string(line) : std::string(); }

}  // namespace

Sentence tokenize(std::string_view line) {
  Sentence out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string join(const Sentence& sentence) {
  std::string out;
  for (std::size_t i = 0; i < sentence.size(); ++i) {
    if (i) out += ' ';
    out += sentence[i];
  }
  return out;
}

std::vector<Sentence> read_sentences(std::istream& in) {
  std::vector<Sentence> out;
  std::string line;
  while (std::getline(in, line)) out.push_back(tokenize(line));
  return out;
}

std::vector<Sentence> read_sentences(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_sentences(in);
}

void write_sentences(std::ostream& out, std::span<const Sentence> sentences) {
  for (const auto& s : sentences) out << join(s) << '\n';
}

void write_sentences(const std::filesystem::path& path, std::span<const Sentence> sentences) {
  auto out = open_out(path);
  write_sentences(out, sentences);
}

Links parse_links(std::string_view text, std::size_t line) {
  Links out;
  for (const auto& tok : tokenize(text)) {
    const auto dash = tok.find('-');
    std::size_t i = 0, j = 0;
    const char* end = tok.data() + tok.size();
    bool ok = dash != std::string::npos && dash > 0 && dash + 1 < tok.size();
    if (ok) {
      auto r1 = std::from_chars(tok.data(), tok.data() + dash, i);
      auto r2 = std::from_chars(tok.data() + dash + 1, end, j);
      ok = r1.ec == std::errc() && r1.ptr == tok.data() + dash && r2.ec == std::errc() && r2.ptr == end;
    }
    if (!ok) throw DataError("malformed alignment link '" + tok + "'" + at_line(line));
    out.emplace_back(i, j);
  }
  return out;
}

std::string format_links(std::span<const Link> links) {
  std::string out;
  for (std::size_t k = 0; k < links.size(); ++k) {
    if (k) out += ' ';
    out += std::to_string(links[k].first) + "-" + std::to_string(links[k].second);
  }
  return out;
}

std::vector<Links> read_links(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::vector<Links> out;
  std::string line;
  while (std::getline(in, line)) out.push_back(parse_links(line, out.size() + 1));
  return out;
}

void write_links(const std::filesystem::path& path, std::span<const Links> links) {
  auto out = open_out(path);
  for (const auto& l : links) out << format_links(l) << '\n';
}

void check_parallel(std::size_t a, std::size_t b, std::string_view a_name, std::string_view b_name) {
  if (a == b) return;
  const std::size_t line = std::min(a, b) + 1;
  throw DataError(std::string(a_name) + " has " + std::to_string(a) + " lines but " + std::string(b_name) +
                  " has " + std::to_string(b) + ": mismatch at line " + std::to_string(line));
}

std::vector<TrainingExample> make_examples(std::span<const Sentence> source, std::span<const Sentence> target,
                                           const std::optional<std::vector<Links>>& links,
                                           const Vocabulary& src_vocab, const Vocabulary& tgt_vocab) {
  check_parallel(source.size(), target.size(), "source", "target");
  if (links) check_parallel(source.size(), links->size(), "source", "alignment");
  std::vector<TrainingExample> out;
  out.reserve(source.size());
  for (std::size_t k = 0; k < source.size(); ++k) {
    if (source[k].empty()) throw DataError("empty source sentence at line " + std::to_string(k + 1));
    TrainingExample ex;
    ex.source = src_vocab.encode(source[k]);
    ex.target = tgt_vocab.encode(target[k]);
    if (links) {
      for (const auto& [i, j] : (*links)[k])
        if (i >= source[k].size() || j >= target[k].size())
          throw DataError("alignment link " + std::to_string(i) + "-" + std::to_string(j) +
                          " is outside the sentence pair at line " + std::to_string(k + 1));
      ex.links = (*links)[k];
    }
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace covnmt
