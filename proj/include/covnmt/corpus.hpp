#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "covnmt/objective.hpp"
#include "covnmt/vocab.hpp"

namespace covnmt {

using Links = std::vector<Link>;

// Whitespace-separated tokens; blank lines give empty sentences.
Sentence tokenize(std::string_view line);
std::string join(const Sentence& sentence);

std::vector<Sentence> read_sentences(std::istream& in);
std::vector<Sentence> read_sentences(const std::filesystem::path& path);
void write_sentences(std::ostream& out, std::span<const Sentence> sentences);
void write_sentences(const std::filesystem::path& path, std::span<const Sentence> sentences);

// Pharaoh "i-j" pairs, one sentence per line. `line` is 1-based, for messages.
Links parse_links(std::string_view text, std::size_t line = 0);
std::string format_links(std::span<const Link> links);
std::vector<Links> read_links(const std::filesystem::path& path);
void write_links(const std::filesystem::path& path, std::span<const Links> links);

// Pairs source and target lines (and alignments when given). Throws DataError
// naming the first line where the files disagree in length, or where a link
// points outside its sentence pair.
std::vector<TrainingExample> make_examples(std::span<const Sentence> source, std::span<const Sentence> target,
                                           const std::optional<std::vector<Links>>& links,
                                           const Vocabulary& src_vocab, const Vocabulary& tgt_vocab);

// Throws DataError("... line N") if the two counts differ; N is the first line
// present in only one file.
void check_parallel(std::size_t a, std::size_t b, std::string_view a_name, std::string_view b_name);

}  // namespace covnmt
