#include "covnmt/synthetic.hpp"

#include <cctype>
#include <string>

#include "covnmt/errors.hpp"
#include "covnmt/random.hpp"

namespace covnmt {

namespace {

bool even_id(const std::string& token) {
  std::size_t k = token.size();
  while (k > 0 && std::isdigit(static_cast<unsigned char>(token[k - 1]))) --k;
  if (k == token.size()) return false;
  return (token.back() - '0') % 2 == 0;
}

}  // namespace

SyntheticTask parse_synthetic_task(std::string_view text) {
  if (text == "copy") return SyntheticTask::copy;
  if (text == "reverse") return SyntheticTask::reverse;
  if (text == "fertility") return SyntheticTask::fertility;
  throw ConfigError("task: expected copy|reverse|fertility, got '" + std::string(text) + "'");
}

void synthesize(SyntheticTask task, const Sentence& source, Sentence& target, Links& links) {
  target.clear();
  links.clear();
  const std::size_t l = source.size();
  switch (task) {
    case SyntheticTask::copy:
      target = source;
      for (std::size_t i = 0; i < l; ++i) links.emplace_back(i, i);
      break;
    case SyntheticTask::reverse:
      target.assign(source.rbegin(), source.rend());
      for (std::size_t i = 0; i < l; ++i) links.emplace_back(i, l - 1 - i);
      break;
    case SyntheticTask::fertility:
      for (std::size_t i = 0; i < l; ++i) {
        if (even_id(source[i])) {
          links.emplace_back(i, target.size());
          target.push_back(source[i] + "_1");
          links.emplace_back(i, target.size());
          target.push_back(source[i] + "_2");
        } else {
          links.emplace_back(i, target.size());
          target.push_back(source[i]);
        }
      }
      break;
  }
}

SyntheticCorpus generate_synthetic(SyntheticTask task, const SyntheticOptions& o) {
  if (o.size == 0) throw ConfigError("size must be at least 1");
  if (o.vocab == 0) throw ConfigError("vocab must be at least 1");
  if (o.min_len == 0 || o.min_len > o.max_len) throw ConfigError("lengths: need 1 <= min_len <= max_len");
  Rng rng(o.seed);
  SyntheticCorpus c;
  c.source.resize(o.size);
  c.target.resize(o.size);
  c.links.resize(o.size);
  for (std::size_t k = 0; k < o.size; ++k) {
    const std::size_t len = o.min_len + rng.below(o.max_len - o.min_len + 1);
    for (std::size_t i = 0; i < len; ++i) c.source[k].push_back("w" + std::to_string(rng.below(o.vocab)));
    synthesize(task, c.source[k], c.target[k], c.links[k]);
  }
  return c;
}

}  // namespace covnmt
