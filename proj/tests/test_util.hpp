#pragma once

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "covnmt/grad_check.hpp"
#include "covnmt/params.hpp"
#include "covnmt/random.hpp"
#include "covnmt/tensor.hpp"

namespace covnmt::testing {

inline Tensor<double> random_tensor(Rng& rng, Shape shape, double range = 1.0, bool requires_grad = true) {
  std::vector<double> v(shape.size());
  for (auto& x : v) x = rng.uniform(-range, range);
  return Tensor<double>(shape, std::move(v), requires_grad);
}

inline ModelDims tiny_dims(std::size_t src_vocab = 7, std::size_t tgt_vocab = 6) {
  ModelDims d;
  d.src_vocab = src_vocab;
  d.tgt_vocab = tgt_vocab;
  d.embed = 3;
  d.hidden = 4;
  d.attention = 5;
  d.coverage = 3;
  return d;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double worst = 0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("covnmt_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace covnmt::testing
