#include "covnmt/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

#include "covnmt/errors.hpp"

namespace covnmt {

namespace {

constexpr char kMagic[] = "CVNMT1";
constexpr std::size_t kMagicLen = 6;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  bool done() const { return pos_ == bytes_.size(); }

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }

  std::string take(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw DataError("checkpoint is truncated");
  }

  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

template <typename T>
std::string serialize_checkpoint(const ModelParams<T>& params) {
  std::string out(kMagic, kMagicLen);
  for (const auto& p : params.named()) {
    put_u32(out, static_cast<std::uint32_t>(p.name.size()));
    out += p.name;
    put_u32(out, 2);
    put_u32(out, static_cast<std::uint32_t>(p.tensor.rows()));
    put_u32(out, static_cast<std::uint32_t>(p.tensor.cols()));
    for (T v : p.tensor.values()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  return out;
}

template <typename T>
ModelParams<T> deserialize_checkpoint(const std::string& bytes) {
  if (bytes.size() < kMagicLen || bytes.compare(0, kMagicLen, kMagic) != 0)
    throw DataError("not a checkpoint (bad magic)");
  Reader in(bytes);
  in.take(kMagicLen);
  std::map<std::string, Tensor<T>> tensors;
  while (!in.done()) {
    const std::string name = in.take(in.u32());
    const std::uint32_t rank = in.u32();
    if (rank != 2) throw DataError("parameter '" + name + "' has unsupported rank " + std::to_string(rank));
    const std::size_t rows = in.u32(), cols = in.u32();
    if (rows == 0 || cols == 0) throw DataError("parameter '" + name + "' has an empty extent");
    std::vector<T> values(rows * cols);
    for (auto& v : values) v = static_cast<T>(std::bit_cast<float>(in.u32()));
    if (!tensors.emplace(name, Tensor<T>(Shape{rows, cols}, std::move(values), true)).second)
      throw DataError("parameter '" + name + "' appears twice");
  }
  return ModelParams<T>::from_tensors(tensors);
}

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const ModelParams<T>& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  const auto bytes = serialize_checkpoint(params);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

template <typename T>
ModelParams<T> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint<T>(bytes);
}

template std::string serialize_checkpoint(const ModelParams<float>&);
template std::string serialize_checkpoint(const ModelParams<double>&);
template ModelParams<float> deserialize_checkpoint(const std::string&);
template ModelParams<double> deserialize_checkpoint(const std::string&);
template void save_checkpoint(const std::filesystem::path&, const ModelParams<float>&);
template void save_checkpoint(const std::filesystem::path&, const ModelParams<double>&);
template ModelParams<float> load_checkpoint(const std::filesystem::path&);
template ModelParams<double> load_checkpoint(const std::filesystem::path&);

}  // namespace covnmt
