#include "covnmt/params.hpp"

#include <algorithm>

#include "covnmt/errors.hpp"
#include "covnmt/random.hpp"

namespace covnmt {

std::string_view to_string(CoverageMode m) {
  switch (m) {
    case CoverageMode::base: return "base";
    case CoverageMode::gru: return "gru";
    case CoverageMode::sub: return "sub";
    case CoverageMode::both: return "both";
  }
  return "base";
}

CoverageMode parse_coverage_mode(std::string_view text) {
  if (text == "base") return CoverageMode::base;
  if (text == "gru") return CoverageMode::gru;
  if (text == "sub") return CoverageMode::sub;
  if (text == "both") return CoverageMode::both;
  throw ConfigError("mode: expected base|gru|sub|both, got '" + std::string(text) + "'");
}

template <typename T>
template <typename F>
void ModelParams<T>::visit(F&& f) {
  const auto& d = dims;
  const std::size_t e = d.embed, h = d.hidden, a = d.attention, c = d.coverage;

  auto gru = [&](const std::string& prefix, GruWeights<T>& g, std::size_t in, std::size_t width) {
    f(prefix + ".u", g.u, Shape{width, width});
    f(prefix + ".u_r", g.u_r, Shape{width, width});
    f(prefix + ".u_z", g.u_z, Shape{width, width});
    f(prefix + ".w", g.w, Shape{in, width});
    f(prefix + ".w_r", g.w_r, Shape{in, width});
    f(prefix + ".w_z", g.w_z, Shape{in, width});
  };

  if (uses_gru(mode)) f("att.w_cov_gru", att.w_cov_gru, Shape{c, a});
  if (uses_sub(mode)) f("att.w_cov_sub", att.w_cov_sub, Shape{c, a});
  f("att.w_e", att.w_e, Shape{a, 1});
  f("att.w_h", att.w_h, Shape{2 * h, a});
  f("att.w_s", att.w_s, Shape{h, a});
  f("att.w_y", att.w_y, Shape{e, a});

  if (uses_gru(mode)) {
    if (!cov_gru) cov_gru.emplace();
    auto& g = *cov_gru;
    f("cov_gru.table", g.table.matrix, Shape{d.src_vocab, c});
    f("cov_gru.u", g.u, Shape{c, c});
    f("cov_gru.u_r", g.u_r, Shape{c, c});
    f("cov_gru.u_z", g.u_z, Shape{c, c});
    f("cov_gru.w_a", g.w_a, Shape{1, c});
    f("cov_gru.w_ra", g.w_ra, Shape{1, c});
    f("cov_gru.w_ry", g.w_ry, Shape{e, c});
    f("cov_gru.w_y", g.w_y, Shape{e, c});
    f("cov_gru.w_za", g.w_za, Shape{1, c});
    f("cov_gru.w_zy", g.w_zy, Shape{e, c});
  }
  if (uses_sub(mode)) {
    if (!cov_sub) cov_sub.emplace();
    f("cov_sub.table", cov_sub->table.matrix, Shape{d.src_vocab, c});
    f("cov_sub.w_yc", cov_sub->w_yc, Shape{e, c});
  }

  f("dec.init", dec_init, Shape{h, h});
  gru("dec", dec, e + 2 * h, h);
  gru("enc_bwd", enc_bwd, e, h);
  gru("enc_fwd", enc_fwd, e, h);

  f("out.w_o", out.w_o, Shape{h, h});
  f("out.w_oy", out.w_oy, Shape{e, h});
  f("out.w_v", out.w_v, Shape{h, d.tgt_vocab});

  f("src_embed", src_embed.matrix, Shape{d.src_vocab, e});
  f("tgt_embed", tgt_embed.matrix, Shape{d.tgt_vocab, e});
}

namespace {

void check_dims(const ModelDims& d) {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw ConfigError(std::string("model dimension '") + name + "' must be positive");
  };
  positive(d.src_vocab, "src_vocab");
  positive(d.tgt_vocab, "tgt_vocab");
  positive(d.embed, "d_emb");
  positive(d.hidden, "d_h");
  positive(d.attention, "d_att");
  positive(d.coverage, "d_c");
}

}  // namespace

template <typename T>
ModelParams<T> ModelParams<T>::init(const ModelDims& dims, CoverageMode mode, std::uint64_t seed,
                                    double range) {
  check_dims(dims);
  ModelParams p;
  p.dims = dims;
  p.mode = mode;
  p.visit([&](const std::string& name, Tensor<T>& t, Shape shape) {
    Rng rng(fnv1a(name) ^ (seed * 0x9E3779B97F4A7C15ULL + 0x632BE59BD9B4E019ULL));
    std::vector<T> values(shape.size());
    for (auto& v : values) v = static_cast<T>(rng.uniform(-range, range));
    t = Tensor<T>(shape, std::move(values), true);
  });
  return p;
}

template <typename T>
ModelParams<T> ModelParams<T>::zeros(const ModelDims& dims, CoverageMode mode) {
  check_dims(dims);
  ModelParams p;
  p.dims = dims;
  p.mode = mode;
  p.visit([](const std::string&, Tensor<T>& t, Shape shape) { t = Tensor<T>(shape, true); });
  return p;
}

template <typename T>
ModelParams<T> ModelParams<T>::from_tensors(const std::map<std::string, Tensor<T>>& tensors) {
  auto find = [&](const std::string& name) -> const Tensor<T>& {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw DataError("checkpoint is missing parameter '" + name + "'");
    return it->second;
  };
  ModelParams p;
  const bool gru = tensors.count("cov_gru.table") != 0;
  const bool sub = tensors.count("cov_sub.table") != 0;
  p.mode = gru && sub ? CoverageMode::both
           : gru      ? CoverageMode::gru
           : sub      ? CoverageMode::sub
                      : CoverageMode::base;
  p.dims.src_vocab = find("src_embed").rows();
  p.dims.embed = find("src_embed").cols();
  p.dims.tgt_vocab = find("tgt_embed").rows();
  p.dims.hidden = find("enc_fwd.u").rows();
  p.dims.attention = find("att.w_s").cols();
  if (gru) p.dims.coverage = find("cov_gru.table").cols();
  if (sub) p.dims.coverage = find("cov_sub.table").cols();

  std::size_t used = 0;
  p.visit([&](const std::string& name, Tensor<T>& t, Shape shape) {
    const auto& src = find(name);
    if (src.shape() != shape)
      throw DataError("parameter '" + name + "' has shape " + src.shape().str() + ", expected " +
                      shape.str());
    t = src;
    t.set_requires_grad(true);
    ++used;
  });
  if (used != tensors.size())
    throw DataError("checkpoint holds " + std::to_string(tensors.size() - used) +
                    " parameters not used by mode " + std::string(to_string(p.mode)));
  return p;
}

template <typename T>
std::vector<NamedParam<T>> ModelParams<T>::named() const {
  std::vector<NamedParam<T>> out;
  const_cast<ModelParams*>(this)->visit(
      [&](const std::string& name, Tensor<T>& t, Shape) { out.push_back({name, t}); });
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
  return out;
}

template <typename T>
std::size_t ModelParams<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : named()) n += p.tensor.size();
  return n;
}

template <typename T>
ModelParams<T> ModelParams<T>::clone() const {
  std::map<std::string, Tensor<T>> tensors;
  for (const auto& p : named()) tensors.emplace(p.name, p.tensor.clone());
  return from_tensors(tensors);
}

template <typename T>
void ModelParams<T>::zero_grad() const {
  for (auto p : named()) p.tensor.zero_grad();
}

template <typename T>
std::vector<std::pair<std::string, Shape>> ModelParams<T>::layout(const ModelDims& dims,
                                                                  CoverageMode mode) {
  ModelParams p;
  p.dims = dims;
  p.mode = mode;
  std::vector<std::pair<std::string, Shape>> out;
  p.visit([&](const std::string& name, Tensor<T>&, Shape shape) { out.emplace_back(name, shape); });
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  return out;
}

template class ModelParams<float>;
template class ModelParams<double>;

}  // namespace covnmt
