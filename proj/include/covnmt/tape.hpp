#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "covnmt/tensor.hpp"

namespace covnmt {

// Records differentiable operations in execution order and replays their
// adjoints in reverse. Leaf tensors (parameters) accumulate gradients across
// tapes until zero_grad() is called on them.
template <typename T>
class Tape {
 public:
  using Var = Tensor<T>;

  enum class Recording { enabled, disabled };

  explicit Tape(Recording recording = Recording::enabled)
      : recording_(recording == Recording::enabled) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return recording_; }
  std::size_t size() const { return entries_.size(); }
  // Number of neg_log_pick calls whose probability fell below the guard.
  std::size_t guarded_logs() const { return guarded_logs_; }

  std::vector<std::string_view> op_names() const {
    std::vector<std::string_view> names;
    names.reserve(entries_.size());
    for (const auto& e : entries_) names.push_back(e.name);
    return names;
  }

  // Seeds d(loss)/d(loss) = 1 and runs every recorded adjoint once, newest
  // first. The tape is emptied afterwards.
  void backward(const Var& loss, std::vector<std::string_view>* visited = nullptr) {
    if (loss.size() != 1)
      throw DimensionError("backward() needs a 1x1 loss, got " + loss.shape().str());
    if (!loss.requires_grad()) return;
    loss.data_->ensure_grad();
    loss.data_->grad[0] += T(1);
    for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
      if (visited) visited->push_back(it->name);
      // An output the loss never reached carries no adjoint.
      if (it->output->grad.empty()) continue;
      it->backward();
    }
    entries_.clear();
  }

  // ---- linear algebra -----------------------------------------------------

  Var matmul(const Var& a, const Var& b) {
    if (a.cols() != b.rows())
      throw DimensionError("matmul: " + a.shape().str() + " x " + b.shape().str());
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    Var out = result(Shape{m, n}, a, b);
    const T* pa = a.data_->value.data();
    const T* pb = b.data_->value.data();
    T* po = out.data_->value.data();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t p = 0; p < k; ++p) {
        const T av = pa[i * k + p];
        const T* brow = pb + p * n;
        T* orow = po + i * n;
        for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
      }
    if (tracks(out)) {
      record("matmul", out, [da = a.data_, db = b.data_, dout = out.data_, m, k, n] {
        const T* go = dout->grad.data();
        if (da->requires_grad) {
          da->ensure_grad();
          T* ga = da->grad.data();
          const T* vb = db->value.data();
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t p = 0; p < k; ++p) {
              T acc = 0;
              for (std::size_t j = 0; j < n; ++j) acc += go[i * n + j] * vb[p * n + j];
              ga[i * k + p] += acc;
            }
        }
        if (db->requires_grad) {
          db->ensure_grad();
          T* gb = db->grad.data();
          const T* va = da->value.data();
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t p = 0; p < k; ++p) {
              const T av = va[i * k + p];
              for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += av * go[i * n + j];
            }
        }
      });
    }
    return out;
  }

  Var transpose(const Var& a) {
    const std::size_t r = a.rows(), c = a.cols();
    Var out = result(Shape{c, r}, a);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) out.data_->value[j * r + i] = a.data_->value[i * c + j];
    if (tracks(out)) {
      record("transpose", out, [da = a.data_, dout = out.data_, r, c] {
        da->ensure_grad();
        for (std::size_t i = 0; i < r; ++i)
          for (std::size_t j = 0; j < c; ++j) da->grad[i * c + j] += dout->grad[j * r + i];
      });
    }
    return out;
  }

  // ---- pointwise ------------------------------------------------------------

  Var add(const Var& a, const Var& b) {
    same_shape("add", a, b);
    Var out = result(a.shape(), a, b);
    for (std::size_t i = 0; i < out.size(); ++i)
      out.data_->value[i] = a.data_->value[i] + b.data_->value[i];
    if (tracks(out)) {
      record("add", out, [da = a.data_, db = b.data_, dout = out.data_] {
        accumulate(*da, dout->grad, T(1));
        accumulate(*db, dout->grad, T(1));
      });
    }
    return out;
  }

  Var sub(const Var& a, const Var& b) {
    same_shape("sub", a, b);
    Var out = result(a.shape(), a, b);
    for (std::size_t i = 0; i < out.size(); ++i)
      out.data_->value[i] = a.data_->value[i] - b.data_->value[i];
    if (tracks(out)) {
      record("sub", out, [da = a.data_, db = b.data_, dout = out.data_] {
        accumulate(*da, dout->grad, T(1));
        accumulate(*db, dout->grad, T(-1));
      });
    }
    return out;
  }

  // Elementwise product. A 1x1 left operand is broadcast over b.
  Var mul(const Var& a, const Var& b) {
    if (a.size() == 1 && b.size() != 1) return mul_scalar(a, b);
    same_shape("mul", a, b);
    Var out = result(a.shape(), a, b);
    for (std::size_t i = 0; i < out.size(); ++i)
      out.data_->value[i] = a.data_->value[i] * b.data_->value[i];
    if (tracks(out)) {
      record("mul", out, [da = a.data_, db = b.data_, dout = out.data_] {
        const std::size_t n = dout->value.size();
        if (da->requires_grad) {
          da->ensure_grad();
          for (std::size_t i = 0; i < n; ++i) da->grad[i] += dout->grad[i] * db->value[i];
        }
        if (db->requires_grad) {
          db->ensure_grad();
          for (std::size_t i = 0; i < n; ++i) db->grad[i] += dout->grad[i] * da->value[i];
        }
      });
    }
    return out;
  }

  // Adds the 1 x d row r to every row of a.
  Var add_row(const Var& a, const Var& r) {
    if (r.rows() != 1 || r.cols() != a.cols())
      throw DimensionError("add_row: " + a.shape().str() + " + row " + r.shape().str());
    const std::size_t n = a.rows(), d = a.cols();
    Var out = result(a.shape(), a, r);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j)
        out.data_->value[i * d + j] = a.data_->value[i * d + j] + r.data_->value[j];
    if (tracks(out)) {
      record("add_row", out, [da = a.data_, dr = r.data_, dout = out.data_, n, d] {
        accumulate(*da, dout->grad, T(1));
        if (dr->requires_grad) {
          dr->ensure_grad();
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < d; ++j) dr->grad[j] += dout->grad[i * d + j];
        }
      });
    }
    return out;
  }

  Var scale(const Var& a, T factor) {
    Var out = result(a.shape(), a);
    for (std::size_t i = 0; i < out.size(); ++i) out.data_->value[i] = factor * a.data_->value[i];
    if (tracks(out)) {
      record("scale", out, [da = a.data_, dout = out.data_, factor] {
        accumulate(*da, dout->grad, factor);
      });
    }
    return out;
  }

  // 1 - a, elementwise.
  Var one_minus(const Var& a) {
    Var out = result(a.shape(), a);
    for (std::size_t i = 0; i < out.size(); ++i) out.data_->value[i] = T(1) - a.data_->value[i];
    if (tracks(out)) {
      record("one_minus", out, [da = a.data_, dout = out.data_] {
        accumulate(*da, dout->grad, T(-1));
      });
    }
    return out;
  }

  Var sigmoid(const Var& a) {
    Var out = result(a.shape(), a);
    for (std::size_t i = 0; i < out.size(); ++i)
      out.data_->value[i] = T(1) / (T(1) + std::exp(-a.data_->value[i]));
    if (tracks(out)) {
      record("sigmoid", out, [da = a.data_, dout = out.data_] {
        da->ensure_grad();
        for (std::size_t i = 0; i < dout->value.size(); ++i) {
          const T y = dout->value[i];
          da->grad[i] += dout->grad[i] * y * (T(1) - y);
        }
      });
    }
    return out;
  }

  Var tanh(const Var& a) {
    Var out = result(a.shape(), a);
    for (std::size_t i = 0; i < out.size(); ++i) out.data_->value[i] = std::tanh(a.data_->value[i]);
    if (tracks(out)) {
      record("tanh", out, [da = a.data_, dout = out.data_] {
        da->ensure_grad();
        for (std::size_t i = 0; i < dout->value.size(); ++i) {
          const T y = dout->value[i];
          da->grad[i] += dout->grad[i] * (T(1) - y * y);
        }
      });
    }
    return out;
  }

  // ---- reductions and normalisation ---------------------------------------

  // Softmax over a 1 x l row. Masked positions (mask[j] == 0) come out as
  // exact zeros; an empty mask means every position is live.
  Var masked_softmax(const Var& logits, const Mask& mask = {}) {
    if (logits.rows() != 1)
      throw DimensionError("masked_softmax expects a row, got " + logits.shape().str());
    const std::size_t l = logits.cols();
    if (!mask.empty() && mask.size() != l)
      throw DimensionError("masked_softmax: mask of " + std::to_string(mask.size()) +
                           " for " + logits.shape().str());
    auto live = [&](std::size_t j) { return mask.empty() || mask[j] != 0; };
    T peak = -std::numeric_limits<T>::infinity();
    bool any = false;
    for (std::size_t j = 0; j < l; ++j)
      if (live(j)) {
        any = true;
        peak = std::max(peak, logits.data_->value[j]);
      }
    if (!any) throw InvalidMaskError("masked_softmax: every position is masked");
    Var out = result(logits.shape(), logits);
    T total = 0;
    for (std::size_t j = 0; j < l; ++j)
      if (live(j)) {
        out.data_->value[j] = std::exp(logits.data_->value[j] - peak);
        total += out.data_->value[j];
      }
    for (std::size_t j = 0; j < l; ++j) out.data_->value[j] /= total;
    if (tracks(out)) {
      record("masked_softmax", out, [dl = logits.data_, dout = out.data_, l] {
        dl->ensure_grad();
        T dot = 0;
        for (std::size_t j = 0; j < l; ++j) dot += dout->grad[j] * dout->value[j];
        for (std::size_t j = 0; j < l; ++j)
          dl->grad[j] += dout->value[j] * (dout->grad[j] - dot);
      });
    }
    return out;
  }

  // -log(probs[index]) for a 1 x V distribution. Probabilities below the
  // guard are clamped so the loss stays finite; guarded_logs() counts them.
  Var neg_log_pick(const Var& probs, std::size_t index) {
    if (probs.rows() != 1 || index >= probs.cols())
      throw IndexError("neg_log_pick: index " + std::to_string(index) + " for " +
                       probs.shape().str());
    const T guard = std::numeric_limits<T>::min();
    const T p = probs.data_->value[index];
    const bool clamped = p < guard;  // NaN passes through so divergence is caught
    if (clamped) ++guarded_logs_;
    Var out = result(Shape{1, 1}, probs);
    out.data_->value[0] = -std::log(clamped ? guard : p);
    if (tracks(out)) {
      record("neg_log_pick", out, [dp = probs.data_, dout = out.data_, index, clamped, guard] {
        dp->ensure_grad();
        const T denom = clamped ? guard : dp->value[index];
        dp->grad[index] -= dout->grad[0] / denom;
      });
    }
    return out;
  }

  Var sum(const Var& a) {
    Var out = result(Shape{1, 1}, a);
    T total = 0;
    for (T v : a.data_->value) total += v;
    out.data_->value[0] = total;
    if (tracks(out)) {
      record("sum", out, [da = a.data_, dout = out.data_] {
        da->ensure_grad();
        const T g = dout->grad[0];
        for (auto& v : da->grad) v += g;
      });
    }
    return out;
  }

  // Sum over rows i of weights[i] * ||a_i||_1.
  Var weighted_row_l1(const Var& a, std::span<const T> weights) {
    if (weights.size() != a.rows())
      throw DimensionError("weighted_row_l1: " + std::to_string(weights.size()) +
                           " weights for " + a.shape().str());
    const std::size_t n = a.rows(), d = a.cols();
    Var out = result(Shape{1, 1}, a);
    T total = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (weights[i] == T(0)) continue;
      T row = 0;
      for (std::size_t j = 0; j < d; ++j) row += std::abs(a.data_->value[i * d + j]);
      total += weights[i] * row;
    }
    out.data_->value[0] = total;
    if (tracks(out)) {
      record("weighted_row_l1", out,
             [da = a.data_, dout = out.data_, w = std::vector<T>(weights.begin(), weights.end()), n, d] {
               da->ensure_grad();
               const T g = dout->grad[0];
               for (std::size_t i = 0; i < n; ++i) {
                 if (w[i] == T(0)) continue;
                 for (std::size_t j = 0; j < d; ++j) {
                   const T v = da->value[i * d + j];
                   const T sign = v > T(0) ? T(1) : (v < T(0) ? T(-1) : T(0));
                   da->grad[i * d + j] += g * w[i] * sign;
                 }
               }
             });
    }
    return out;
  }

  // ---- structural -------------------------------------------------------------

  // Row gather; the backward pass scatters into the gathered rows only.
  Var gather_rows(const Var& table, std::span<const std::size_t> ids) {
    if (ids.empty()) throw EmptyInputError("gather_rows: no ids");
    const std::size_t d = table.cols();
    for (std::size_t id : ids)
      if (id >= table.rows())
        throw IndexError("lookup: id " + std::to_string(id) + " out of range for table " +
                         table.shape().str());
    Var out = result(Shape{ids.size(), d}, table);
    for (std::size_t r = 0; r < ids.size(); ++r)
      std::copy_n(table.data_->value.begin() + ids[r] * d, d, out.data_->value.begin() + r * d);
    if (tracks(out)) {
      record("gather_rows", out,
             [dt = table.data_, dout = out.data_, ids = std::vector<std::size_t>(ids.begin(), ids.end()), d] {
               dt->ensure_grad();
               for (std::size_t r = 0; r < ids.size(); ++r)
                 for (std::size_t j = 0; j < d; ++j) dt->grad[ids[r] * d + j] += dout->grad[r * d + j];
             });
    }
    return out;
  }

  Var concat_cols(const Var& a, const Var& b) {
    if (a.rows() != b.rows())
      throw DimensionError("concat_cols: " + a.shape().str() + " | " + b.shape().str());
    const std::size_t r = a.rows(), p = a.cols(), q = b.cols();
    Var out = result(Shape{r, p + q}, a, b);
    for (std::size_t i = 0; i < r; ++i) {
      std::copy_n(a.data_->value.begin() + i * p, p, out.data_->value.begin() + i * (p + q));
      std::copy_n(b.data_->value.begin() + i * q, q, out.data_->value.begin() + i * (p + q) + p);
    }
    if (tracks(out)) {
      record("concat_cols", out, [da = a.data_, db = b.data_, dout = out.data_, r, p, q] {
        if (da->requires_grad) {
          da->ensure_grad();
          for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < p; ++j) da->grad[i * p + j] += dout->grad[i * (p + q) + j];
        }
        if (db->requires_grad) {
          db->ensure_grad();
          for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < q; ++j) db->grad[i * q + j] += dout->grad[i * (p + q) + p + j];
        }
      });
    }
    return out;
  }

  // Stacks 1 x d rows into an n x d matrix.
  Var stack_rows(std::span<const Var> parts) {
    if (parts.empty()) throw EmptyInputError("stack_rows: nothing to stack");
    const std::size_t d = parts.front().cols();
    bool grad = false;
    for (const auto& p : parts) {
      if (p.rows() != 1 || p.cols() != d)
        throw DimensionError("stack_rows: row " + p.shape().str() + " vs width " + std::to_string(d));
      grad = grad || (recording_ && p.requires_grad());
    }
    Var out(Shape{parts.size(), d});
    out.set_requires_grad(grad);
    for (std::size_t i = 0; i < parts.size(); ++i)
      std::copy_n(parts[i].data_->value.begin(), d, out.data_->value.begin() + i * d);
    if (grad) {
      std::vector<std::shared_ptr<detail::TensorData<T>>> srcs;
      srcs.reserve(parts.size());
      for (const auto& p : parts) srcs.push_back(p.data_);
      record("stack_rows", out, [srcs = std::move(srcs), dout = out.data_, d] {
        for (std::size_t i = 0; i < srcs.size(); ++i) {
          if (!srcs[i]->requires_grad) continue;
          srcs[i]->ensure_grad();
          for (std::size_t j = 0; j < d; ++j) srcs[i]->grad[j] += dout->grad[i * d + j];
        }
      });
    }
    return out;
  }

  Var slice_cols(const Var& a, std::size_t begin, std::size_t count) {
    if (count == 0 || begin + count > a.cols())
      throw DimensionError("slice_cols: [" + std::to_string(begin) + ", +" + std::to_string(count) +
                           ") of " + a.shape().str());
    const std::size_t r = a.rows(), c = a.cols();
    Var out = result(Shape{r, count}, a);
    for (std::size_t i = 0; i < r; ++i)
      std::copy_n(a.data_->value.begin() + i * c + begin, count, out.data_->value.begin() + i * count);
    if (tracks(out)) {
      record("slice_cols", out, [da = a.data_, dout = out.data_, r, c, begin, count] {
        da->ensure_grad();
        for (std::size_t i = 0; i < r; ++i)
          for (std::size_t j = 0; j < count; ++j) da->grad[i * c + begin + j] += dout->grad[i * count + j];
      });
    }
    return out;
  }

  Var slice_row(const Var& a, std::size_t index) {
    if (index >= a.rows())
      throw IndexError("slice_row: row " + std::to_string(index) + " of " + a.shape().str());
    const std::size_t c = a.cols();
    Var out = result(Shape{1, c}, a);
    std::copy_n(a.data_->value.begin() + index * c, c, out.data_->value.begin());
    if (tracks(out)) {
      record("slice_row", out, [da = a.data_, dout = out.data_, index, c] {
        da->ensure_grad();
        for (std::size_t j = 0; j < c; ++j) da->grad[index * c + j] += dout->grad[j];
      });
    }
    return out;
  }

  // Row i of the result is row i of a where mask[i] != 0, else row i of b.
  // Values are copied exactly; no arithmetic touches the rejected rows.
  Var select_rows(const Mask& mask, const Var& a, const Var& b) {
    same_shape("select_rows", a, b);
    if (mask.size() != a.rows())
      throw DimensionError("select_rows: mask of " + std::to_string(mask.size()) + " for " +
                           a.shape().str());
    const std::size_t n = a.rows(), d = a.cols();
    Var out = result(a.shape(), a, b);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& src = mask[i] ? a.data_->value : b.data_->value;
      std::copy_n(src.begin() + i * d, d, out.data_->value.begin() + i * d);
    }
    if (tracks(out)) {
      record("select_rows", out, [da = a.data_, db = b.data_, dout = out.data_, mask, n, d] {
        for (std::size_t i = 0; i < n; ++i) {
          auto& dst = mask[i] ? *da : *db;
          if (!dst.requires_grad) continue;
          dst.ensure_grad();
          for (std::size_t j = 0; j < d; ++j) dst.grad[i * d + j] += dout->grad[i * d + j];
        }
      });
    }
    return out;
  }

 private:
  struct Entry {
    std::string_view name;
    std::shared_ptr<detail::TensorData<T>> output;
    std::function<void()> backward;
  };

  Var mul_scalar(const Var& s, const Var& b) {
    Var out = result(b.shape(), s, b);
    const T sv = s.data_->value[0];
    for (std::size_t i = 0; i < out.size(); ++i) out.data_->value[i] = sv * b.data_->value[i];
    if (tracks(out)) {
      record("mul", out, [ds = s.data_, db = b.data_, dout = out.data_] {
        const std::size_t n = dout->value.size();
        if (ds->requires_grad) {
          ds->ensure_grad();
          T acc = 0;
          for (std::size_t i = 0; i < n; ++i) acc += dout->grad[i] * db->value[i];
          ds->grad[0] += acc;
        }
        if (db->requires_grad) {
          db->ensure_grad();
          for (std::size_t i = 0; i < n; ++i) db->grad[i] += dout->grad[i] * ds->value[0];
        }
      });
    }
    return out;
  }

  static void same_shape(const char* op, const Var& a, const Var& b) {
    if (a.shape() != b.shape())
      throw DimensionError(std::string(op) + ": " + a.shape().str() + " vs " + b.shape().str());
  }

  static void accumulate(detail::TensorData<T>& dst, const std::vector<T>& g, T factor) {
    if (!dst.requires_grad) return;
    dst.ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) dst.grad[i] += factor * g[i];
  }

  template <typename... Inputs>
  Var result(Shape shape, const Inputs&... inputs) {
    Var out(shape);
    out.set_requires_grad(recording_ && (inputs.requires_grad() || ...));
    return out;
  }

  bool tracks(const Var& out) const { return out.requires_grad(); }

  void record(std::string_view name, const Var& out, std::function<void()> fn) {
    entries_.push_back(Entry{name, out.data_, std::move(fn)});
  }

  std::vector<Entry> entries_;
  bool recording_;
  std::size_t guarded_logs_ = 0;
};

}  // namespace covnmt
