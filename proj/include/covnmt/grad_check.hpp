#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "covnmt/tape.hpp"

namespace covnmt {

template <typename T>
struct NamedParam {
  std::string name;
  Tensor<T> tensor;
};

template <typename T>
using ScalarFunction = std::function<Tensor<T>(Tape<T>&)>;

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  std::size_t entries_checked = 0;
};

// Compares reverse-mode gradients of f against central differences for every
// entry of every parameter. The relative error of one entry is
// |analytic - numeric| / max(1, |analytic|, |numeric|).
template <typename T>
GradCheckReport grad_check_report(const ScalarFunction<T>& f, std::span<const NamedParam<T>> params,
                                  double step) {
  if (!(step > 0.0)) throw ConfigError("grad_check: step must be positive");
  for (auto p : params) p.tensor.zero_grad();
  {
    Tape<T> tape;
    Tensor<T> loss = f(tape);
    if (!std::isfinite(static_cast<double>(loss.item())))
      throw NumericError("grad_check: non-finite objective at the base point");
    tape.backward(loss);
  }
  auto evaluate = [&] {
    Tape<T> tape(Tape<T>::Recording::disabled);
    return static_cast<double>(f(tape).item());
  };

  GradCheckReport report;
  for (auto p : params) {
    auto values = p.tensor.values();
    std::vector<T> analytic(p.tensor.grad().begin(), p.tensor.grad().end());
    for (std::size_t i = 0; i < values.size(); ++i) {
      const T saved = values[i];
      values[i] = static_cast<T>(saved + step);
      const double up = evaluate();
      values[i] = static_cast<T>(saved - step);
      const double down = evaluate();
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double exact = static_cast<double>(analytic[i]);
      if (!std::isfinite(numeric) || !std::isfinite(exact))
        throw NumericError("grad_check: non-finite value for parameter '" + p.name + "' entry " +
                           std::to_string(i));
      const double denom = std::max({1.0, std::abs(exact), std::abs(numeric)});
      const double err = std::abs(exact - numeric) / denom;
      ++report.entries_checked;
      if (report.worst_param.empty() || err > report.max_rel_error) {
        report.max_rel_error = err;
        report.worst_param = p.name;
        report.worst_index = i;
      }
    }
  }
  for (auto p : params) p.tensor.zero_grad();
  return report;
}

template <typename T>
double grad_check(const ScalarFunction<T>& f, std::span<const NamedParam<T>> params, double step) {
  return grad_check_report(f, params, step).max_rel_error;
}

}  // namespace covnmt
