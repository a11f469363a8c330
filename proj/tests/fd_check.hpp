#pragma once

// Test-only finite-difference oracle. Independent of the library's backward
// passes: it only needs a scalar function of a flat parameter vector.

#include <cmath>
#include <functional>
#include <span>
#include <vector>

namespace testutil {

// Central differences, step h, on every coordinate of params.
inline std::vector<double> finite_difference_grad(
    const std::function<double(std::span<const double>)>& f, std::vector<double> params,
    double h = 1e-5) {
  std::vector<double> grad(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    params[i] = saved + h;
    const double fp = f(params);
    params[i] = saved - h;
    const double fm = f(params);
    params[i] = saved;
    grad[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

// max_i |a_i - b_i| / max(1, |a_i|, |b_i|)
inline double max_rel_error(std::span<const double> a, std::span<const double> b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double denom = std::max({1.0, std::abs(a[i]), std::abs(b[i])});
    worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
  }
  return worst;
}

}  // namespace testutil
