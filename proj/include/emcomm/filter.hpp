#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

namespace emcomm::filter {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Per-dimension importance gates. The free parameters are the raw scores rho;
// the gate value is kappa_d = sigmoid(rho_d) in (0, 1). Bounding the scores
// keeps the exponential regularizer non-degenerate.
struct ImportanceGates {
  std::vector<double> raw;

  ImportanceGates() = default;
  explicit ImportanceGates(std::vector<double> r) : raw(std::move(r)) {
    for (double v : raw)
      if (!std::isfinite(v)) throw std::invalid_argument("ImportanceGates: non-finite score");
  }

  std::size_t size() const { return raw.size(); }
  double kappa(std::size_t d) const { return sigmoid(raw[d]); }
  std::vector<double> kappas() const {
    std::vector<double> k(raw.size());
    for (std::size_t d = 0; d < raw.size(); ++d) k[d] = sigmoid(raw[d]);
    return k;
  }
};

struct BandwidthBudget {
  int dims = 0;
};

// out_d = kappa_d * message_d
inline std::vector<double> gate_message(std::span<const double> message,
                                        const ImportanceGates& gates) {
  if (message.size() != gates.size())
    throw std::invalid_argument("gate_message: length mismatch");
  std::vector<double> out(message.size());
  for (std::size_t d = 0; d < out.size(); ++d) out[d] = gates.kappa(d) * message[d];
  return out;
}

// exp(sum_d kappa_d); in (1, e^D), strictly increasing in every rho_d
inline double importance_regularizer(const ImportanceGates& gates) {
  double s = 0.0;
  for (std::size_t d = 0; d < gates.size(); ++d) s += gates.kappa(d);
  return std::exp(s);
}

// d/d rho_d exp(sum kappa) = exp(sum kappa) * kappa_d * (1 - kappa_d);
// accumulates scale * grad into grad_rho
inline void importance_regularizer_grad(const ImportanceGates& gates, std::span<double> grad_rho,
                                        double scale = 1.0) {
  if (grad_rho.size() != gates.size())
    throw std::invalid_argument("importance_regularizer_grad: length mismatch");
  const double val = importance_regularizer(gates);
  for (std::size_t d = 0; d < gates.size(); ++d) {
    const double k = gates.kappa(d);
    grad_rho[d] += scale * val * k * (1.0 - k);
  }
}

// Indices of the B largest gates, ties broken by lower index. The kept set at
// budget B is a prefix of the kept set at budget B+1 (same sort order).
inline std::vector<std::size_t> top_gate_indices(const ImportanceGates& gates, int budget) {
  std::vector<std::size_t> order(gates.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return gates.raw[a] > gates.raw[b];  // sigmoid is strictly increasing
  });
  const auto keep = std::min<std::size_t>(order.size(), static_cast<std::size_t>(std::max(budget, 0)));
  order.resize(keep);
  return order;
}

// Deployment mask: zero everything outside the top-B gate indices. Leaves the
// kept entries untouched, so applying it twice equals applying it once.
inline std::vector<double> select_to_bandwidth(std::span<const double> payload,
                                               const ImportanceGates& gates,
                                               BandwidthBudget budget) {
  if (payload.size() != gates.size())
    throw std::invalid_argument("select_to_bandwidth: length mismatch");
  if (budget.dims < 0 || static_cast<std::size_t>(budget.dims) > gates.size())
    throw std::invalid_argument("select_to_bandwidth: budget out of range");
  if (static_cast<std::size_t>(budget.dims) >= gates.size())
    return std::vector<double>(payload.begin(), payload.end());
  std::vector<double> out(payload.size(), 0.0);
  for (std::size_t idx : top_gate_indices(gates, budget.dims)) out[idx] = payload[idx];
  return out;
}

// Gate the message, then keep only the top-B gate indices.
inline std::vector<double> mask_to_bandwidth(std::span<const double> message,
                                             const ImportanceGates& gates, BandwidthBudget budget) {
  return select_to_bandwidth(gate_message(message, gates), gates, budget);
}

// Number of nonzero entries of the transmitted vector.
inline int effective_dimension(std::span<const double> masked) {
  int n = 0;
  for (double v : masked)
    if (std::abs(v) > 0.0) ++n;
  return n;
}

// First-B truncation for schemes that learn no importance ordering.
inline std::vector<double> truncate_to_bandwidth(std::span<const double> message, int budget) {
  std::vector<double> out(message.size(), 0.0);
  const auto keep = std::min<std::size_t>(message.size(), static_cast<std::size_t>(std::max(budget, 0)));
  for (std::size_t d = 0; d < keep; ++d) out[d] = message[d];
  return out;
}

}  // namespace emcomm::filter
