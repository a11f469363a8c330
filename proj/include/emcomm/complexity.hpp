#pragma once

#include <cmath>
#include <cstddef>
#include <istream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "emcomm/nnet.hpp"

namespace emcomm::complexity {

inline constexpr double kDistributionTol = 1e-12;

// Finite channel: source distribution p(s) over states and a row-stochastic
// conditional p(c|s). All information quantities are in nats.
struct DiscreteChannel {
  std::vector<double> source;                    // |S|
  std::vector<std::vector<double>> conditional;  // |S| rows of length |C|

  DiscreteChannel() = default;
  DiscreteChannel(std::vector<double> src, std::vector<std::vector<double>> cond)
      : source(std::move(src)), conditional(std::move(cond)) {
    validate();
  }

  std::size_t n_states() const { return source.size(); }
  std::size_t n_symbols() const { return conditional.empty() ? 0 : conditional[0].size(); }

  void validate() const {
    if (source.empty() || conditional.size() != source.size())
      throw std::invalid_argument("DiscreteChannel: shape mismatch");
    double s = 0.0;
    for (double p : source) {
      if (!(p >= 0.0)) throw std::invalid_argument("DiscreteChannel: negative source probability");
      s += p;
    }
    if (std::abs(s - 1.0) > kDistributionTol)
      throw std::invalid_argument("DiscreteChannel: source does not sum to 1");
    const std::size_t cols = conditional[0].size();
    if (cols == 0) throw std::invalid_argument("DiscreteChannel: empty symbol space");
    for (const auto& row : conditional) {
      if (row.size() != cols) throw std::invalid_argument("DiscreteChannel: ragged conditional");
      double r = 0.0;
      for (double p : row) {
        if (!(p >= 0.0)) throw std::invalid_argument("DiscreteChannel: negative conditional");
        r += p;
      }
      if (std::abs(r - 1.0) > kDistributionTol)
        throw std::invalid_argument("DiscreteChannel: conditional row does not sum to 1");
    }
  }

  // p(c) = sum_s p(s) p(c|s)
  std::vector<double> marginal() const {
    std::vector<double> m(n_symbols(), 0.0);
    for (std::size_t s = 0; s < n_states(); ++s)
      for (std::size_t c = 0; c < m.size(); ++c) m[c] += source[s] * conditional[s][c];
    return m;
  }
};

struct PriorSpec {
  enum class Kind { standard_normal, discrete };
  Kind kind = Kind::standard_normal;
  std::vector<double> probs;  // discrete only

  static PriorSpec standard_normal() { return PriorSpec{}; }
  static PriorSpec discrete(std::vector<double> p) {
    double s = 0.0;
    for (double v : p) {
      if (!(v >= 0.0)) throw std::invalid_argument("PriorSpec: negative probability");
      s += v;
    }
    if (std::abs(s - 1.0) > kDistributionTol)
      throw std::invalid_argument("PriorSpec: discrete prior does not sum to 1");
    PriorSpec spec;
    spec.kind = Kind::discrete;
    spec.probs = std::move(p);
    return spec;
  }
};

struct ComplexityBudget {
  double nats = 0.0;
};

// I(S;C) = sum_{s,c} p(s) p(c|s) ln(p(c|s)/p(c)), with 0 ln(0/x) = 0.
inline double exact_mutual_information(const DiscreteChannel& channel) {
  channel.validate();
  const std::vector<double> pc = channel.marginal();
  double mi = 0.0;
  for (std::size_t s = 0; s < channel.n_states(); ++s) {
    if (channel.source[s] == 0.0) continue;
    for (std::size_t c = 0; c < channel.n_symbols(); ++c) {
      const double pcs = channel.conditional[s][c];
      if (pcs == 0.0) continue;
      mi += channel.source[s] * pcs * std::log(pcs / pc[c]);
    }
  }
  return mi;
}

// sum_s p(s) D_KL(p(c|s) || q). Upper-bounds exact MI for any prior q; equal
// when q is the true marginal.
inline double variational_bound_discrete(const DiscreteChannel& channel, const PriorSpec& prior) {
  channel.validate();
  if (prior.kind != PriorSpec::Kind::discrete)
    throw std::invalid_argument("variational_bound_discrete: needs a discrete prior");
  if (prior.probs.size() != channel.n_symbols())
    throw std::invalid_argument("variational_bound_discrete: prior length mismatch");
  double bound = 0.0;
  for (std::size_t s = 0; s < channel.n_states(); ++s) {
    if (channel.source[s] == 0.0) continue;
    double kl = 0.0;
    for (std::size_t c = 0; c < channel.n_symbols(); ++c) {
      const double pcs = channel.conditional[s][c];
      if (pcs == 0.0) continue;
      if (prior.probs[c] <= 0.0)
        throw std::invalid_argument("variational_bound_discrete: prior is zero on the support");
      kl += pcs * std::log(pcs / prior.probs[c]);
    }
    bound += channel.source[s] * kl;
  }
  return bound;
}

// Closed-form KL(N(mu, diag(e^logvar)) || N(0, I)) =
// 0.5 sum_d (mu_d^2 + e^{logvar_d} - 1 - logvar_d)
inline double gaussian_kl(const nnet::GaussianPosterior& post) {
  double kl = 0.0;
  for (std::size_t d = 0; d < post.dim(); ++d)
    kl += post.mean[d] * post.mean[d] + std::exp(post.logvar[d]) - 1.0 - post.logvar[d];
  return 0.5 * kl;
}

// Accumulates scale * d(gaussian_kl)/d(mean, logvar).
inline void gaussian_kl_grad(const nnet::GaussianPosterior& post, std::span<double> dmean,
                             std::span<double> dlogvar, double scale = 1.0) {
  if (dmean.size() != post.dim() || dlogvar.size() != post.dim())
    throw std::invalid_argument("gaussian_kl_grad: length mismatch");
  for (std::size_t d = 0; d < post.dim(); ++d) {
    dmean[d] += scale * post.mean[d];
    dlogvar[d] += scale * 0.5 * (std::exp(post.logvar[d]) - 1.0);
  }
}

// Minibatch estimate of E_s[D_KL(p(c|s) || q)] with q standard normal.
inline double complexity_regularizer(std::span<const nnet::GaussianPosterior> batch) {
  if (batch.empty()) throw std::invalid_argument("complexity_regularizer: empty batch");
  double acc = 0.0;
  for (const auto& post : batch) acc += gaussian_kl(post);
  return acc / static_cast<double>(batch.size());
}

// Exact MI of the linear-Gaussian channel c = gain*s + n, s ~ N(0,1),
// n ~ N(0, noise_var): 0.5 ln(1 + gain^2/noise_var). Independent continuous
// oracle for bound-tightness checks.
inline double gaussian_channel_mi(double gain, double noise_var) {
  if (!(noise_var > 0.0)) throw std::invalid_argument("gaussian_channel_mi: noise_var must be > 0");
  return 0.5 * std::log(1.0 + gain * gain / noise_var);
}

// L_IB = I(s;c) - tradeoff * I(c;Y)
inline double ib_objective(double mi_sc, double mi_cy, double tradeoff) {
  if (!(tradeoff >= 0.0)) throw std::invalid_argument("ib_objective: tradeoff must be >= 0");
  return mi_sc - tradeoff * mi_cy;
}

// Plain-text channel: first line "|S| |C|", second line p(s), then |S| rows
// of p(c|s), whitespace-separated decimals.
inline DiscreteChannel parse_channel(std::istream& is) {
  std::size_t ns = 0, nc = 0;
  if (!(is >> ns >> nc) || ns == 0 || nc == 0)
    throw std::runtime_error("channel file: bad header line");
  std::vector<double> src(ns);
  for (auto& v : src)
    if (!(is >> v)) throw std::runtime_error("channel file: truncated source distribution");
  std::vector<std::vector<double>> cond(ns, std::vector<double>(nc));
  for (auto& row : cond)
    for (auto& v : row)
      if (!(is >> v)) throw std::runtime_error("channel file: truncated conditional row");
  return DiscreteChannel(std::move(src), std::move(cond));
}

inline DiscreteChannel parse_channel(const std::string& text) {
  std::istringstream is(text);
  return parse_channel(is);
}

}  // namespace emcomm::complexity
