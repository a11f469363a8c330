#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "emcomm/filter.hpp"
#include "emcomm/nnet.hpp"

namespace emcomm::agents {

// Static description of one agent: observation/message/action widths plus the
// network layouts of its message encoder and action policy.
struct AgentSpec {
  std::string id;
  int obs_dim = 0;
  int msg_dim = 0;
  int action_arity = 1;
  nnet::Layout encoder_layout;  // obs_dim -> ... -> 2 * msg_dim (mean || logvar)
  nnet::Layout policy_layout;   // obs_dim + incoming message dims -> ... -> action_arity
  filter::ImportanceGates gates;

  void validate(int incoming_msg_dims = 0) const {
    if (obs_dim <= 0 || action_arity < 1) throw std::invalid_argument("AgentSpec: bad widths");
    if (!encoder_layout.empty()) {
      nnet::validate_layout(encoder_layout);
      if (nnet::input_width(encoder_layout) != obs_dim)
        throw std::invalid_argument("AgentSpec: encoder input width != obs_dim");
      if (nnet::output_width(encoder_layout) != 2 * msg_dim)
        throw std::invalid_argument("AgentSpec: encoder output width != 2 * msg_dim");
      if (gates.size() != static_cast<std::size_t>(msg_dim))
        throw std::invalid_argument("AgentSpec: gate count != msg_dim");
    }
    if (!policy_layout.empty()) {
      nnet::validate_layout(policy_layout);
      if (nnet::input_width(policy_layout) != obs_dim + incoming_msg_dims)
        throw std::invalid_argument("AgentSpec: policy input width != obs_dim + incoming dims");
      if (nnet::output_width(policy_layout) != action_arity)
        throw std::invalid_argument("AgentSpec: policy output width != action_arity");
    }
  }
};

struct Message {
  std::string sender;
  std::string recipient;
  std::vector<double> payload;
  nnet::GaussianPosterior posterior;  // training-time only
};

struct ActionDistribution {
  std::vector<double> probabilities;
};

inline std::vector<double> softmax(std::span<const double> logits) {
  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  std::vector<double> p(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = std::exp(logits[i] - mx);
    z += p[i];
  }
  for (auto& v : p) v /= z;
  return p;
}

// Splits a raw encoder output (mean || logvar) into a clamped posterior.
inline nnet::GaussianPosterior split_posterior(std::span<const double> encoder_out) {
  if (encoder_out.size() % 2 != 0)
    throw std::invalid_argument("split_posterior: odd encoder output width");
  const std::size_t d = encoder_out.size() / 2;
  return nnet::GaussianPosterior(std::vector<double>(encoder_out.begin(), encoder_out.begin() + d),
                                 std::vector<double>(encoder_out.begin() + d, encoder_out.end()));
}

// encoder -> (mean, logvar) -> reparameterized sample -> gated payload.
inline Message emit_message(const AgentSpec& spec, const nnet::ParamVector& encoder_params,
                            std::span<const double> observation, std::span<const double> noise,
                            const std::string& recipient = "") {
  if (static_cast<int>(observation.size()) != spec.obs_dim)
    throw std::invalid_argument("emit_message: observation length != obs_dim");
  const std::vector<double> enc = nnet::mlp_forward(encoder_params, observation);
  Message msg;
  msg.sender = spec.id;
  msg.recipient = recipient;
  msg.posterior = split_posterior(enc);
  msg.payload = filter::gate_message(nnet::gaussian_sample(msg.posterior, noise), spec.gates);
  return msg;
}

// Softmax policy over [observation || received payloads].
inline ActionDistribution act(const AgentSpec& spec, const nnet::ParamVector& policy_params,
                              std::span<const double> observation,
                              std::span<const Message> received) {
  if (static_cast<int>(observation.size()) != spec.obs_dim)
    throw std::invalid_argument("act: observation length != obs_dim");
  std::vector<double> input(observation.begin(), observation.end());
  for (const auto& msg : received) input.insert(input.end(), msg.payload.begin(), msg.payload.end());
  if (static_cast<int>(input.size()) != nnet::input_width(policy_params.layout))
    throw std::invalid_argument("act: policy input width mismatch");
  const std::vector<double> logits = nnet::mlp_forward(policy_params, input);
  return ActionDistribution{softmax(logits)};
}

// Cross-entropy: -ln p[target]
inline double task_loss(const ActionDistribution& dist, int target) {
  if (target < 0 || static_cast<std::size_t>(target) >= dist.probabilities.size())
    throw std::invalid_argument("task_loss: target out of range");
  return -std::log(dist.probabilities[static_cast<std::size_t>(target)]);
}

// argmax with ties broken toward the lowest index
inline int greedy_action(const ActionDistribution& dist) {
  int best = 0;
  for (std::size_t i = 1; i < dist.probabilities.size(); ++i)
    if (dist.probabilities[i] > dist.probabilities[static_cast<std::size_t>(best)])
      best = static_cast<int>(i);
  return best;
}

}  // namespace emcomm::agents
