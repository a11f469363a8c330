#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "emcomm/agents.hpp"
#include "emcomm/complexity.hpp"
#include "emcomm/envs.hpp"
#include "emcomm/filter.hpp"
#include "emcomm/metrics.hpp"
#include "emcomm/nnet.hpp"
#include "emcomm/rng.hpp"

namespace emcomm::trainer {

// ec-sota: autoencoder-pretrained messages, no filter, no regularizer.
// if: importance filter; cr: KL complexity regularizer; if-cr: both.
enum class SchemeVariant { ec_sota, if_only, cr_only, if_cr };

struct VariantFlags {
  bool filter = false;       // gates + exponential bandwidth regularizer
  bool regularizer = false;  // KL complexity regularizer
  bool pretrain = false;     // autoencoder pretraining, encoder frozen after
};

inline VariantFlags flags_of(SchemeVariant v) {
  switch (v) {
    case SchemeVariant::ec_sota:
      return {false, false, true};
    case SchemeVariant::if_only:
      return {true, false, false};
    case SchemeVariant::cr_only:
      return {false, true, false};
    case SchemeVariant::if_cr:
      return {true, true, false};
  }
  throw std::invalid_argument("unknown variant");
}

inline std::string to_string(SchemeVariant v) {
  switch (v) {
    case SchemeVariant::ec_sota: return "ec-sota";
    case SchemeVariant::if_only: return "if";
    case SchemeVariant::cr_only: return "cr";
    case SchemeVariant::if_cr: return "if-cr";
  }
  throw std::invalid_argument("unknown variant");
}

inline SchemeVariant parse_variant(const std::string& s) {
  if (s == "ec-sota") return SchemeVariant::ec_sota;
  if (s == "if") return SchemeVariant::if_only;
  if (s == "cr") return SchemeVariant::cr_only;
  if (s == "if-cr") return SchemeVariant::if_cr;
  throw std::invalid_argument("unknown variant '" + s + "' (expected ec-sota|if|cr|if-cr)");
}

inline const std::vector<SchemeVariant>& all_variants() {
  static const std::vector<SchemeVariant> v = {SchemeVariant::ec_sota, SchemeVariant::if_only,
                                               SchemeVariant::cr_only, SchemeVariant::if_cr};
  return v;
}

enum class Game { traffic, referential };
enum class LevelObjective { cross_entropy, reinforce };

struct TrainConfig {
  double eps_b = 1e-3;
  double eps_c = 1e-2;
  double learning_rate = 1e-3;
  int batch_size = 64;
  int total_steps = 20000;
  int eval_interval = 1000;
  int eval_episodes = 2000;
  int pretrain_steps = 3000;
  std::uint64_t seed = 1;
  std::vector<int> eval_budgets = {8, 4, 2, 1};
  int msg_dim = 8;
  int hidden_width = 32;
  envs::GeneratorConfig gen;
  Game game = Game::traffic;
  int ref_candidates = 5;
  int ref_object_dim = 6;
  LevelObjective level_objective = LevelObjective::cross_entropy;
  double symbol_rate = 125.0;  // bps labeling only; 1 dim = 1 channel symbol

  void validate() const {
    gen.validate();
    if (!(eps_b >= 0.0) || !(eps_c >= 0.0)) throw std::invalid_argument("trainer: negative multiplier");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("trainer: learning_rate must be > 0");
    if (batch_size < 1 || total_steps < 0 || eval_interval < 1 || eval_episodes < 1)
      throw std::invalid_argument("trainer: bad loop sizes");
    if (pretrain_steps < 0) throw std::invalid_argument("trainer: bad pretrain_steps");
    if (msg_dim < 1 || hidden_width < 1) throw std::invalid_argument("trainer: bad widths");
    for (int b : eval_budgets)
      if (b < 0 || b > msg_dim) throw std::invalid_argument("trainer: eval budget outside [0, msg_dim]");
    if (eval_budgets.empty()) throw std::invalid_argument("trainer: eval_budgets empty");
    if (game == Game::referential && (ref_candidates < 2 || ref_object_dim < 1))
      throw std::invalid_argument("trainer: bad referential sizes");
    if (!(symbol_rate > 0.0)) throw std::invalid_argument("trainer: symbol_rate must be > 0");
  }

  int sender_obs_dim() const {
    return game == Game::traffic ? gen.obs_dim_a : ref_object_dim;
  }
  int receiver_obs_dim() const {
    return game == Game::traffic ? gen.obs_dim_p : ref_candidates * ref_object_dim;
  }
  int receiver_arity() const { return game == Game::traffic ? gen.levels : ref_candidates; }

  nnet::Layout encoder_layout() const {
    return {{sender_obs_dim(), hidden_width, nnet::Activation::tanh},
            {hidden_width, 2 * msg_dim, nnet::Activation::linear}};
  }
  nnet::Layout classifier_layout() const {
    if (game != Game::traffic) return {};
    return {{gen.obs_dim_a, hidden_width, nnet::Activation::tanh},
            {hidden_width, envs::kNumAppClasses, nnet::Activation::linear}};
  }
  nnet::Layout policy_layout() const {
    return {{receiver_obs_dim() + msg_dim, hidden_width, nnet::Activation::tanh},
            {hidden_width, receiver_arity(), nnet::Activation::linear}};
  }
  nnet::Layout decoder_layout() const {
    return {{msg_dim, hidden_width, nnet::Activation::tanh},
            {hidden_width, sender_obs_dim(), nnet::Activation::linear}};
  }
};

// --- Adam ------------------------------------------------------------------

struct AdamState {
  std::vector<double> m, v;
  std::int64_t t = 0;
};

inline AdamState make_adam(std::size_t n) {
  return AdamState{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), 0};
}

// One bias-corrected Adam update (beta1 0.9, beta2 0.999, eps 1e-8).
inline void adam_step(std::span<double> values, std::span<const double> grad, AdamState& opt,
                      double lr) {
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  if (values.size() != grad.size() || opt.m.size() != values.size())
    throw std::invalid_argument("adam_step: size mismatch");
  opt.t += 1;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(opt.t));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(opt.t));
  for (std::size_t i = 0; i < values.size(); ++i) {
    opt.m[i] = beta1 * opt.m[i] + (1.0 - beta1) * grad[i];
    opt.v[i] = beta2 * opt.v[i] + (1.0 - beta2) * grad[i] * grad[i];
    values[i] -= lr * (opt.m[i] / c1) / (std::sqrt(opt.v[i] / c2) + eps);
  }
}

// --- train state -------------------------------------------------------------

struct TrainState {
  SchemeVariant variant = SchemeVariant::if_cr;
  nnet::ParamVector encoder;     // psi
  nnet::ParamVector classifier;  // phi, sender side (traffic game only)
  nnet::ParamVector policy;      // phi, receiver side
  nnet::ParamVector decoder;     // ec-sota pretraining only
  filter::ImportanceGates gates;
  AdamState opt_encoder, opt_classifier, opt_policy, opt_decoder, opt_gates;
  std::int64_t step = 0;
  Rng noise_rng;
  envs::TrafficStream traffic_stream;
  envs::ReferentialStream ref_stream;

  TrainState(const TrainConfig& cfg, SchemeVariant v)
      : variant(v),
        noise_rng(mix_seed(cfg.seed, 6)),
        traffic_stream(mix_seed(cfg.seed, 5), cfg.gen),
        ref_stream(mix_seed(cfg.seed, 7), std::max(cfg.ref_candidates, 2),
                   std::max(cfg.ref_object_dim, 1)) {
    Rng r_enc(mix_seed(cfg.seed, 1)), r_cls(mix_seed(cfg.seed, 2)), r_pol(mix_seed(cfg.seed, 3)),
        r_dec(mix_seed(cfg.seed, 4));
    encoder = nnet::init_params(cfg.encoder_layout(), r_enc);
    if (!cfg.classifier_layout().empty())
      classifier = nnet::init_params(cfg.classifier_layout(), r_cls);
    policy = nnet::init_params(cfg.policy_layout(), r_pol);
    if (flags_of(v).pretrain) decoder = nnet::init_params(cfg.decoder_layout(), r_dec);
    gates = filter::ImportanceGates(std::vector<double>(static_cast<std::size_t>(cfg.msg_dim), 0.0));
    opt_encoder = make_adam(encoder.values.size());
    opt_classifier = make_adam(classifier.values.size());
    opt_policy = make_adam(policy.values.size());
    opt_decoder = make_adam(decoder.values.size());
    opt_gates = make_adam(gates.size());
  }
};

inline TrainState init_state(const TrainConfig& cfg, SchemeVariant v) {
  cfg.validate();
  return TrainState(cfg, v);
}

// --- batches -----------------------------------------------------------------

struct BatchItem {
  envs::TrafficEpisode ep;
  envs::ReferentialEpisode ref;
  std::vector<double> noise;  // standard normal, msg_dim
  double action_u = 0.0;      // uniform draw for the score-function objective
};

inline std::vector<BatchItem> draw_batch(TrainState& state, const TrainConfig& cfg) {
  std::vector<BatchItem> batch(static_cast<std::size_t>(cfg.batch_size));
  for (auto& item : batch) {
    if (cfg.game == Game::traffic)
      item.ep = state.traffic_stream.next();
    else
      item.ref = state.ref_stream.next();
    item.noise = state.noise_rng.normal_vec(static_cast<std::size_t>(cfg.msg_dim));
    item.action_u = state.noise_rng.uniform();
  }
  return batch;
}

inline std::vector<double> sender_obs(const BatchItem& item, const TrainConfig& cfg) {
  if (cfg.game == Game::traffic) return item.ep.features;
  return item.ref.candidates[static_cast<std::size_t>(item.ref.target_index)];
}

inline std::vector<double> receiver_obs(const BatchItem& item, const TrainConfig& cfg) {
  if (cfg.game == Game::traffic) return item.ep.channel_state;
  std::vector<double> obs;
  obs.reserve(static_cast<std::size_t>(cfg.ref_candidates * cfg.ref_object_dim));
  for (const auto& c : item.ref.candidates) obs.insert(obs.end(), c.begin(), c.end());
  return obs;
}

inline int receiver_target(const BatchItem& item, const TrainConfig& cfg) {
  return cfg.game == Game::traffic ? item.ep.required_level : item.ref.target_index;
}

// --- loss and gradients --------------------------------------------------------

struct GradientSet {
  std::vector<double> encoder, classifier, policy, gates;

  explicit GradientSet(const TrainState& state)
      : encoder(state.encoder.values.size(), 0.0),
        classifier(state.classifier.values.size(), 0.0),
        policy(state.policy.values.size(), 0.0),
        gates(state.gates.size(), 0.0) {}
};

struct LossBreakdown {
  double total = 0.0;
  double task = 0.0;
  double bandwidth_term = 0.0;   // eps_b * L^B
  double complexity_term = 0.0;  // eps_c * L^C
};

namespace detail {

struct ItemForward {
  nnet::Tape enc_tape, cls_tape, pol_tape;
  std::vector<double> enc_out;  // raw (mean || logvar), pre-clamp
  nnet::GaussianPosterior posterior;
  std::vector<double> sample;   // pre-gate message
  std::vector<double> payload;
  std::vector<double> pol_in;
  std::vector<double> level_probs, class_probs;
  int level_target = 0, class_target = 0;
  int sampled_action = 0;   // reinforce only
  double reward = 0.0;      // reinforce only
};

inline int inverse_cdf_action(std::span<const double> probs, double u) {
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size()) - 1;
}

}  // namespace detail

// Loss of problem P2 on one minibatch:
//   mean task cross-entropy (over agents and batch)
//   + eps_b * exp(sum_d kappa_d)            (filter variants)
//   + eps_c * mean_batch KL(post || N(0,I)) (regularized variants)
// Gradients for every active parameter group are accumulated into *grads when
// it is non-null. Pure in (state params, batch): noise and score-function
// draws ride along in the batch items.
inline LossBreakdown total_loss(std::span<const BatchItem> batch, const TrainState& state,
                                const TrainConfig& cfg, SchemeVariant variant,
                                GradientSet* grads = nullptr) {
  if (variant != state.variant)
    throw std::invalid_argument("total_loss: variant-inconsistent state");
  if (batch.empty()) throw std::invalid_argument("total_loss: empty batch");
  const VariantFlags flags = flags_of(variant);
  const bool traffic = cfg.game == Game::traffic;
  const bool reinforce = cfg.level_objective == LevelObjective::reinforce;
  const double n_agents = traffic ? 2.0 : 1.0;
  const double inv_batch = 1.0 / static_cast<double>(batch.size());

  std::vector<detail::ItemForward> fwd(batch.size());
  double task_acc = 0.0, kl_acc = 0.0, reward_acc = 0.0;

  for (std::size_t b = 0; b < batch.size(); ++b) {
    const BatchItem& item = batch[b];
    detail::ItemForward& f = fwd[b];
    const std::vector<double> s_obs = sender_obs(item, cfg);
    const std::vector<double> r_obs = receiver_obs(item, cfg);
    f.level_target = receiver_target(item, cfg);
    if (traffic) f.class_target = item.ep.app_class;

    f.enc_out = nnet::mlp_forward(state.encoder, s_obs, &f.enc_tape);
    f.posterior = agents::split_posterior(f.enc_out);
    if (flags.pretrain) {
      f.sample = f.posterior.mean;  // deterministic latent message
      f.payload = f.sample;
    } else {
      f.sample = nnet::gaussian_sample(f.posterior, item.noise);
      f.payload = flags.filter ? filter::gate_message(f.sample, state.gates) : f.sample;
    }

    f.pol_in = r_obs;
    f.pol_in.insert(f.pol_in.end(), f.payload.begin(), f.payload.end());
    f.level_probs = agents::softmax(nnet::mlp_forward(state.policy, f.pol_in, &f.pol_tape));

    double level_loss;
    if (reinforce) {
      f.sampled_action = detail::inverse_cdf_action(f.level_probs, item.action_u);
      f.reward = traffic ? envs::resource_reward(f.sampled_action, f.level_target,
                                                 cfg.gen.waste_weight, cfg.gen.levels)
                         : (f.sampled_action == f.level_target ? 1.0 : 0.0);
      reward_acc += f.reward;
      level_loss = 0.0;  // surrogate filled in after the baseline is known
    } else {
      level_loss = agents::task_loss(agents::ActionDistribution{f.level_probs}, f.level_target);
    }

    double class_loss = 0.0;
    if (traffic) {
      f.class_probs = agents::softmax(nnet::mlp_forward(state.classifier, s_obs, &f.cls_tape));
      class_loss = agents::task_loss(agents::ActionDistribution{f.class_probs}, f.class_target);
    }
    task_acc += (level_loss + class_loss) / n_agents;
    kl_acc += complexity::gaussian_kl(f.posterior);
  }

  const double baseline = reinforce ? reward_acc * inv_batch : 0.0;
  if (reinforce) {
    for (auto& f : fwd) {
      const double logp =
          std::log(f.level_probs[static_cast<std::size_t>(f.sampled_action)]);
      task_acc += -(f.reward - baseline) * logp / n_agents;
    }
  }

  LossBreakdown out;
  out.task = task_acc * inv_batch;
  if (flags.filter) out.bandwidth_term = cfg.eps_b * filter::importance_regularizer(state.gates);
  if (flags.regularizer) out.complexity_term = cfg.eps_c * kl_acc * inv_batch;
  out.total = out.task + out.bandwidth_term + out.complexity_term;
  if (!std::isfinite(out.total)) throw std::runtime_error("total_loss: non-finite loss");
  if (!grads) return out;

  // backward
  const std::size_t D = static_cast<std::size_t>(cfg.msg_dim);
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const BatchItem& item = batch[b];
    detail::ItemForward& f = fwd[b];
    const double w = inv_batch / n_agents;

    // receiver policy: d(level loss)/d(logits)
    std::vector<double> dlogits(f.level_probs.size());
    if (reinforce) {
      const double adv = f.reward - baseline;
      for (std::size_t i = 0; i < dlogits.size(); ++i) {
        const double onehot = (static_cast<int>(i) == f.sampled_action) ? 1.0 : 0.0;
        dlogits[i] = w * adv * (f.level_probs[i] - onehot);
      }
    } else {
      for (std::size_t i = 0; i < dlogits.size(); ++i) {
        const double onehot = (static_cast<int>(i) == f.level_target) ? 1.0 : 0.0;
        dlogits[i] = w * (f.level_probs[i] - onehot);
      }
    }
    const std::vector<double> dpol_in =
        nnet::mlp_backward(state.policy, f.pol_tape, dlogits, grads->policy);

    // task gradient into the message path (not for the frozen ec-sota encoder)
    if (!flags.pretrain) {
      std::vector<double> dmean(D, 0.0), dlogvar(D, 0.0);
      const std::size_t r_dim = f.pol_in.size() - D;
      for (std::size_t d = 0; d < D; ++d) {
        const double dpayload = dpol_in[r_dim + d];
        double dsample = dpayload;
        if (flags.filter) {
          const double k = state.gates.kappa(d);
          dsample = dpayload * k;
          grads->gates[d] += dpayload * f.sample[d] * k * (1.0 - k);
        }
        dmean[d] += dsample;
        dlogvar[d] += dsample * item.noise[d] * 0.5 * std::exp(0.5 * f.posterior.logvar[d]);
      }
      if (flags.regularizer)
        complexity::gaussian_kl_grad(f.posterior, dmean, dlogvar, cfg.eps_c * inv_batch);
      std::vector<double> denc(2 * D);
      for (std::size_t d = 0; d < D; ++d) {
        denc[d] = dmean[d];
        // clamped logvar entries pass no gradient
        const bool clamped = std::abs(f.enc_out[D + d]) > nnet::kLogvarClamp;
        denc[D + d] = clamped ? 0.0 : dlogvar[d];
      }
      nnet::mlp_backward(state.encoder, f.enc_tape, denc, grads->encoder);
    }

    if (traffic) {
      std::vector<double> dcls(f.class_probs.size());
      for (std::size_t i = 0; i < dcls.size(); ++i) {
        const double onehot = (static_cast<int>(i) == f.class_target) ? 1.0 : 0.0;
        dcls[i] = w * (f.class_probs[i] - onehot);
      }
      nnet::mlp_backward(state.classifier, f.cls_tape, dcls, grads->classifier);
    }
  }
  if (flags.filter)
    filter::importance_regularizer_grad(state.gates, grads->gates, cfg.eps_b);
  return out;
}

// One Adam update on all active parameter groups.
inline LossBreakdown train_step(TrainState& state, std::span<const BatchItem> batch,
                                const TrainConfig& cfg, SchemeVariant variant) {
  GradientSet grads(state);
  const LossBreakdown loss = total_loss(batch, state, cfg, variant, &grads);
  for (const auto* g : {&grads.encoder, &grads.classifier, &grads.policy, &grads.gates})
    for (double v : *g)
      if (!std::isfinite(v)) throw std::runtime_error("train_step: non-finite gradient");
  const VariantFlags flags = flags_of(variant);
  if (!flags.pretrain)
    adam_step(state.encoder.values, grads.encoder, state.opt_encoder, cfg.learning_rate);
  if (!state.classifier.values.empty())
    adam_step(state.classifier.values, grads.classifier, state.opt_classifier, cfg.learning_rate);
  adam_step(state.policy.values, grads.policy, state.opt_policy, cfg.learning_rate);
  if (flags.filter) adam_step(state.gates.raw, grads.gates, state.opt_gates, cfg.learning_rate);
  state.step += 1;
  return loss;
}

// EC-SOTA: train encoder+decoder to reconstruct sender observations (MSE),
// message = latent mean thereafter; decoder plays no further role. Returns the
// per-step reconstruction losses.
inline std::vector<double> pretrain_autoencoder(TrainState& state, const TrainConfig& cfg) {
  if (state.variant != SchemeVariant::ec_sota)
    throw std::invalid_argument("pretrain_autoencoder: variant must be ec-sota");
  std::vector<double> history;
  history.reserve(static_cast<std::size_t>(cfg.pretrain_steps));
  const std::size_t D = static_cast<std::size_t>(cfg.msg_dim);
  for (int step = 0; step < cfg.pretrain_steps; ++step) {
    const std::vector<BatchItem> batch = draw_batch(state, cfg);
    std::vector<double> g_enc(state.encoder.values.size(), 0.0);
    std::vector<double> g_dec(state.decoder.values.size(), 0.0);
    double mse = 0.0;
    const double inv = 1.0 / static_cast<double>(batch.size());
    for (const auto& item : batch) {
      const std::vector<double> obs = sender_obs(item, cfg);
      nnet::Tape enc_tape, dec_tape;
      const std::vector<double> enc_out = nnet::mlp_forward(state.encoder, obs, &enc_tape);
      const std::vector<double> latent(enc_out.begin(), enc_out.begin() + static_cast<long>(D));
      const std::vector<double> recon = nnet::mlp_forward(state.decoder, latent, &dec_tape);
      std::vector<double> drecon(recon.size());
      const double inv_dim = 1.0 / static_cast<double>(recon.size());
      for (std::size_t i = 0; i < recon.size(); ++i) {
        const double err = recon[i] - obs[i];
        mse += err * err * inv_dim * inv;
        drecon[i] = 2.0 * err * inv_dim * inv;
      }
      const std::vector<double> dlatent =
          nnet::mlp_backward(state.decoder, dec_tape, drecon, g_dec);
      std::vector<double> denc(enc_out.size(), 0.0);
      std::copy(dlatent.begin(), dlatent.end(), denc.begin());
      nnet::mlp_backward(state.encoder, enc_tape, denc, g_enc);
    }
    if (!std::isfinite(mse)) throw std::runtime_error("pretrain: non-finite reconstruction loss");
    adam_step(state.encoder.values, g_enc, state.opt_encoder, cfg.learning_rate);
    adam_step(state.decoder.values, g_dec, state.opt_decoder, cfg.learning_rate);
    history.push_back(mse);
  }
  return history;
}

// --- evaluation ----------------------------------------------------------------

inline std::int64_t flops_per_decision(const TrainConfig& cfg) {
  std::int64_t f = nnet::count_flops(cfg.encoder_layout()).forward_flops +
                   nnet::count_flops(cfg.policy_layout()).forward_flops;
  if (cfg.game == Game::traffic)
    f += nnet::count_flops(cfg.classifier_layout()).forward_flops;
  return f;
}

// Greedy evaluation with hard masking at the given budget. Filter variants
// mask by gate rank; the others transmit the first B dims. Messages are the
// posterior mean (zero noise). Never mutates state; the episode set depends
// only on (config seed, game), so different budgets and variants see identical
// episodes.
inline harness::MetricsRow evaluate(const TrainState& state, const TrainConfig& cfg,
                                    filter::BandwidthBudget budget, int episodes) {
  if (budget.dims < 0 || budget.dims > cfg.msg_dim)
    throw std::invalid_argument("evaluate: budget outside [0, msg_dim]");
  if (episodes < 1) throw std::invalid_argument("evaluate: needs at least one episode");
  const VariantFlags flags = flags_of(state.variant);
  const bool traffic = cfg.game == Game::traffic;

  envs::TrafficStream t_stream(mix_seed(cfg.seed, 8), cfg.gen);
  envs::ReferentialStream r_stream(mix_seed(cfg.seed, 9), std::max(cfg.ref_candidates, 2),
                                   std::max(cfg.ref_object_dim, 1));

  double class_hits = 0.0, level_hits = 0.0, reward_sum = 0.0, kl_sum = 0.0, effdim_sum = 0.0;
  for (int e = 0; e < episodes; ++e) {
    BatchItem item;
    if (traffic)
      item.ep = t_stream.next();
    else
      item.ref = r_stream.next();
    const std::vector<double> s_obs = sender_obs(item, cfg);
    const std::vector<double> r_obs = receiver_obs(item, cfg);
    const int level_target = receiver_target(item, cfg);

    const std::vector<double> enc_out = nnet::mlp_forward(state.encoder, s_obs);
    const nnet::GaussianPosterior post = agents::split_posterior(enc_out);
    kl_sum += complexity::gaussian_kl(post);
    const std::vector<double> payload =
        flags.filter ? filter::mask_to_bandwidth(post.mean, state.gates, budget)
                     : filter::truncate_to_bandwidth(post.mean, budget.dims);
    effdim_sum += filter::effective_dimension(payload);

    std::vector<double> pol_in = r_obs;
    pol_in.insert(pol_in.end(), payload.begin(), payload.end());
    const agents::ActionDistribution dist{agents::softmax(nnet::mlp_forward(state.policy, pol_in))};
    const int level = agents::greedy_action(dist);
    level_hits += (level == level_target) ? 1.0 : 0.0;
    reward_sum += traffic ? envs::resource_reward(level, level_target, cfg.gen.waste_weight,
                                                  cfg.gen.levels)
                          : ((level == level_target) ? 1.0 : 0.0);

    if (traffic) {
      const agents::ActionDistribution cdist{
          agents::softmax(nnet::mlp_forward(state.classifier, s_obs))};
      class_hits += (agents::greedy_action(cdist) == item.ep.app_class) ? 1.0 : 0.0;
    }
  }

  harness::MetricsRow row;
  row.step = state.step;
  row.variant = to_string(state.variant);
  row.seed = cfg.seed;
  row.budget = budget.dims;
  const double inv = 1.0 / static_cast<double>(episodes);
  row.level_accuracy = level_hits * inv;
  row.class_accuracy = traffic ? class_hits * inv : row.level_accuracy;
  row.mean_reward = reward_sum * inv;
  row.mean_kl = kl_sum * inv;
  row.effective_dim = effdim_sum * inv;
  row.flops_per_decision = flops_per_decision(cfg);
  return row;
}

}  // namespace emcomm::trainer
