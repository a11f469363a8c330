#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "emcomm/rng.hpp"

namespace emcomm::envs {

inline constexpr int kNumAppClasses = 5;

// live-stream, long-video, conference, gaming, game-stream
inline const std::array<std::string, kNumAppClasses>& app_class_names() {
  static const std::array<std::string, kNumAppClasses> names = {
      "live-stream", "long-video", "conference", "gaming", "game-stream"};
  return names;
}

// Synthetic intent-to-resource generator. Sender features are a per-class
// centroid on the informative dims plus AR(1)-correlated Gaussian deviations;
// the trailing dims are zero-mean high-variance distractors shared by all
// classes. The receiver observes an i.i.d. Gaussian channel-state vector whose
// quality tercile shifts the required resource level by +-1.
struct GeneratorConfig {
  std::array<double, kNumAppClasses> class_priors = {0.2, 0.2, 0.2, 0.2, 0.2};
  int obs_dim_a = 12;
  int informative_dims = 8;
  double centroid_scale = 1.5;
  double feature_noise = 1.0;    // stationary sd on informative dims
  double distractor_noise = 2.0; // stationary sd on distractor dims
  double ar_coeff = 0.8;         // AR(1) coefficient of the deviation stream
  int obs_dim_p = 6;
  int levels = 8;
  std::array<int, kNumAppClasses> base_levels = {1, 3, 2, 5, 6};
  double waste_weight = 0.5;

  void validate() const {
    double s = 0.0;
    for (double p : class_priors) {
      if (!(p >= 0.0)) throw std::invalid_argument("generator: negative class prior");
      s += p;
    }
    if (std::abs(s - 1.0) > 1e-9) throw std::invalid_argument("generator: class priors must sum to 1");
    if (obs_dim_a <= 0 || obs_dim_p <= 0) throw std::invalid_argument("generator: bad obs dims");
    if (informative_dims <= 0 || informative_dims > obs_dim_a)
      throw std::invalid_argument("generator: informative_dims out of range");
    if (levels < 2) throw std::invalid_argument("generator: needs at least 2 levels");
    for (int b : base_levels)
      if (b < 0 || b >= levels) throw std::invalid_argument("generator: base level out of range");
    if (!(feature_noise >= 0.0) || !(distractor_noise >= 0.0))
      throw std::invalid_argument("generator: negative noise scale");
    if (!(ar_coeff > -1.0 && ar_coeff < 1.0))
      throw std::invalid_argument("generator: ar_coeff must lie in (-1, 1)");
    if (!(waste_weight > 0.0 && waste_weight < 1.0))
      throw std::invalid_argument("generator: waste_weight must lie in (0, 1)");
  }
};

// Walsh-pattern centroid: dims beyond informative_dims are shared zeros, so
// distractors cancel in nearest-centroid comparisons.
inline double class_centroid(const GeneratorConfig& cfg, int app_class, int dim) {
  if (dim >= cfg.informative_dims) return 0.0;
  static constexpr int kWalsh[kNumAppClasses][8] = {
      {+1, +1, +1, +1, +1, +1, +1, +1}, {+1, -1, +1, -1, +1, -1, +1, -1},
      {+1, +1, -1, -1, +1, +1, -1, -1}, {+1, -1, -1, +1, +1, -1, -1, +1},
      {+1, +1, +1, +1, -1, -1, -1, -1}};
  return cfg.centroid_scale * kWalsh[app_class][dim % 8];
}

struct TrafficEpisode {
  int app_class = 0;
  std::vector<double> features;
  std::vector<double> channel_state;
  int required_level = 0;
};

// Standardized quality statistic of a channel-state vector: sum / sqrt(p),
// which is N(0,1) under the generator.
inline double channel_quality(std::span<const double> channel_state) {
  double s = 0.0;
  for (double v : channel_state) s += v;
  return s / std::sqrt(static_cast<double>(channel_state.size()));
}

// Phi^{-1}(2/3): tercile edge of the standard normal quality statistic.
inline constexpr double kQualityTercile = 0.43072729929545756;

// base_level(class), +1 on a bad channel, -1 on a good one, clamped.
inline int required_level(const GeneratorConfig& cfg, int app_class,
                          std::span<const double> channel_state) {
  const double q = channel_quality(channel_state);
  int adj = 0;
  if (q < -kQualityTercile)
    adj = +1;
  else if (q > kQualityTercile)
    adj = -1;
  const int level = cfg.base_levels[static_cast<std::size_t>(app_class)] + adj;
  return std::clamp(level, 0, cfg.levels - 1);
}

// Seeded episode stream; deviations are AR(1)-correlated across successive
// episodes, everything else i.i.d.
class TrafficStream {
 public:
  TrafficStream(std::uint64_t seed, const GeneratorConfig& cfg) : cfg_(cfg), rng_(seed) {
    cfg_.validate();
    deviation_.assign(static_cast<std::size_t>(cfg_.obs_dim_a), 0.0);
    for (int d = 0; d < cfg_.obs_dim_a; ++d)
      deviation_[static_cast<std::size_t>(d)] = dim_sd(d) * rng_.normal();  // stationary start
  }

  const GeneratorConfig& config() const { return cfg_; }

  TrafficEpisode next() {
    TrafficEpisode ep;
    ep.app_class = draw_class();
    ep.features.resize(static_cast<std::size_t>(cfg_.obs_dim_a));
    const double ar = cfg_.ar_coeff;
    const double innov = std::sqrt(1.0 - ar * ar);
    for (int d = 0; d < cfg_.obs_dim_a; ++d) {
      auto& dev = deviation_[static_cast<std::size_t>(d)];
      dev = ar * dev + innov * dim_sd(d) * rng_.normal();
      ep.features[static_cast<std::size_t>(d)] = class_centroid(cfg_, ep.app_class, d) + dev;
    }
    ep.channel_state.resize(static_cast<std::size_t>(cfg_.obs_dim_p));
    for (auto& v : ep.channel_state) v = rng_.normal();
    ep.required_level = required_level(cfg_, ep.app_class, ep.channel_state);
    return ep;
  }

 private:
  double dim_sd(int d) const {
    return d < cfg_.informative_dims ? cfg_.feature_noise : cfg_.distractor_noise;
  }

  int draw_class() {
    const double u = rng_.uniform();
    double acc = 0.0;
    for (int k = 0; k < kNumAppClasses; ++k) {
      acc += cfg_.class_priors[static_cast<std::size_t>(k)];
      if (u < acc) return k;
    }
    return kNumAppClasses - 1;
  }

  GeneratorConfig cfg_;
  Rng rng_;
  std::vector<double> deviation_;
};

// Pure function of (seed, config): the first episode of a fresh stream.
inline TrafficEpisode sample_traffic_episode(std::uint64_t rng_seed, const GeneratorConfig& cfg) {
  TrafficStream stream(rng_seed, cfg);
  return stream.next();
}

struct ResourceAction {
  int level = 0;
};

// 0 on under-allocation; 1 - waste_weight*(over)/(levels-1) otherwise, so the
// unique maximum sits at level == required_level.
inline double resource_reward(int level, int required, double waste_weight, int levels) {
  if (levels < 2) throw std::invalid_argument("resource_reward: needs at least 2 levels");
  if (level < 0 || level >= levels || required < 0 || required >= levels)
    throw std::invalid_argument("resource_reward: level out of range");
  if (level < required) return 0.0;
  return 1.0 - waste_weight * static_cast<double>(level - required) / static_cast<double>(levels - 1);
}

// (class_target, level_target); level_target is the unique reward argmax.
inline std::pair<int, int> episode_targets(const TrafficEpisode& episode) {
  return {episode.app_class, episode.required_level};
}

struct ReferentialEpisode {
  std::vector<std::vector<double>> candidates;  // K distinct binary-attribute vectors
  int target_index = 0;
};

inline ReferentialEpisode sample_referential_episode(std::uint64_t rng_seed, int candidates,
                                                     int object_dim) {
  if (candidates < 2) throw std::invalid_argument("referential: needs at least 2 candidates");
  if (object_dim < 1 || object_dim >= 63 ||
      static_cast<std::uint64_t>(candidates) > (std::uint64_t{1} << object_dim))
    throw std::invalid_argument("referential: candidate count exceeds distinct binary vectors");
  Rng rng(rng_seed);
  ReferentialEpisode ep;
  std::vector<std::uint64_t> seen;
  while (static_cast<int>(ep.candidates.size()) < candidates) {
    std::uint64_t code = 0;
    std::vector<double> obj(static_cast<std::size_t>(object_dim));
    for (int d = 0; d < object_dim; ++d) {
      const int bit = rng.uniform() < 0.5 ? 0 : 1;
      obj[static_cast<std::size_t>(d)] = bit;
      code |= static_cast<std::uint64_t>(bit) << d;
    }
    bool dup = false;
    for (std::uint64_t c : seen) dup = dup || (c == code);
    if (dup) continue;
    seen.push_back(code);
    ep.candidates.push_back(std::move(obj));
  }
  ep.target_index = static_cast<int>(rng.integer(static_cast<std::uint64_t>(candidates)));
  return ep;
}

// Seeded referential stream (one rng; successive episodes i.i.d.).
class ReferentialStream {
 public:
  ReferentialStream(std::uint64_t seed, int candidates, int object_dim)
      : rng_(seed), candidates_(candidates), object_dim_(object_dim) {
    sample_referential_episode(0, candidates, object_dim);  // validate args
  }

  ReferentialEpisode next() {
    return sample_referential_episode(rng_.engine()(), candidates_, object_dim_);
  }

 private:
  Rng rng_;
  int candidates_;
  int object_dim_;
};

}  // namespace emcomm::envs
