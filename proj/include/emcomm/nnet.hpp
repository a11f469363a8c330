#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "emcomm/rng.hpp"

namespace emcomm::nnet {

enum class Activation : std::int32_t { linear = 0, tanh = 1 };

struct Layer {
  int in = 0;
  int out = 0;
  Activation act = Activation::linear;
};

using Layout = std::vector<Layer>;

inline void validate_layout(const Layout& layout) {
  for (std::size_t l = 0; l < layout.size(); ++l) {
    if (layout[l].in <= 0 || layout[l].out <= 0)
      throw std::invalid_argument("layout: layer widths must be positive");
    if (l > 0 && layout[l].in != layout[l - 1].out)
      throw std::invalid_argument("layout: layer widths do not chain");
  }
}

inline std::size_t param_count(const Layout& layout) {
  std::size_t n = 0;
  for (const auto& l : layout) n += static_cast<std::size_t>(l.in) * l.out + l.out;
  return n;
}

inline int input_width(const Layout& layout) { return layout.empty() ? 0 : layout.front().in; }
inline int output_width(const Layout& layout) { return layout.empty() ? 0 : layout.back().out; }

struct FlopReport {
  std::int64_t forward_flops = 0;
  std::int64_t param_count = 0;
};

// Dense layer in->out: 2*in*out multiply-adds + out bias adds; tanh costs
// 1 FLOP per element, identity costs nothing.
inline FlopReport count_flops(const Layout& layout) {
  FlopReport r;
  for (const auto& l : layout) {
    r.forward_flops += 2LL * l.in * l.out + l.out;
    if (l.act == Activation::tanh) r.forward_flops += l.out;
    r.param_count += static_cast<std::int64_t>(l.in) * l.out + l.out;
  }
  return r;
}

// Flat parameter store. Per layer: weight matrix W (out x in, row-major),
// then bias (out). y = act(W x + b).
struct ParamVector {
  Layout layout;
  std::vector<double> values;

  ParamVector() = default;
  ParamVector(Layout lay, std::vector<double> vals) : layout(std::move(lay)), values(std::move(vals)) {
    validate_layout(layout);
    if (values.size() != param_count(layout))
      throw std::invalid_argument("ParamVector: values length does not match layout");
    for (double v : values)
      if (!std::isfinite(v)) throw std::invalid_argument("ParamVector: non-finite entry");
  }
};

inline ParamVector zero_params(const Layout& layout) {
  validate_layout(layout);
  return ParamVector(layout, std::vector<double>(param_count(layout), 0.0));
}

// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases 0.
inline ParamVector init_params(const Layout& layout, Rng& rng) {
  validate_layout(layout);
  std::vector<double> vals(param_count(layout), 0.0);
  std::size_t off = 0;
  for (const auto& l : layout) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(l.in));
    for (int i = 0; i < l.in * l.out; ++i) vals[off + i] = rng.uniform(-bound, bound);
    off += static_cast<std::size_t>(l.in) * l.out + l.out;  // biases stay 0
  }
  return ParamVector(layout, std::move(vals));
}

// Activation cache from a forward pass: acts[0] is the input, acts[l+1] the
// post-activation output of layer l. Enough for an exact backward pass since
// tanh' = 1 - y^2.
struct Tape {
  Layout layout;
  std::vector<std::vector<double>> acts;
};

inline std::vector<double> mlp_forward(const ParamVector& params, std::span<const double> input,
                                       Tape* tape = nullptr) {
  const Layout& layout = params.layout;
  if (layout.empty()) {
    std::vector<double> out(input.begin(), input.end());
    if (tape) {
      tape->layout = layout;
      tape->acts = {out};
    }
    return out;
  }
  if (static_cast<int>(input.size()) != layout.front().in)
    throw std::invalid_argument("mlp_forward: input length does not match first layer width");

  std::vector<double> cur(input.begin(), input.end());
  if (tape) {
    tape->layout = layout;
    tape->acts.clear();
    tape->acts.reserve(layout.size() + 1);
    tape->acts.push_back(cur);
  }
  std::size_t off = 0;
  for (const auto& l : layout) {
    std::vector<double> next(static_cast<std::size_t>(l.out));
    const double* w = params.values.data() + off;
    const double* b = w + static_cast<std::size_t>(l.in) * l.out;
    for (int o = 0; o < l.out; ++o) {
      double z = b[o];
      const double* wrow = w + static_cast<std::size_t>(o) * l.in;
      for (int i = 0; i < l.in; ++i) z += wrow[i] * cur[i];
      next[o] = (l.act == Activation::tanh) ? std::tanh(z) : z;
    }
    cur = std::move(next);
    off += static_cast<std::size_t>(l.in) * l.out + l.out;
    if (tape) tape->acts.push_back(cur);
  }
  return cur;
}

// Accumulates d(loss)/d(params) into param_grad (same length as values) and
// returns d(loss)/d(input). Tape must come from a forward pass with the same
// layout.
inline std::vector<double> mlp_backward(const ParamVector& params, const Tape& tape,
                                        std::span<const double> output_grad,
                                        std::span<double> param_grad) {
  const Layout& layout = params.layout;
  if (tape.layout.size() != layout.size() || tape.acts.size() != layout.size() + 1)
    throw std::invalid_argument("mlp_backward: tape does not match layout");
  for (std::size_t l = 0; l < layout.size(); ++l)
    if (tape.layout[l].in != layout[l].in || tape.layout[l].out != layout[l].out ||
        tape.layout[l].act != layout[l].act)
      throw std::invalid_argument("mlp_backward: tape does not match layout");
  if (param_grad.size() != params.values.size())
    throw std::invalid_argument("mlp_backward: param_grad length mismatch");
  if (layout.empty()) return std::vector<double>(output_grad.begin(), output_grad.end());
  if (static_cast<int>(output_grad.size()) != layout.back().out)
    throw std::invalid_argument("mlp_backward: output_grad length mismatch");

  // offsets of each layer's weights in the flat store
  std::vector<std::size_t> offs(layout.size());
  std::size_t off = 0;
  for (std::size_t l = 0; l < layout.size(); ++l) {
    offs[l] = off;
    off += static_cast<std::size_t>(layout[l].in) * layout[l].out + layout[l].out;
  }

  std::vector<double> delta(output_grad.begin(), output_grad.end());
  for (std::size_t li = layout.size(); li-- > 0;) {
    const Layer& l = layout[li];
    const std::vector<double>& x = tape.acts[li];
    const std::vector<double>& y = tape.acts[li + 1];
    // through activation
    if (l.act == Activation::tanh)
      for (int o = 0; o < l.out; ++o) delta[o] *= 1.0 - y[o] * y[o];
    const double* w = params.values.data() + offs[li];
    double* gw = param_grad.data() + offs[li];
    double* gb = gw + static_cast<std::size_t>(l.in) * l.out;
    std::vector<double> dx(static_cast<std::size_t>(l.in), 0.0);
    for (int o = 0; o < l.out; ++o) {
      const double d = delta[o];
      gb[o] += d;
      const double* wrow = w + static_cast<std::size_t>(o) * l.in;
      double* grow = gw + static_cast<std::size_t>(o) * l.in;
      for (int i = 0; i < l.in; ++i) {
        grow[i] += d * x[i];
        dx[i] += d * wrow[i];
      }
    }
    delta = std::move(dx);
  }
  return delta;
}

inline constexpr double kLogvarClamp = 10.0;

struct GaussianPosterior {
  std::vector<double> mean;
  std::vector<double> logvar;  // clamped to [-kLogvarClamp, kLogvarClamp]

  GaussianPosterior() = default;
  GaussianPosterior(std::vector<double> m, std::vector<double> lv)
      : mean(std::move(m)), logvar(std::move(lv)) {
    if (mean.size() != logvar.size())
      throw std::invalid_argument("GaussianPosterior: mean/logvar length mismatch");
    for (double v : mean)
      if (!std::isfinite(v)) throw std::invalid_argument("GaussianPosterior: non-finite mean");
    for (double& v : logvar) {
      if (!std::isfinite(v)) throw std::invalid_argument("GaussianPosterior: non-finite logvar");
      v = std::clamp(v, -kLogvarClamp, kLogvarClamp);
    }
  }

  std::size_t dim() const { return mean.size(); }
};

// mean + exp(logvar/2) * noise, elementwise
inline std::vector<double> gaussian_sample(const GaussianPosterior& post,
                                           std::span<const double> noise) {
  if (noise.size() != post.dim())
    throw std::invalid_argument("gaussian_sample: noise length mismatch");
  std::vector<double> out(post.dim());
  for (std::size_t d = 0; d < out.size(); ++d)
    out[d] = post.mean[d] + std::exp(0.5 * post.logvar[d]) * noise[d];
  return out;
}

// --- checkpoint format ---------------------------------------------------
// u32 layer_count, then (i32 in, i32 out, i32 activation_code) per layer,
// then param_count little-endian f64 values.

namespace detail {
static_assert(std::endian::native == std::endian::little,
              "checkpoint io assumes a little-endian host");

template <class T>
void write_le(std::ostream& os, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <class T>
T read_le(std::istream& is) {
  unsigned char buf[sizeof(T)];
  is.read(reinterpret_cast<char*>(buf), sizeof(T));
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  T v;
  std::memcpy(&v, buf, sizeof(T));
  return v;
}
}  // namespace detail

inline void save_params(const ParamVector& params, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("checkpoint: cannot open " + path.string() + " for writing");
  detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(params.layout.size()));
  for (const auto& l : params.layout) {
    detail::write_le<std::int32_t>(os, l.in);
    detail::write_le<std::int32_t>(os, l.out);
    detail::write_le<std::int32_t>(os, static_cast<std::int32_t>(l.act));
  }
  for (double v : params.values) detail::write_le<double>(os, v);
  if (!os) throw std::runtime_error("checkpoint: write failed: " + path.string());
}

inline ParamVector load_params(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open " + path.string());
  const auto n_layers = detail::read_le<std::uint32_t>(is);
  Layout layout(n_layers);
  for (auto& l : layout) {
    l.in = detail::read_le<std::int32_t>(is);
    l.out = detail::read_le<std::int32_t>(is);
    const auto code = detail::read_le<std::int32_t>(is);
    if (code != 0 && code != 1)
      throw std::runtime_error("checkpoint: unknown activation code in " + path.string());
    l.act = static_cast<Activation>(code);
  }
  validate_layout(layout);
  std::vector<double> vals(param_count(layout));
  for (auto& v : vals) v = detail::read_le<double>(is);
  return ParamVector(std::move(layout), std::move(vals));
}

}  // namespace emcomm::nnet
