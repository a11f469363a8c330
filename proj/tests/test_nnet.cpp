#include "emcomm/nnet.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>

#include "emcomm/rng.hpp"
#include "fd_check.hpp"

using namespace emcomm;
using nnet::Activation;
using nnet::Layout;

namespace {

nnet::ParamVector single_layer(int in, int out, Activation act, std::vector<double> w,
                               std::vector<double> b) {
  std::vector<double> vals = std::move(w);
  vals.insert(vals.end(), b.begin(), b.end());
  return nnet::ParamVector(Layout{{in, out, act}}, std::move(vals));
}

}  // namespace

TEST(nnet, forward_zero_params_gives_zero_output) {
  const Layout layout{{3, 4, Activation::tanh}, {4, 2, Activation::linear}};
  const auto params = nnet::zero_params(layout);
  const auto out = nnet::mlp_forward(params, std::vector<double>{0.3, -1.0, 2.5});
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0], 0.0);
  EXPECT_EQ(out[1], 0.0);
}

TEST(nnet, forward_identity_layer) {
  // weights = I, bias 0, linear
  const auto params = single_layer(2, 2, Activation::linear, {1, 0, 0, 1}, {0, 0});
  const auto out = nnet::mlp_forward(params, std::vector<double>{3.0, -1.0});
  EXPECT_DOUBLE_EQ(out[0], 3.0);
  EXPECT_DOUBLE_EQ(out[1], -1.0);
}

TEST(nnet, forward_tanh_hand_value) {
  // 1->1, weight 2, bias 1, tanh, input 0.5 -> tanh(2.0)
  const auto params = single_layer(1, 1, Activation::tanh, {2.0}, {1.0});
  const auto out = nnet::mlp_forward(params, std::vector<double>{0.5});
  EXPECT_NEAR(out[0], 0.9640275800758169, 1e-12);
}

TEST(nnet, forward_rejects_dimension_mismatch) {
  const auto params = nnet::zero_params(Layout{{3, 2, Activation::linear}});
  EXPECT_THROW(nnet::mlp_forward(params, std::vector<double>{1.0, 2.0}), std::invalid_argument);
}

TEST(nnet, backward_zero_output_grad) {
  Rng rng(11);
  const Layout layout{{3, 4, Activation::tanh}, {4, 2, Activation::linear}};
  const auto params = nnet::init_params(layout, rng);
  nnet::Tape tape;
  nnet::mlp_forward(params, std::vector<double>{0.1, 0.2, 0.3}, &tape);
  std::vector<double> pgrad(params.values.size(), 0.0);
  const auto dx = nnet::mlp_backward(params, tape, std::vector<double>{0.0, 0.0}, pgrad);
  for (double v : pgrad) EXPECT_EQ(v, 0.0);
  for (double v : dx) EXPECT_EQ(v, 0.0);
}

TEST(nnet, backward_linear_chain_rule_by_hand) {
  // linear 1->1, weight w, input x, output grad g: dW = g*x, db = g, dx = g*w
  const double w = 1.7, x = -0.6, g = 2.5;
  const auto params = single_layer(1, 1, Activation::linear, {w}, {0.0});
  nnet::Tape tape;
  nnet::mlp_forward(params, std::vector<double>{x}, &tape);
  std::vector<double> pgrad(2, 0.0);
  const auto dx = nnet::mlp_backward(params, tape, std::vector<double>{g}, pgrad);
  EXPECT_DOUBLE_EQ(pgrad[0], g * x);
  EXPECT_DOUBLE_EQ(pgrad[1], g);
  EXPECT_DOUBLE_EQ(dx[0], g * w);
}

TEST(nnet, backward_rejects_mismatched_tape) {
  Rng rng(1);
  const auto a = nnet::init_params(Layout{{2, 3, Activation::tanh}}, rng);
  const auto b = nnet::init_params(Layout{{2, 3, Activation::linear}}, rng);
  nnet::Tape tape;
  nnet::mlp_forward(a, std::vector<double>{0.5, 0.5}, &tape);
  std::vector<double> pgrad(b.values.size(), 0.0);
  EXPECT_THROW(nnet::mlp_backward(b, tape, std::vector<double>{1, 1, 1}, pgrad),
               std::invalid_argument);
}

// Gradient correctness against central finite differences on random nets.
TEST(nnet, backward_matches_finite_differences_100_configs) {
  for (int trial = 0; trial < 100; ++trial) {
    Rng rng(1000 + trial);
    const int in = 1 + static_cast<int>(rng.integer(4));
    const int hidden = 1 + static_cast<int>(rng.integer(5));
    const int out = 1 + static_cast<int>(rng.integer(3));
    const Layout layout{{in, hidden, Activation::tanh}, {hidden, out, Activation::linear}};
    const auto params = nnet::init_params(layout, rng);
    std::vector<double> input(static_cast<std::size_t>(in));
    for (auto& v : input) v = rng.uniform(-2.0, 2.0);
    std::vector<double> wvec(static_cast<std::size_t>(out));
    for (auto& v : wvec) v = rng.uniform(-1.0, 1.0);

    // scalar loss: dot(w, mlp(params, input))
    const auto loss = [&](std::span<const double> p) {
      nnet::ParamVector pv(layout, std::vector<double>(p.begin(), p.end()));
      const auto y = nnet::mlp_forward(pv, input);
      return std::inner_product(y.begin(), y.end(), wvec.begin(), 0.0);
    };

    nnet::Tape tape;
    nnet::mlp_forward(params, input, &tape);
    std::vector<double> analytic(params.values.size(), 0.0);
    nnet::mlp_backward(params, tape, wvec, analytic);
    const auto numeric = testutil::finite_difference_grad(loss, params.values);
    EXPECT_LT(testutil::max_rel_error(analytic, numeric), 1e-4) << "trial " << trial;
  }
}

TEST(nnet, forward_is_deterministic) {
  Rng rng(7);
  const Layout layout{{4, 8, Activation::tanh}, {8, 3, Activation::linear}};
  const auto params = nnet::init_params(layout, rng);
  const std::vector<double> input{0.1, -0.4, 0.9, 2.2};
  const auto a = nnet::mlp_forward(params, input);
  const auto b = nnet::mlp_forward(params, input);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]);
}

TEST(nnet, gaussian_sample_zero_noise_is_mean) {
  const nnet::GaussianPosterior post({1.5, -2.0, 0.25}, {0.3, -1.0, 2.0});
  const auto out = nnet::gaussian_sample(post, std::vector<double>{0.0, 0.0, 0.0});
  for (std::size_t d = 0; d < 3; ++d) EXPECT_EQ(out[d], post.mean[d]);
}

TEST(nnet, gaussian_sample_identity_and_hand_values) {
  const nnet::GaussianPosterior unit({0.0, 0.0}, {0.0, 0.0});
  const auto a = nnet::gaussian_sample(unit, std::vector<double>{1.0, -2.0});
  EXPECT_DOUBLE_EQ(a[0], 1.0);
  EXPECT_DOUBLE_EQ(a[1], -2.0);

  const nnet::GaussianPosterior post({1.0}, {std::log(4.0)});
  const auto b = nnet::gaussian_sample(post, std::vector<double>{0.5});
  EXPECT_NEAR(b[0], 2.0, 1e-15);  // sigma = 2
}

TEST(nnet, gaussian_sample_rejects_length_mismatch) {
  const nnet::GaussianPosterior post({0.0, 0.0}, {0.0, 0.0});
  EXPECT_THROW(nnet::gaussian_sample(post, std::vector<double>{1.0}), std::invalid_argument);
}

TEST(nnet, posterior_clamps_logvar) {
  const nnet::GaussianPosterior post({0.0}, {25.0});
  EXPECT_DOUBLE_EQ(post.logvar[0], 10.0);
  const nnet::GaussianPosterior post2({0.0}, {-25.0});
  EXPECT_DOUBLE_EQ(post2.logvar[0], -10.0);
}

TEST(nnet, count_flops_hand_values) {
  EXPECT_EQ(nnet::count_flops(Layout{{4, 3, Activation::linear}}).forward_flops, 27);
  EXPECT_EQ(nnet::count_flops(Layout{}).forward_flops, 0);
  const Layout two{{4, 3, Activation::tanh}, {3, 2, Activation::linear}};
  EXPECT_EQ(nnet::count_flops(two).forward_flops, 44);
  EXPECT_EQ(nnet::count_flops(two).param_count, 4 * 3 + 3 + 3 * 2 + 2);
}

TEST(nnet, flop_count_is_pure_function_of_layout) {
  const Layout layout{{12, 32, Activation::tanh}, {32, 16, Activation::linear}};
  const auto a = nnet::count_flops(layout);
  const auto b = nnet::count_flops(layout);
  EXPECT_EQ(a.forward_flops, b.forward_flops);
  EXPECT_EQ(a.param_count, b.param_count);
  EXPECT_GE(a.forward_flops, 0);
}

TEST(nnet, param_vector_validates_length_and_finiteness) {
  const Layout layout{{2, 2, Activation::linear}};
  EXPECT_THROW(nnet::ParamVector(layout, std::vector<double>(5, 0.0)), std::invalid_argument);
  std::vector<double> bad(6, 0.0);
  bad[3] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(nnet::ParamVector(layout, bad), std::invalid_argument);
  EXPECT_THROW(nnet::validate_layout(Layout{{0, 2, Activation::linear}}), std::invalid_argument);
}

TEST(nnet, checkpoint_roundtrip_is_exact) {
  Rng rng(42);
  const Layout layout{{5, 7, Activation::tanh}, {7, 4, Activation::linear}};
  const auto params = nnet::init_params(layout, rng);
  const auto path = std::filesystem::temp_directory_path() / "emcomm_ckpt_test.bin";
  nnet::save_params(params, path);
  const auto loaded = nnet::load_params(path);
  ASSERT_EQ(loaded.layout.size(), layout.size());
  for (std::size_t l = 0; l < layout.size(); ++l) {
    EXPECT_EQ(loaded.layout[l].in, layout[l].in);
    EXPECT_EQ(loaded.layout[l].out, layout[l].out);
    EXPECT_EQ(loaded.layout[l].act, layout[l].act);
  }
  ASSERT_EQ(loaded.values.size(), params.values.size());
  for (std::size_t i = 0; i < params.values.size(); ++i)
    EXPECT_EQ(loaded.values[i], params.values[i]);
  std::filesystem::remove(path);
}

TEST(nnet, checkpoint_header_layout_is_as_documented) {
  // u32 layer count, then i32 triples, then f64 data
  const auto params = single_layer(1, 1, Activation::tanh, {2.0}, {1.0});
  const auto path = std::filesystem::temp_directory_path() / "emcomm_ckpt_header.bin";
  nnet::save_params(params, path);
  EXPECT_EQ(std::filesystem::file_size(path), 4u + 12u + 2u * 8u);
  std::ifstream is(path, std::ios::binary);
  std::uint32_t n = 0;
  std::int32_t in = 0, out = 0, act = 0;
  is.read(reinterpret_cast<char*>(&n), 4);
  is.read(reinterpret_cast<char*>(&in), 4);
  is.read(reinterpret_cast<char*>(&out), 4);
  is.read(reinterpret_cast<char*>(&act), 4);
  EXPECT_EQ(n, 1u);
  EXPECT_EQ(in, 1);
  EXPECT_EQ(out, 1);
  EXPECT_EQ(act, 1);
  std::filesystem::remove(path);
}

TEST(nnet, init_params_respects_fan_in_bound_and_zero_bias) {
  Rng rng(3);
  const Layout layout{{16, 8, Activation::tanh}};
  const auto params = nnet::init_params(layout, rng);
  const double bound = 1.0 / std::sqrt(16.0);
  for (int i = 0; i < 16 * 8; ++i) {
    EXPECT_LE(std::abs(params.values[static_cast<std::size_t>(i)]), bound);
  }
  for (int i = 16 * 8; i < 16 * 8 + 8; ++i)
    EXPECT_EQ(params.values[static_cast<std::size_t>(i)], 0.0);
}
