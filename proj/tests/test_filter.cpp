#include "emcomm/filter.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "emcomm/rng.hpp"
#include "fd_check.hpp"

using namespace emcomm;
using filter::BandwidthBudget;
using filter::ImportanceGates;

TEST(filter, gate_message_identity_limit) {
  // rho = 10 per dim: kappa within 1e-4 of 1
  const ImportanceGates gates(std::vector<double>(3, 10.0));
  const std::vector<double> msg{1.0, -2.0, 0.5};
  const auto out = filter::gate_message(msg, gates);
  for (std::size_t d = 0; d < msg.size(); ++d) EXPECT_NEAR(out[d], msg[d], 1e-4);
}

TEST(filter, gate_message_zero_message) {
  const ImportanceGates gates(std::vector<double>{0.3, -0.7});
  const auto out = filter::gate_message(std::vector<double>{0.0, 0.0}, gates);
  EXPECT_EQ(out[0], 0.0);
  EXPECT_EQ(out[1], 0.0);
}

TEST(filter, gate_message_sigmoid_half) {
  const ImportanceGates gates(std::vector<double>{0.0, 0.0});
  const auto out = filter::gate_message(std::vector<double>{2.0, -4.0}, gates);
  EXPECT_DOUBLE_EQ(out[0], 1.0);
  EXPECT_DOUBLE_EQ(out[1], -2.0);
}

TEST(filter, gate_message_rejects_length_mismatch) {
  const ImportanceGates gates(std::vector<double>{0.0});
  EXPECT_THROW(filter::gate_message(std::vector<double>{1.0, 2.0}, gates), std::invalid_argument);
}

TEST(filter, regularizer_hand_values) {
  EXPECT_DOUBLE_EQ(filter::importance_regularizer(ImportanceGates{}), 1.0);  // empty sum
  const ImportanceGates half(std::vector<double>(4, 0.0));
  EXPECT_NEAR(filter::importance_regularizer(half), std::exp(2.0), 1e-12);
  const ImportanceGates off(std::vector<double>(4, -10.0));
  EXPECT_NEAR(filter::importance_regularizer(off), 1.0, 1e-3);
}

TEST(filter, regularizer_strictly_increasing_and_bounded) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t dims = 1 + rng.integer(6);
    std::vector<double> raw(dims);
    for (auto& v : raw) v = rng.uniform(-4.0, 4.0);
    const ImportanceGates gates(raw);
    const double val = filter::importance_regularizer(gates);
    EXPECT_GT(val, 1.0);
    EXPECT_LT(val, std::exp(static_cast<double>(dims)));
    const std::size_t d = rng.integer(dims);
    raw[d] += 0.1;
    EXPECT_GT(filter::importance_regularizer(ImportanceGates(raw)), val);
  }
}

TEST(filter, regularizer_grad_matches_finite_differences) {
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> raw(5);
    for (auto& v : raw) v = rng.uniform(-3.0, 3.0);
    std::vector<double> analytic(raw.size(), 0.0);
    filter::importance_regularizer_grad(ImportanceGates(raw), analytic);
    const auto numeric = testutil::finite_difference_grad(
        [](std::span<const double> p) {
          return filter::importance_regularizer(
              ImportanceGates(std::vector<double>(p.begin(), p.end())));
        },
        raw);
    EXPECT_LT(testutil::max_rel_error(analytic, numeric), 1e-5);
  }
}

TEST(filter, mask_full_budget_equals_gating) {
  const ImportanceGates gates(std::vector<double>{0.5, -1.0, 2.0});
  const std::vector<double> msg{1.0, 2.0, 3.0};
  const auto masked = filter::mask_to_bandwidth(msg, gates, BandwidthBudget{3});
  const auto gated = filter::gate_message(msg, gates);
  for (std::size_t d = 0; d < msg.size(); ++d) EXPECT_EQ(masked[d], gated[d]);
}

TEST(filter, mask_zero_budget_is_zero_vector) {
  const ImportanceGates gates(std::vector<double>{0.5, -1.0, 2.0});
  const auto masked = filter::mask_to_bandwidth(std::vector<double>{1.0, 2.0, 3.0}, gates,
                                                BandwidthBudget{0});
  for (double v : masked) EXPECT_EQ(v, 0.0);
}

TEST(filter, mask_keeps_top_kappa_indices) {
  // kappa = (0.9, 0.1, 0.5) via logits; gated message (1, 2, 3); B=2 keeps {0, 2}
  const auto logit = [](double k) { return std::log(k / (1.0 - k)); };
  const ImportanceGates gates(std::vector<double>{logit(0.9), logit(0.1), logit(0.5)});
  const std::vector<double> msg{1.0 / 0.9, 2.0 / 0.1, 3.0 / 0.5};
  const auto masked = filter::mask_to_bandwidth(msg, gates, BandwidthBudget{2});
  EXPECT_NEAR(masked[0], 1.0, 1e-12);
  EXPECT_EQ(masked[1], 0.0);
  EXPECT_NEAR(masked[2], 3.0, 1e-12);
}

TEST(filter, effective_dimension_counts_nonzeros) {
  EXPECT_EQ(filter::effective_dimension(std::vector<double>{0.0, 0.0}), 0);
  EXPECT_EQ(filter::effective_dimension(std::vector<double>{1.0, 0.0, 3.0}), 2);
}

// B-constraint fuzz: effective dim <= B, idempotence, nesting across budgets.
TEST(filter, masking_invariants_fuzz) {
  Rng rng(23);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t dims = 1 + rng.integer(10);
    std::vector<double> raw(dims), msg(dims);
    for (auto& v : raw) v = rng.uniform(-5.0, 5.0);
    for (auto& v : msg) v = rng.uniform(-3.0, 3.0);
    if (rng.uniform() < 0.2) raw[rng.integer(dims)] = raw[rng.integer(dims)];  // tie chance
    const ImportanceGates gates(raw);
    const int budget = static_cast<int>(rng.integer(dims + 1));

    const auto masked = filter::mask_to_bandwidth(msg, gates, BandwidthBudget{budget});
    EXPECT_LE(filter::effective_dimension(masked), budget);

    // idempotence of the deployment mask
    const auto twice = filter::select_to_bandwidth(masked, gates, BandwidthBudget{budget});
    for (std::size_t d = 0; d < dims; ++d) EXPECT_EQ(twice[d], masked[d]);

    // composite equals gate-then-select
    const auto composed =
        filter::select_to_bandwidth(filter::gate_message(msg, gates), gates, BandwidthBudget{budget});
    for (std::size_t d = 0; d < dims; ++d) EXPECT_EQ(composed[d], masked[d]);

    // kept sets nest as the budget grows
    if (budget < static_cast<int>(dims)) {
      const auto kept_b = filter::top_gate_indices(gates, budget);
      const auto kept_b1 = filter::top_gate_indices(gates, budget + 1);
      const std::set<std::size_t> larger(kept_b1.begin(), kept_b1.end());
      for (std::size_t idx : kept_b) EXPECT_TRUE(larger.count(idx)) << "budget " << budget;
    }
  }
}

TEST(filter, masked_dense_message_has_exactly_min_b_d_dims) {
  Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t dims = 2 + rng.integer(8);
    std::vector<double> raw(dims), msg(dims);
    for (auto& v : raw) v = rng.uniform(-3.0, 3.0);
    for (auto& v : msg) v = rng.uniform(0.5, 2.0) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
    const int budget = static_cast<int>(rng.integer(dims + 1));
    const auto masked =
        filter::mask_to_bandwidth(msg, ImportanceGates(raw), BandwidthBudget{budget});
    EXPECT_EQ(filter::effective_dimension(masked),
              std::min<int>(budget, static_cast<int>(dims)));
  }
}

TEST(filter, mask_tie_break_is_lowest_index) {
  const ImportanceGates gates(std::vector<double>{1.0, 1.0, 1.0});
  const auto kept = filter::top_gate_indices(gates, 2);
  ASSERT_EQ(kept.size(), 2u);
  EXPECT_EQ(kept[0], 0u);
  EXPECT_EQ(kept[1], 1u);
}

TEST(filter, truncate_keeps_prefix) {
  const auto out = filter::truncate_to_bandwidth(std::vector<double>{5.0, 6.0, 7.0, 8.0}, 2);
  EXPECT_EQ(out[0], 5.0);
  EXPECT_EQ(out[1], 6.0);
  EXPECT_EQ(out[2], 0.0);
  EXPECT_EQ(out[3], 0.0);
}
