// SPDX-License-Identifier: Apache-2.0
#include <numeric>

#include <gtest/gtest.h>

#include "fdnet/engine.hpp"
#include "fdnet/reference_forward.hpp"
#include "test_util.hpp"

namespace fdnet {
namespace {

using testing::random_tensor;
using testing::Rng;

std::size_t max_activation_bytes(const ArchitectureSpec& spec) {
  std::size_t largest = static_cast<std::size_t>(spec.input.size());
  for (const Shape& s : layer_output_shapes(spec)) largest = std::max(largest, std::size_t(s.size()));
  return largest * sizeof(float);
}

ArchitectureSpec small_input(ArchitectureSpec spec, Index side) {
  spec.input = Shape{1, 3, side, side};
  return spec;
}

TEST(Compile, FoldsEveryBatchNorm) {
  const auto spec = build_fd_mobilenet(1.0);
  const Engine engine = compile(spec, init_random_weights(spec, 1));
  std::size_t bn = 0;
  for (const auto& l : engine.layers()) bn += l.spec.kind == LayerKind::batch_norm;
  EXPECT_EQ(bn, 0u);
  EXPECT_EQ(count_weighted_layers(engine.spec()), 24u);
  EXPECT_TRUE(validate(engine.spec()).ok());
  EXPECT_EQ(engine.layers().size(), spec.layers.size() - 23);
}

TEST(Compile, NoBatchNormLeavesWeightsUnchanged) {
  ArchitectureSpec spec{"plain", 1.0, Shape{1, 3, 8, 8}, {}};
  spec.layers = {standard_conv(3, 4, 3, 2), relu_layer(4),        depthwise_conv(4, 3, 1),
                 pointwise_conv(4, 6),      global_avg_pool_layer(6), fully_connected_layer(6, 5),
                 softmax_layer(5)};
  const auto store = init_random_weights(spec, 2);
  const Engine engine = compile(spec, store);
  ASSERT_EQ(engine.layers().size(), spec.layers.size());
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto ord = static_cast<std::uint32_t>(i);
    if (is_conv(spec.layers[i].kind)) {
      EXPECT_EQ(engine.layers()[i].weights.kernel, store.conv_weights(ord).kernel) << i;
      EXPECT_TRUE(engine.layers()[i].weights.bias.empty()) << i;
    }
  }
  EXPECT_EQ(engine.layers()[5].weights.kernel, store.fc_weights(5).kernel);
}

TEST(Compile, RejectsMismatchedWeights) {
  const auto spec = build_fd_mobilenet(0.25);
  EXPECT_THROW(compile(spec, init_random_weights(build_fd_mobilenet(0.5), 1)), WeightError);
  auto broken = spec;
  broken.layers[0].c_out = 7;
  EXPECT_THROW(compile(broken, init_random_weights(spec, 1)), ArchitectureError);
}

TEST(Infer, FusedMatchesUnfusedOracle) {
  Rng rng(3);
  for (double alpha : {0.25, 0.5}) {
    const auto spec = small_input(build_fd_mobilenet(alpha), 64);
    auto store = init_random_weights(spec, 4);
    testing::randomize_batch_norms(store, rng);
    const Engine engine = compile(spec, store);
    const Tensorf x = random_tensor(spec.input, rng);
    EXPECT_LE(max_abs_diff(engine.logits(x), reference::forward_logits(spec, store, x)), 1e-4) << alpha;
    EXPECT_LE(max_abs_diff(engine.infer(x), reference::forward(spec, store, x)), 1e-5) << alpha;
  }
}

TEST(Infer, FullResolutionQuarterWidthMatchesOracle) {
  Rng rng(5);
  const auto spec = build_fd_mobilenet(0.25);
  auto store = init_random_weights(spec, 6);
  testing::randomize_batch_norms(store, rng);
  const Tensorf x = random_tensor(spec.input, rng);
  EXPECT_LE(max_abs_diff(compile(spec, store).logits(x), reference::forward_logits(spec, store, x)),
            1e-4);
}

TEST(Infer, ZeroWeightsGiveUniformProbabilities) {
  const auto spec = build_fd_mobilenet(0.25);
  WeightStore store = init_random_weights(spec, 1);
  for (const WeightEntry& e : store.entries())
    if (e.kind != LayerKind::batch_norm)
      std::fill(store.find(e.layer)->data.begin(), store.find(e.layer)->data.end(), 0.0f);
  Rng rng(7);
  const Tensorf probs = compile(spec, store).infer(random_tensor(spec.input, rng));
  ASSERT_EQ(probs.shape(), (Shape{1, 1000, 1, 1}));
  for (Index i = 0; i < probs.size(); ++i) EXPECT_NEAR(probs[i], 0.001f, 1e-9);
}

TEST(Infer, IsDeterministicAcrossRunsAndThreadCounts) {
  const auto spec = build_fd_mobilenet(0.5);
  const auto store = init_random_weights(spec, 8);
  Rng rng(9);
  const Tensorf x = random_tensor(spec.input, rng);
  const Engine single = compile(spec, store);
  const Tensorf first = single.infer(x);
  EXPECT_EQ(single.infer(x), first);
  EXPECT_EQ(compile(spec, store).infer(x), first);
  EXPECT_EQ(compile(spec, store, {.threads = 3}).infer(x), first);
}

TEST(Infer, ProbabilitiesSumToOne) {
  const auto spec = small_input(build_mobilenet(0.125), 64);
  const Engine engine = compile(spec, init_random_weights(spec, 10));
  Rng rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const Tensorf p = engine.infer(random_tensor(spec.input, rng, -3, 3));
    double sum = 0.0;
    for (Index i = 0; i < p.size(); ++i) {
      ASSERT_GE(p[i], 0.0f);
      sum += p[i];
    }
    EXPECT_NEAR(sum, 1.0, 1e-5);
  }
}

TEST(Infer, RejectsWrongInputShape) {
  const auto spec = build_fd_mobilenet(0.25);
  const Engine engine = compile(spec, init_random_weights(spec, 1));
  EXPECT_THROW(engine.infer(Tensorf(Shape{1, 3, 200, 224})), ShapeError);
}

TEST(Infer, StandaloneBatchNormIsExecuted) {
  ArchitectureSpec spec{"bn-first", 1.0, Shape{1, 3, 6, 6}, {}};
  spec.layers = {batch_norm_layer(3), standard_conv(3, 4, 3, 1), batch_norm_layer(4), relu_layer(4),
                 batch_norm_layer(4), global_avg_pool_layer(4), fully_connected_layer(4, 3),
                 softmax_layer(3)};
  Rng rng(12);
  auto store = init_random_weights(spec, 13);
  testing::randomize_batch_norms(store, rng);
  const Engine engine = compile(spec, store);
  for (const auto& l : engine.layers()) EXPECT_NE(l.spec.kind, LayerKind::batch_norm);
  const Tensorf x = random_tensor(spec.input, rng);
  EXPECT_LE(max_abs_diff(engine.logits(x), reference::forward_logits(spec, store, x)), 1e-5);
}

TEST(MemoryPlan, FdMobileNetBufferSize) {
  const MemoryPlan plan = plan_memory(build_fd_mobilenet(1.0));
  EXPECT_EQ(plan.buffer_count, 2u);
  EXPECT_EQ(plan.buffer_bytes, 1'605'632u);
  EXPECT_EQ(plan.buffer_bytes, 4u * 112 * 112 * 32);
  // The quarter-width network peaks at its own input.
  EXPECT_EQ(plan_memory(build_fd_mobilenet(0.25)).buffer_bytes, 4u * 3 * 224 * 224);
}

TEST(MemoryPlan, AssignmentsAlternate) {
  const MemoryPlan plan = plan_memory(build_mobilenet(0.5));
  for (std::size_t i = 0; i < plan.assignment.size(); ++i) {
    EXPECT_EQ(plan.assignment[i].input, int(i % 2));
    EXPECT_EQ(plan.assignment[i].output, int(1 - i % 2));
  }
  ArchitectureSpec one{"one", 1.0, Shape{1, 4, 1, 1}, {fully_connected_layer(4, 2)}};
  const MemoryPlan single = plan_memory(one);
  ASSERT_EQ(single.assignment.size(), 1u);
  EXPECT_EQ(single.assignment[0], (BufferAssignment{0, 1}));
  EXPECT_EQ(single.buffer_bytes, 16u);
}

TEST(MemoryPlan, MeasuredPeakIsTwoLargestActivations) {
  for (double alpha : {0.25, 0.5, 1.0}) {
    const auto spec = build_fd_mobilenet(alpha);
    const Engine engine = compile(spec, init_random_weights(spec, 14));
    Workspace ws(engine.plan());
    const auto allocations = ws.activation_stats().allocations;
    engine.infer(Tensorf(spec.input, 0.25f), ws);
    EXPECT_EQ(ws.activation_stats().allocations, allocations);
    EXPECT_EQ(ws.activation_stats().peak_bytes, 2 * max_activation_bytes(spec)) << alpha;
  }
}

TEST(MemoryPlan, PeakDoesNotGrowWithDepth) {
  auto deep = build_fd_mobilenet(0.5);
  const auto shallow_bytes = plan_memory(deep).peak_activation_bytes();
  // Repeat the 7x7 body block a few more times.
  const auto head = long(deep.layers.size()) - 3;
  const std::vector<LayerSpec> block(deep.layers.begin() + head - 12, deep.layers.begin() + head - 6);
  for (int i = 0; i < 8; ++i) deep.layers.insert(deep.layers.begin() + head - 6, block.begin(), block.end());
  ASSERT_TRUE(validate(deep).ok()) << validate(deep).summary();
  EXPECT_EQ(plan_memory(deep).peak_activation_bytes(), shallow_bytes);
}

}  // namespace
}  // namespace fdnet
