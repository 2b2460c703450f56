// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <numeric>
#include <sstream>

#include <gtest/gtest.h>

#include "fdnet/complexity.hpp"
#include "fdnet/reference_forward.hpp"
#include "fdnet/weights.hpp"

namespace fdnet {
namespace {

TEST(MacsOfLayer, Examples) {
  EXPECT_EQ(macs_of_layer(standard_conv(3, 32, 3, 2), {1, 3, 224, 224}), 10'838'016u);
  EXPECT_EQ(macs_of_layer(pointwise_conv(512, 1024), {1, 512, 7, 7}), 25'690'112u);
  EXPECT_EQ(macs_of_layer(fully_connected_layer(1024, 1000), {1, 1024, 1, 1}), 1'024'000u);
  EXPECT_EQ(macs_of_layer(depthwise_conv(32, 3, 2), {1, 32, 112, 112}), 56u * 56 * 32 * 9);
  EXPECT_EQ(macs_of_layer(batch_norm_layer(32), {1, 32, 112, 112}), 0u);
  EXPECT_EQ(macs_of_layer(relu_layer(32), {1, 32, 112, 112}), 0u);
  EXPECT_EQ(macs_of_layer(global_avg_pool_layer(32), {1, 32, 7, 7}), 0u);
  EXPECT_EQ(macs_of_layer(softmax_layer(1000), {1, 1000, 1, 1}), 0u);
}

TEST(ParamsOfLayer, Examples) {
  EXPECT_EQ(params_of_layer(standard_conv(3, 32, 3, 2)), 864u);
  EXPECT_EQ(params_of_layer(depthwise_conv(32, 3, 1)), 288u);
  EXPECT_EQ(params_of_layer(pointwise_conv(32, 64)), 2048u);
  EXPECT_EQ(params_of_layer(fully_connected_layer(1024, 1000)), 1'025'000u);
  EXPECT_EQ(params_of_layer(relu_layer(8)), 0u);
}

TEST(StageReport, FdMobileNetTableStages) {
  const auto report = stage_report(build_fd_mobilenet(1.0));
  const std::vector<std::pair<Index, double>> expected{{112, 10.8}, {56, 7.3}, {28, 20.6},
                                                       {14, 19.9},  {7, 84.7}, {1, 1.0}};
  ASSERT_EQ(report.per_stage.size(), expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) {
    EXPECT_EQ(report.per_stage[i].out_h, expected[i].first);
    EXPECT_EQ(report.per_stage[i].out_w, expected[i].first);
    EXPECT_NEAR(to_mflops(report.per_stage[i].macs), expected[i].second, 0.05) << expected[i].first;
  }
  EXPECT_NEAR(to_mflops(report.total_macs), 144.3, 0.5);
  EXPECT_NEAR(to_mflops(report.largest_stages_macs(4)), 59.0, 1.0);
}

TEST(StageReport, MobileNetLargestFour) {
  EXPECT_NEAR(to_mflops(stage_report(build_mobilenet(0.5)).largest_stages_macs(4)), 129.0, 1.0);
}

TEST(StageReport, StagesAndLayersPartitionTheTotal) {
  for (const auto& spec : {build_fd_mobilenet(1.0), build_fd_mobilenet(0.25), build_mobilenet(0.5)}) {
    const auto r = stage_report(spec);
    Count by_layer = 0, by_stage = 0, params = 0;
    for (const auto& l : r.per_layer) {
      by_layer += l.macs;
      params += l.params;
    }
    for (const auto& s : r.per_stage) by_stage += s.macs;
    EXPECT_EQ(r.per_layer.size(), spec.layers.size());
    EXPECT_EQ(by_layer, r.total_macs);
    EXPECT_EQ(by_stage, r.total_macs);
    EXPECT_EQ(params, r.total_params);
    EXPECT_EQ(r.total_macs, total_macs(spec));
    EXPECT_EQ(r.total_params, params_of(spec));
    EXPECT_EQ(r.largest_stages_macs(100), r.total_macs);
  }
}

TEST(TotalMacs, ComplexityColumn) {
  EXPECT_NEAR(to_mflops(total_macs(build_fd_mobilenet(1.0))), 144.0, 1.0);
  EXPECT_NEAR(to_mflops(total_macs(build_fd_mobilenet(0.5))), 40.0, 1.0);
  EXPECT_NEAR(to_mflops(total_macs(build_fd_mobilenet(0.25))), 12.0, 1.0);
  EXPECT_NEAR(to_mflops(total_macs(build_mobilenet(0.5))), 149.0, 1.0);
  EXPECT_NEAR(to_mflops(total_macs(build_mobilenet(0.25))), 41.0, 1.0);
  EXPECT_NEAR(to_mflops(total_macs(build_mobilenet(0.125))), 12.0, 1.0);
}

TEST(TotalMacs, PerLayerWidthScaling) {
  const auto full = build_fd_mobilenet(1.0);
  const auto half = build_fd_mobilenet(0.5);
  const auto a = stage_report(full).per_layer;
  const auto b = stage_report(half).per_layer;
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].macs == 0) continue;
    // Pointwise cost scales with both widths; the rest with one.
    const Count divisor = a[i].kind == LayerKind::pointwise_conv ? 4 : 2;
    EXPECT_EQ(b[i].macs * divisor, a[i].macs) << i;
  }
}

TEST(TotalMacs, MatchesCountedOracleMacs) {
  // Both networks on a small input, counting every multiply the naive
  // reference actually performs.
  for (auto spec : {build_fd_mobilenet(0.25), build_mobilenet(0.125)}) {
    spec.input = Shape{1, 3, 64, 64};
    const WeightStore store = init_random_weights(spec, 3);
    std::uint64_t counted = 0;
    reference::forward(spec, store, Tensorf(spec.input, 0.5f), std::nullopt, &counted);
    EXPECT_EQ(counted, total_macs(spec)) << spec.name;
  }
}

TEST(Schedule, FdMobileNetAndMobileNet) {
  const auto fd = downsampling_schedule(build_fd_mobilenet(1.0));
  EXPECT_EQ(fd.size(), 24u);
  EXPECT_EQ(layers_to_reach(fd, 4), 2u);
  EXPECT_EQ(layers_to_reach(fd, 32), 12u);
  const auto mb = downsampling_schedule(build_mobilenet(1.0));
  EXPECT_EQ(layers_to_reach(mb, 4), 4u);
  EXPECT_EQ(layers_to_reach(mb, 32), 24u);
  EXPECT_EQ(layers_to_reach(mb, 64), 0u);
  for (std::size_t i = 0; i < fd.size(); ++i) EXPECT_EQ(fd[i].weighted_layer, i + 1);
  EXPECT_EQ(fd[11].out_h, 7);
}

TEST(Schedule, StrideOneChainStaysAtOne) {
  ArchitectureSpec spec{"flat", 1.0, Shape{1, 3, 8, 8}, {}};
  spec.layers = {standard_conv(3, 4, 3, 1), depthwise_conv(4, 3, 1), pointwise_conv(4, 6),
                 global_avg_pool_layer(6), fully_connected_layer(6, 2)};
  for (const auto& e : downsampling_schedule(spec)) EXPECT_EQ(e.factor, 1);
}

TEST(SeparableReduction, Examples) {
  EXPECT_NEAR(separable_reduction_ratio(3, 512), 8.84, 0.005);
  EXPECT_DOUBLE_EQ(separable_reduction_ratio(3, 9), 4.5);
  double previous = 0.0;
  for (Index c = 1; c <= (Index(1) << 20); c *= 4) {
    const double r = separable_reduction_ratio(3, c);
    EXPECT_GT(r, previous);
    EXPECT_LT(r, 9.0);
    previous = r;
  }
  EXPECT_GT(previous, 8.999);
  EXPECT_THROW(separable_reduction_ratio(0, 4), std::invalid_argument);
}

TEST(Report, TextAndCsvOutput) {
  const auto report = stage_report(build_fd_mobilenet(1.0));
  std::ostringstream text, csv;
  write_report_text(text, report);
  write_report_csv(csv, report);
  EXPECT_NE(text.str().find("84.7"), std::string::npos);
  EXPECT_NE(text.str().find("144.5"), std::string::npos);
  std::istringstream lines(csv.str());
  std::string header;
  std::getline(lines, header);
  EXPECT_EQ(header, "layer_index,kind,out_h,out_w,c_out,macs,params");
  std::size_t rows = 0;
  for (std::string line; std::getline(lines, line);) ++rows;
  EXPECT_EQ(rows, report.per_layer.size());
}

}  // namespace
}  // namespace fdnet
