// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <sstream>

#include <gtest/gtest.h>

#include "fdnet/bench.hpp"

namespace fdnet {
namespace {

TEST(Median, OddAndEvenSamples) {
  EXPECT_DOUBLE_EQ(median({3.0, 1.0, 2.0}), 2.0);
  EXPECT_DOUBLE_EQ(median({4.0, 1.0, 3.0, 2.0}), 2.5);
  EXPECT_DOUBLE_EQ(median({7.0}), 7.0);
  EXPECT_THROW(median({}), std::invalid_argument);
}

TEST(Summarize, FillsStatistics) {
  BenchmarkReport r;
  r.run_ms = {5.0, 1.0, 3.0, 7.0};
  summarize(r);
  EXPECT_DOUBLE_EQ(r.min_ms, 1.0);
  EXPECT_DOUBLE_EQ(r.median_ms, 4.0);
  EXPECT_DOUBLE_EQ(r.mean_ms, 4.0);
  EXPECT_EQ(r.timed_runs, 4u);
}

TEST(TimeRuns, CallsWarmupPlusRuns) {
  int calls = 0;
  const auto ms = time_runs([&] { ++calls; }, {2, 3});
  EXPECT_EQ(calls, 5);
  ASSERT_EQ(ms.size(), 3u);
  for (double t : ms) EXPECT_GE(t, 0.0);
}

TEST(BenchmarkEngine, SingleRunMedianEqualsMean) {
  ArchitectureSpec spec = build_fd_mobilenet(0.25);
  spec.input = Shape{1, 3, 32, 32};
  const Engine engine = compile(spec, init_random_weights(spec, 1));
  const auto r = benchmark_engine(engine, Tensorf(spec.input, 0.5f), 1.0, {0, 1});
  EXPECT_EQ(r.run_ms.size(), 1u);
  EXPECT_DOUBLE_EQ(r.median_ms, r.mean_ms);
  EXPECT_DOUBLE_EQ(r.min_ms, r.mean_ms);
  EXPECT_EQ(r.model, "fd-mobilenet");
  EXPECT_EQ(r.environment.threads, 1);
}

TEST(BenchCsv, HeaderAndRowHaveMatchingColumns) {
  BenchmarkReport r;
  r.model = "mobilenet";
  r.alpha = 0.5;
  r.mflops = 149.5;
  r.run_ms = {2.0};
  summarize(r);
  r.environment = {"cpu, \"quoted\"", 8, 1, "gcc"};
  std::ostringstream csv;
  write_bench_csv_header(csv);
  write_bench_csv_row(csv, r);
  std::istringstream lines(csv.str());
  std::string header, row;
  std::getline(lines, header);
  std::getline(lines, row);
  EXPECT_EQ(header,
            "model,alpha,mflops,warmup_runs,timed_runs,min_ms,median_ms,mean_ms,threads,"
            "hardware_threads,cpu,compiler");
  EXPECT_EQ(row.rfind("mobilenet,0.5000,149.500,", 0), 0u) << row;
  EXPECT_EQ(std::count(row.begin(), row.end(), ','), std::count(header.begin(), header.end(), ','));
}

TEST(Environment, IsDescribed) {
  const auto env = describe_environment(2);
  EXPECT_EQ(env.threads, 2);
  EXPECT_FALSE(env.cpu.empty());
  EXPECT_FALSE(env.compiler.empty());
}

}  // namespace
}  // namespace fdnet
