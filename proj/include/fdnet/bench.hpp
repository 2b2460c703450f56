// SPDX-License-Identifier: Apache-2.0
//
// Wall-clock latency harness: untimed warmup runs, then per-run timings with
// a monotonic clock, summarized by min / median / mean.
#ifndef FDNET_BENCH_HPP
#define FDNET_BENCH_HPP

#include <chrono>
#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "fdnet/engine.hpp"

namespace fdnet {

struct BenchOptions {
  std::size_t warmup = 5;
  std::size_t runs = 30;
};

struct EnvironmentInfo {
  std::string cpu;
  unsigned hardware_threads = 0;
  int threads = 1;  // intra-op threads used for the measurement
  std::string compiler;
};

struct BenchmarkReport {
  std::string model;
  double alpha = 1.0;
  double mflops = 0.0;
  std::size_t warmup_runs = 0;
  std::size_t timed_runs = 0;
  std::vector<double> run_ms;
  double min_ms = 0.0;
  double median_ms = 0.0;
  double mean_ms = 0.0;
  EnvironmentInfo environment;
};

EnvironmentInfo describe_environment(int threads);

/// Median of a non-empty sample; even sizes average the two middle values.
double median(std::vector<double> samples);

/// Fills the summary statistics from `run_ms`, which must be non-empty.
void summarize(BenchmarkReport& report);

/// Times `fn` `runs` times after `warmup` untimed calls; returns milliseconds.
template <typename Fn>
std::vector<double> time_runs(Fn&& fn, const BenchOptions& options) {
  for (std::size_t i = 0; i < options.warmup; ++i) fn();
  std::vector<double> ms;
  ms.reserve(options.runs);
  for (std::size_t i = 0; i < options.runs; ++i) {
    const auto start = std::chrono::steady_clock::now();
    fn();
    const auto stop = std::chrono::steady_clock::now();
    ms.push_back(std::chrono::duration<double, std::milli>(stop - start).count());
  }
  return ms;
}

/// Times Engine::infer on `input` alone; the workspace is allocated once
/// outside the timed region.
BenchmarkReport benchmark_engine(const Engine& engine, const Tensorf& input, double mflops,
                                 const BenchOptions& options);

void write_bench_text(std::ostream& os, const BenchmarkReport& report);
void write_bench_csv_header(std::ostream& os);
void write_bench_csv_row(std::ostream& os, const BenchmarkReport& report);

}  // namespace fdnet

#endif  // FDNET_BENCH_HPP
