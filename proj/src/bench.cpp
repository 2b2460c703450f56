// SPDX-License-Identifier: Apache-2.0
#include "fdnet/bench.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <thread>

namespace fdnet {

namespace {

std::string cpu_model() {
  std::ifstream cpuinfo("/proc/cpuinfo");
  std::string line;
  while (std::getline(cpuinfo, line)) {
    if (line.rfind("model name", 0) == 0) {
      const auto colon = line.find(':');
      if (colon != std::string::npos) {
        std::string name = line.substr(colon + 1);
        name.erase(0, name.find_first_not_of(' '));
        return name;
      }
    }
  }
  return "unknown";
}

std::string compiler_id() {
#if defined(__clang__)
  return "clang " __clang_version__;
#elif defined(__GNUC__)
  return "gcc " __VERSION__;
#else
  return "unknown";
#endif
}

template <typename T>
inline void do_not_optimize(const T& value) {
#if defined(__GNUC__) || defined(__clang__)
  asm volatile("" : : "g"(value) : "memory");
#else
  (void)value;
#endif
}

std::string fmt(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// CSV-safe: commas in CPU names would split the field.
std::string csv_field(std::string s) {
  std::replace(s.begin(), s.end(), ',', ' ');
  return s;
}

}  // namespace

EnvironmentInfo describe_environment(int threads) {
  return {cpu_model(), std::thread::hardware_concurrency(), threads, compiler_id()};
}

double median(std::vector<double> samples) {
  if (samples.empty()) throw std::invalid_argument("median of an empty sample");
  const std::size_t mid = samples.size() / 2;
  std::nth_element(samples.begin(), samples.begin() + std::ptrdiff_t(mid), samples.end());
  const double upper = samples[mid];
  if (samples.size() % 2 == 1) return upper;
  const double lower = *std::max_element(samples.begin(), samples.begin() + std::ptrdiff_t(mid));
  return 0.5 * (lower + upper);
}

void summarize(BenchmarkReport& r) {
  if (r.run_ms.empty()) throw std::invalid_argument("benchmark needs at least one timed run");
  r.timed_runs = r.run_ms.size();
  r.min_ms = *std::min_element(r.run_ms.begin(), r.run_ms.end());
  r.median_ms = median(r.run_ms);
  r.mean_ms = std::accumulate(r.run_ms.begin(), r.run_ms.end(), 0.0) / double(r.run_ms.size());
}

BenchmarkReport benchmark_engine(const Engine& engine, const Tensorf& input, double mflops,
                                 const BenchOptions& options) {
  if (options.runs < 1) throw std::invalid_argument("benchmark needs at least one timed run");
  Workspace ws(engine.plan());
  BenchmarkReport r;
  r.model = engine.spec().name;
  r.alpha = engine.spec().alpha;
  r.mflops = mflops;
  r.warmup_runs = options.warmup;
  r.run_ms = time_runs(
      [&] {
        const Tensorf probs = engine.infer(input, ws);
        do_not_optimize(probs.data());
      },
      options);
  r.environment = describe_environment(engine.options().threads);
  summarize(r);
  return r;
}

void write_bench_text(std::ostream& os, const BenchmarkReport& r) {
  os << "Models                 | MFLOPs | Time (ms, median)\n";
  char row[160];
  const std::string label = r.model + " " + fmt(r.alpha, 3) + "x";
  std::snprintf(row, sizeof row, "%-22s | %6.1f | %.3f\n", label.c_str(), r.mflops, r.median_ms);
  os << row;
  os << "runs: " << r.timed_runs << " timed, " << r.warmup_runs << " warmup\n";
  os << "min/median/mean ms: " << fmt(r.min_ms, 3) << " / " << fmt(r.median_ms, 3) << " / "
     << fmt(r.mean_ms, 3) << "\n";
  os << "environment: cpu=\"" << r.environment.cpu << "\" threads=" << r.environment.threads
     << " hardware_threads=" << r.environment.hardware_threads << " compiler=\""
     << r.environment.compiler << "\"\n";
}

void write_bench_csv_header(std::ostream& os) {
  os << "model,alpha,mflops,warmup_runs,timed_runs,min_ms,median_ms,mean_ms,threads,"
        "hardware_threads,cpu,compiler\n";
}

void write_bench_csv_row(std::ostream& os, const BenchmarkReport& r) {
  os << r.model << ',' << fmt(r.alpha, 4) << ',' << fmt(r.mflops, 3) << ',' << r.warmup_runs
     << ',' << r.timed_runs << ',' << fmt(r.min_ms, 4) << ',' << fmt(r.median_ms, 4) << ','
     << fmt(r.mean_ms, 4) << ',' << r.environment.threads << ','
     << r.environment.hardware_threads << ',' << csv_field(r.environment.cpu) << ','
     << csv_field(r.environment.compiler) << '\n';
}

}  // namespace fdnet
