// SPDX-License-Identifier: Apache-2.0
#include "fdnet/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "fdnet/bench.hpp"
#include "fdnet/complexity.hpp"
#include "fdnet/engine.hpp"
#include "fdnet/image.hpp"
#include "fdnet/tensor_io.hpp"
#include "fdnet/weights.hpp"

namespace fdnet {

namespace {

struct ModelArgs {
  std::string model;
  double alpha = 1.0;
};

void add_model_args(CLI::App* cmd, ModelArgs& m, bool required = true) {
  auto* opt = cmd->add_option("model", m.model, "fd-mobilenet or mobilenet")
                  ->check(CLI::IsMember({"fd-mobilenet", "mobilenet"}));
  if (required) opt->required();
  cmd->add_option("--alpha", m.alpha, "Width multiplier")->check(CLI::PositiveNumber);
}

std::array<float, 3> parse_triple(const std::string& text, const char* flag) {
  std::array<float, 3> v{};
  std::stringstream ss(text);
  std::string item;
  std::size_t i = 0;
  while (std::getline(ss, item, ',')) {
    if (i == 3) break;
    v[i++] = std::stof(item);
  }
  if (i != 3 || std::getline(ss, item, ','))
    throw std::invalid_argument(std::string(flag) + " expects three comma-separated values");
  return v;
}

std::string read_text_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

void write_text_output(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << text;
}

int cmd_flops(const ModelArgs& m, const std::string& format, std::ostream& out) {
  const FlopsReport report = stage_report(build_model(m.model, m.alpha));
  if (format == "csv") {
    write_report_csv(out, report);
  } else {
    write_report_text(out, report);
  }
  return 0;
}

struct BenchArgs {
  std::size_t warmup = 5;
  std::size_t runs = 30;
  std::uint64_t seed = 0;
  int threads = 1;
};

int cmd_bench(const ModelArgs& m, const BenchArgs& b, const std::string& format, std::ostream& out) {
  const ArchitectureSpec spec = build_model(m.model, m.alpha);
  const Engine engine = compile(spec, init_random_weights(spec, b.seed), {b.threads});

  // Deterministic pseudo-image in [0, 1).
  Tensorf input(spec.input);
  std::uint64_t state = b.seed * 6364136223846793005ull + 1442695040888963407ull;
  for (Index i = 0; i < input.size(); ++i) {
    state = state * 6364136223846793005ull + 1442695040888963407ull;
    input[i] = static_cast<float>(state >> 40) / 16777216.0f;
  }

  const BenchmarkReport report =
      benchmark_engine(engine, input, to_mflops(total_macs(spec)), {b.warmup, b.runs});
  if (format == "csv") {
    write_bench_csv_header(out);
    write_bench_csv_row(out, report);
  } else {
    write_bench_text(out, report);
  }
  return 0;
}

struct RunArgs {
  std::string arch;
  std::string weights;
  std::string image;
  std::size_t topk = 5;
  int threads = 1;
  float input_scale = 1.0f / 255.0f;
  std::string mean = "0,0,0";
  std::string stddev = "1,1,1";
};

int cmd_run(const ModelArgs& m, const RunArgs& r, const std::string& format, std::ostream& out) {
  ArchitectureSpec spec;
  if (!r.arch.empty()) {
    spec = import_json(read_text_file(r.arch));
  } else if (!m.model.empty()) {
    spec = build_model(m.model, m.alpha);
  } else {
    throw std::invalid_argument("run needs a model name or --arch");
  }
  require_valid(spec);
  const Engine engine = compile(spec, read_weights_file(r.weights), {r.threads});

  Tensorf image = load_image(r.image);
  Tensorf input;
  if (image.shape() == spec.input) {
    input = std::move(image);
  } else {
    if (spec.input.h != spec.input.w)
      throw std::invalid_argument("preprocessing needs a square network input");
    PreprocessOptions pre;
    pre.crop = spec.input.h;
    pre.short_side = std::max<Index>(pre.crop, pre.crop * 256 / 224);
    pre.value_scale = r.input_scale;
    pre.mean = parse_triple(r.mean, "--mean");
    pre.stddev = parse_triple(r.stddev, "--std");
    input = preprocess(image, pre);
  }

  const Tensorf probs = engine.infer(input);
  std::vector<Index> order(static_cast<std::size_t>(probs.size()));
  std::iota(order.begin(), order.end(), Index{0});
  const std::size_t k = std::min(r.topk, order.size());
  // Ties resolve to the lower class index.
  std::partial_sort(order.begin(), order.begin() + std::ptrdiff_t(k), order.end(),
                    [&](Index a, Index b) { return probs[a] > probs[b] || (probs[a] == probs[b] && a < b); });

  char line[96];
  if (format == "csv") out << "rank,class,probability\n";
  for (std::size_t i = 0; i < k; ++i) {
    const Index cls = order[i];
    if (format == "csv") {
      std::snprintf(line, sizeof line, "%zu,%td,%.9g\n", i + 1, cls, double(probs[cls]));
    } else {
      std::snprintf(line, sizeof line, "%2zu  class %4td  p=%.9g\n", i + 1, cls, double(probs[cls]));
    }
    out << line;
  }
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Inference engine and complexity analyzer for fast-downsampling MobileNets",
               "fdnet"};
  app.require_subcommand(1);
  std::string format = "text";
  auto add_format = [&format](CLI::App* cmd) {
    cmd->add_option("--format", format, "Output format")->check(CLI::IsMember({"text", "csv"}));
  };

  ModelArgs model;
  auto* flops = app.add_subcommand("flops", "Per-layer and per-resolution MAC report");
  add_model_args(flops, model);
  add_format(flops);

  BenchArgs bench_args;
  auto* bench = app.add_subcommand("bench", "Single-input inference latency benchmark");
  add_model_args(bench, model);
  add_format(bench);
  bench->add_option("--warmup", bench_args.warmup, "Untimed warmup runs");
  bench->add_option("--runs", bench_args.runs, "Timed runs")->check(CLI::PositiveNumber);
  bench->add_option("--seed", bench_args.seed, "Weight and input seed");
  bench->add_option("--threads", bench_args.threads, "Intra-op threads")->check(CLI::PositiveNumber);

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "Classify one image and print the top-k classes");
  add_model_args(run, model, false);
  add_format(run);
  run->add_option("--arch", run_args.arch, "Architecture JSON (instead of a model name)");
  run->add_option("--weights", run_args.weights, "FDW1 weight file")->required();
  run->add_option("--image", run_args.image, "P6 PPM or FDT1 tensor")->required();
  run->add_option("--topk", run_args.topk, "Number of classes to print")->check(CLI::PositiveNumber);
  run->add_option("--threads", run_args.threads, "Intra-op threads")->check(CLI::PositiveNumber);
  run->add_option("--input-scale", run_args.input_scale, "Multiplier applied to pixel values");
  run->add_option("--mean", run_args.mean, "Per-channel mean subtracted after scaling (r,g,b)");
  run->add_option("--std", run_args.stddev, "Per-channel divisor applied after the mean (r,g,b)");

  std::uint64_t seed = 0;
  std::string out_path;
  auto* gen = app.add_subcommand("gen-weights", "Write seeded random weights (FDW1)");
  add_model_args(gen, model);
  gen->add_option("--seed", seed, "Random seed");
  gen->add_option("--out", out_path, "Output path")->required();

  auto* export_arch = app.add_subcommand("export-arch", "Write the architecture as JSON");
  add_model_args(export_arch, model);
  export_arch->add_option("--out", out_path, "Output path (stdout when omitted)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*flops) return cmd_flops(model, format, out);
    if (*bench) return cmd_bench(model, bench_args, format, out);
    if (*run) return cmd_run(model, run_args, format, out);
    if (*gen) {
      const ArchitectureSpec spec = build_model(model.model, model.alpha);
      write_weights_file(out_path, init_random_weights(spec, seed));
      return 0;
    }
    if (*export_arch) {
      write_text_output(out_path, export_json(build_model(model.model, model.alpha)), out);
      return 0;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace fdnet
