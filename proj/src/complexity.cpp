// SPDX-License-Identifier: Apache-2.0
#include "fdnet/complexity.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <string>

namespace fdnet {

namespace {

Count as_count(Index v) { return static_cast<Count>(v); }

std::string mflops_1dp(Count macs) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", to_mflops(macs));
  return buf;
}

}  // namespace

Count macs_of_layer(const LayerSpec& layer, const Shape& in) {
  const Shape out = layer_output_shape(layer, in);
  const Count pixels = as_count(out.h) * as_count(out.w) * as_count(in.n);
  const Count k2 = as_count(layer.kernel) * as_count(layer.kernel);
  switch (layer.kind) {
    case LayerKind::standard_conv:
      return pixels * as_count(layer.c_out) * as_count(layer.c_in) * k2;
    case LayerKind::depthwise_conv:
      return pixels * as_count(layer.c_out) * k2;
    case LayerKind::pointwise_conv:
      return pixels * as_count(layer.c_out) * as_count(layer.c_in);
    case LayerKind::fully_connected:
      return as_count(in.n) * as_count(layer.c_in) * as_count(layer.c_out);
    default:
      return 0;
  }
}

Count params_of_layer(const LayerSpec& layer) {
  const Count k2 = as_count(layer.kernel) * as_count(layer.kernel);
  switch (layer.kind) {
    case LayerKind::standard_conv:
    case LayerKind::pointwise_conv:
      return k2 * as_count(layer.c_in) * as_count(layer.c_out);
    case LayerKind::depthwise_conv:
      return k2 * as_count(layer.c_out);
    case LayerKind::fully_connected:
      return (as_count(layer.c_in) + 1) * as_count(layer.c_out);
    case LayerKind::batch_norm:
      return 4 * as_count(layer.c_out);
    default:
      return 0;
  }
}

Count FlopsReport::largest_stages_macs(std::size_t count) const {
  std::vector<StageCost> stages = per_stage;
  std::sort(stages.begin(), stages.end(), [](const StageCost& a, const StageCost& b) {
    return a.out_h * a.out_w > b.out_h * b.out_w;
  });
  Count sum = 0;
  for (std::size_t i = 0; i < std::min(count, stages.size()); ++i) sum += stages[i].macs;
  return sum;
}

FlopsReport stage_report(const ArchitectureSpec& spec) {
  require_valid(spec);
  FlopsReport r;
  r.model = spec.name;
  r.alpha = spec.alpha;
  Shape shape = spec.input;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    const Shape out = layer_output_shape(l, shape);
    const LayerCost cost{i, l.kind, out, macs_of_layer(l, shape), params_of_layer(l)};
    r.per_layer.push_back(cost);
    r.total_macs += cost.macs;
    r.total_params += cost.params;

    auto stage = std::find_if(r.per_stage.begin(), r.per_stage.end(), [&](const StageCost& s) {
      return s.out_h == out.h && s.out_w == out.w;
    });
    if (stage == r.per_stage.end()) {
      r.per_stage.push_back({out.h, out.w, 0});
      stage = r.per_stage.end() - 1;
    }
    stage->macs += cost.macs;
    shape = out;
  }
  return r;
}

Count total_macs(const ArchitectureSpec& spec) { return stage_report(spec).total_macs; }

Count params_of(const ArchitectureSpec& spec) { return stage_report(spec).total_params; }

DownsamplingSchedule downsampling_schedule(const ArchitectureSpec& spec) {
  require_valid(spec);
  DownsamplingSchedule schedule;
  Shape shape = spec.input;
  Index factor = 1;
  std::size_t ordinal = 0;
  for (const LayerSpec& l : spec.layers) {
    shape = layer_output_shape(l, shape);
    if (!is_weighted(l.kind)) continue;
    factor *= l.stride;
    schedule.push_back({++ordinal, factor, shape.h, shape.w});
  }
  return schedule;
}

std::size_t layers_to_reach(const DownsamplingSchedule& schedule, Index factor) {
  for (const ScheduleEntry& e : schedule)
    if (e.factor >= factor) return e.weighted_layer;
  return 0;
}

double separable_reduction_ratio(Index kernel, Index c_out) {
  if (kernel < 1 || c_out < 1)
    throw std::invalid_argument("separable_reduction_ratio: kernel and c_out must be >= 1");
  const double k2 = static_cast<double>(kernel * kernel);
  return k2 * static_cast<double>(c_out) / (k2 + static_cast<double>(c_out));
}

void write_report_text(std::ostream& os, const FlopsReport& r) {
  char line[160];
  os << "model: " << r.model << "  alpha: " << r.alpha << "\n";
  os << "convention: 1 multiply-accumulate = 1 FLOP; BN/ReLU/pool/softmax = 0\n\n";
  std::snprintf(line, sizeof line, "%5s  %-16s %9s %6s %14s %10s\n", "index", "kind", "output",
                "c_out", "macs", "params");
  os << line;
  for (const LayerCost& c : r.per_layer) {
    const std::string res = std::to_string(c.output.h) + "x" + std::to_string(c.output.w);
    std::snprintf(line, sizeof line, "%5zu  %-16s %9s %6td %14llu %10llu\n", c.index,
                  std::string(to_string(c.kind)).c_str(), res.c_str(), c.output.c,
                  static_cast<unsigned long long>(c.macs),
                  static_cast<unsigned long long>(c.params));
    os << line;
  }
  os << "\nstage        MFLOPs\n";
  for (const StageCost& s : r.per_stage) {
    const std::string res = std::to_string(s.out_h) + "x" + std::to_string(s.out_w);
    std::snprintf(line, sizeof line, "%-10s %8s\n", res.c_str(), mflops_1dp(s.macs).c_str());
    os << line;
  }
  os << "\ntotal MFLOPs: " << mflops_1dp(r.total_macs) << "\n";
  os << "total MACs: " << r.total_macs << "\n";
  os << "total params: " << r.total_params << "\n";
  os << "largest-4-resolution MFLOPs: " << mflops_1dp(r.largest_stages_macs(4)) << "\n";
}

void write_report_csv(std::ostream& os, const FlopsReport& r) {
  os << "layer_index,kind,out_h,out_w,c_out,macs,params\n";
  for (const LayerCost& c : r.per_layer) {
    os << c.index << ',' << to_string(c.kind) << ',' << c.output.h << ',' << c.output.w << ','
       << c.output.c << ',' << c.macs << ',' << c.params << '\n';
  }
}

}  // namespace fdnet
