// SPDX-License-Identifier: Apache-2.0
//
// MAC and parameter accounting.
//
// One multiply-accumulate counts as one FLOP unit, so "MFLOPs" below means
// millions of MACs. Batch norm, ReLU, pooling and softmax count zero MACs;
// only convolutions and the fully connected layer do arithmetic that is
// budgeted.
#ifndef FDNET_COMPLEXITY_HPP
#define FDNET_COMPLEXITY_HPP

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "fdnet/arch.hpp"

namespace fdnet {

using Count = std::uint64_t;

Count macs_of_layer(const LayerSpec& layer, const Shape& in);
Count params_of_layer(const LayerSpec& layer);

struct LayerCost {
  std::size_t index = 0;
  LayerKind kind = LayerKind::relu;
  Shape output;
  Count macs = 0;
  Count params = 0;
};

struct StageCost {
  Index out_h = 0;
  Index out_w = 0;
  Count macs = 0;
};

/// Per-layer costs plus layers bucketed by output resolution, in network
/// order. Stages partition the layers.
struct FlopsReport {
  std::string model;
  double alpha = 1.0;
  std::vector<LayerCost> per_layer;
  std::vector<StageCost> per_stage;
  Count total_macs = 0;
  Count total_params = 0;

  /// MACs spent in the `count` highest-resolution stages.
  Count largest_stages_macs(std::size_t count) const;
};

FlopsReport stage_report(const ArchitectureSpec& spec);
Count total_macs(const ArchitectureSpec& spec);
Count params_of(const ArchitectureSpec& spec);

inline double to_mflops(Count macs) { return static_cast<double>(macs) / 1e6; }

struct ScheduleEntry {
  std::size_t weighted_layer = 0;  // 1-based ordinal among weighted layers
  Index factor = 1;                // cumulative stride product so far
  Index out_h = 0;
  Index out_w = 0;
};

using DownsamplingSchedule = std::vector<ScheduleEntry>;

DownsamplingSchedule downsampling_schedule(const ArchitectureSpec& spec);

/// First weighted-layer ordinal at which the cumulative factor reaches
/// `factor`; 0 if it never does.
std::size_t layers_to_reach(const DownsamplingSchedule& schedule, Index factor);

/// MACs of a k x k standard convolution divided by those of the depthwise +
/// pointwise pair replacing it: k^2 * c_out / (k^2 + c_out).
double separable_reduction_ratio(Index kernel, Index c_out);

void write_report_text(std::ostream& os, const FlopsReport& report);
void write_report_csv(std::ostream& os, const FlopsReport& report);

}  // namespace fdnet

#endif  // FDNET_COMPLEXITY_HPP
