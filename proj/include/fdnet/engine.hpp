// SPDX-License-Identifier: Apache-2.0
#ifndef FDNET_ENGINE_HPP
#define FDNET_ENGINE_HPP

#include <algorithm>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "fdnet/arch.hpp"
#include "fdnet/ops.hpp"
#include "fdnet/weights.hpp"

namespace fdnet {

struct BufferAssignment {
  int input = 0;
  int output = 1;

  friend bool operator==(const BufferAssignment&, const BufferAssignment&) = default;
};

/// Ping-pong activation plan for a single-path network.
///
/// The network input is placed in buffer 0; layer i reads buffer i % 2 and
/// writes the other one. Both buffers are sized to the largest activation in
/// the chain, input included. Scratch for patch gathering is accounted
/// separately since it never holds an activation.
struct MemoryPlan {
  std::size_t buffer_count = 2;
  std::size_t buffer_bytes = 0;
  std::size_t scratch_bytes = 0;
  std::vector<BufferAssignment> assignment;

  std::size_t peak_activation_bytes() const { return buffer_count * buffer_bytes; }
};

MemoryPlan plan_memory(const ArchitectureSpec& spec);

/// Allocation counters shared between a workspace and its allocator.
struct AllocationStats {
  std::size_t current_bytes = 0;
  std::size_t peak_bytes = 0;
  std::size_t allocations = 0;
};

template <typename T>
class CountingAllocator {
 public:
  using value_type = T;

  explicit CountingAllocator(AllocationStats* stats) : stats_(stats) {}
  template <typename U>
  CountingAllocator(const CountingAllocator<U>& other) : stats_(other.stats()) {}

  T* allocate(std::size_t n) {
    T* p = std::allocator<T>{}.allocate(n);
    stats_->current_bytes += n * sizeof(T);
    stats_->peak_bytes = std::max(stats_->peak_bytes, stats_->current_bytes);
    ++stats_->allocations;
    return p;
  }
  void deallocate(T* p, std::size_t n) {
    stats_->current_bytes -= n * sizeof(T);
    std::allocator<T>{}.deallocate(p, n);
  }

  AllocationStats* stats() const { return stats_; }

  friend bool operator==(const CountingAllocator& a, const CountingAllocator& b) {
    return a.stats_ == b.stats_;
  }

 private:
  AllocationStats* stats_;
};

/// Per-call activation memory instantiated from a MemoryPlan. Not shareable
/// between concurrent inferences; give each thread its own.
class Workspace {
 public:
  explicit Workspace(const MemoryPlan& plan);
  Workspace(const Workspace&) = delete;
  Workspace& operator=(const Workspace&) = delete;

  std::span<float> buffer(int id);
  std::span<float> scratch() { return scratch_; }

  /// Measured activation-buffer allocations (scratch excluded).
  const AllocationStats& activation_stats() const { return *activation_stats_; }
  bool fits(const MemoryPlan& plan) const;

 private:
  using CountedVector = std::vector<float, CountingAllocator<float>>;

  std::unique_ptr<AllocationStats> activation_stats_;
  std::vector<CountedVector> buffers_;
  std::vector<float> scratch_;
};

struct EngineOptions {
  int threads = 1;  // intra-op threads; results do not depend on it
};

/// A layer ready for execution. Convolutions carry folded bias; the fully
/// connected layer carries its bias in `weights` too.
struct CompiledLayer {
  LayerSpec spec;
  ConvWeights<float> weights;
};

/// Compiled single-path network: batch norms folded away, memory planned.
/// Immutable after compile(); share freely across threads.
class Engine {
 public:
  const ArchitectureSpec& spec() const { return spec_; }
  const std::vector<CompiledLayer>& layers() const { return layers_; }
  const MemoryPlan& plan() const { return plan_; }
  const EngineOptions& options() const { return options_; }

  /// Class probabilities (1 x classes x 1 x 1) for a single input.
  Tensorf infer(const Tensorf& input) const;
  Tensorf infer(const Tensorf& input, Workspace& workspace) const;

  /// Pre-softmax scores.
  Tensorf logits(const Tensorf& input) const;

 private:
  friend Engine compile(const ArchitectureSpec&, const WeightStore&, EngineOptions);
  Tensorf run(const Tensorf& input, Workspace& workspace, std::size_t layer_count) const;

  ArchitectureSpec spec_;
  std::vector<CompiledLayer> layers_;
  MemoryPlan plan_;
  EngineOptions options_;
};

/// Checks the weights against the architecture, folds every batch norm into the
/// convolution before it (a batch norm without one becomes a 1x1 depthwise
/// convolution), and plans activation memory.
Engine compile(const ArchitectureSpec& spec, const WeightStore& store, EngineOptions options = {});

}  // namespace fdnet

#endif  // FDNET_ENGINE_HPP
