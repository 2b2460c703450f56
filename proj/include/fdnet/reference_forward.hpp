// SPDX-License-Identifier: Apache-2.0
#ifndef FDNET_REFERENCE_FORWARD_HPP
#define FDNET_REFERENCE_FORWARD_HPP

#include <cstdint>
#include <optional>

#include "fdnet/arch.hpp"
#include "fdnet/weights.hpp"

namespace fdnet::reference {

/// Unfused layer-by-layer forward pass built only from the naive kernels.
/// Batch norms run as separate layers. When `layer_count` is given only that
/// many leading layers run. `macs`, if set, is incremented for every
/// multiply-accumulate the convolutions and the fully connected layer do.
Tensorf forward(const ArchitectureSpec& spec, const WeightStore& store, const Tensorf& input,
                std::optional<std::size_t> layer_count = std::nullopt,
                std::uint64_t* macs = nullptr);

/// forward() up to, not including, a trailing softmax.
Tensorf forward_logits(const ArchitectureSpec& spec, const WeightStore& store, const Tensorf& input);

}  // namespace fdnet::reference

#endif  // FDNET_REFERENCE_FORWARD_HPP
