#pragma once

#include <cstdint>
#include <vector>

#include "gresnet/activations.hpp"
#include "gresnet/param.hpp"

namespace gresnet::testing {

struct BlockConfig {
  BlockShape shape;
  double lipschitz = 1.0;
  std::vector<ActivationSpec> activations;
};

// Depth 1..4, widths <= 16, Lipschitz in {0.5, 1, 2}. Activations cycle
// through the whole catalog; the first layer only gets P <= 0, S != 0.
BlockConfig random_block_config(std::uint64_t seed);

// init_raw on the config, with every raw parameter multiplied by a random
// scale in [0.1, 10] so saturated and clamped regimes are exercised.
RawBlock random_raw_block(std::uint64_t seed);

}  // namespace gresnet::testing
