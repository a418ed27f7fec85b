#include "random_blocks.hpp"

#include <cmath>
#include <random>

namespace gresnet::testing {

BlockConfig random_block_config(std::uint64_t seed) {
  std::mt19937_64 rng(seed * 7919 + 17);
  auto pick = [&rng](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };
  const auto catalog = activation_catalog();
  std::vector<ActivationSpec> first_ok;
  for (const auto& a : catalog) {
    if (a.P <= 0.0 && a.S != 0.0) first_ok.push_back(a);
  }

  BlockConfig cfg;
  const double bounds[] = {0.5, 1.0, 2.0};
  cfg.lipschitz = bounds[seed % 3];
  const std::size_t depth = pick(1, 4);
  cfg.shape.state_dim = pick(1, 8);
  for (std::size_t l = 0; l + 1 < depth; ++l) cfg.shape.dims.push_back(pick(1, 16));
  cfg.shape.dims.push_back(cfg.shape.state_dim);

  cfg.activations.push_back(first_ok[seed % first_ok.size()]);
  for (std::size_t l = 1; l < depth; ++l) {
    cfg.activations.push_back(catalog[(seed * 5 + l * 3) % catalog.size()]);
  }
  return cfg;
}

RawBlock random_raw_block(std::uint64_t seed) {
  const BlockConfig cfg = random_block_config(seed);
  RawBlock raw = init_raw(cfg.shape, cfg.lipschitz, cfg.activations, seed);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  const double scale = std::pow(10.0, std::uniform_real_distribution<double>(-1.0, 1.0)(rng));
  for (auto& w : raw.weights_raw) {
    for (double& v : w.flat()) v *= scale;
  }
  for (double& v : raw.a_raw) v *= scale;
  for (double& v : raw.b_raw) v *= scale;
  return raw;
}

}  // namespace gresnet::testing
