#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "gresnet/matrix.hpp"
#include "gresnet/param.hpp"

namespace gresnet {

// A stack of residual blocks sharing the state dimension. Each block carries
// its own Lipschitz bound; their product is the certified bound of the stack.
struct Model {
  std::vector<RawBlock> blocks;
  double lipschitz_total = 1.0;

  std::size_t state_dim() const;
  std::size_t parameter_count() const;
  void validate() const;

  friend bool operator==(const Model&, const Model&) = default;
};

// Uniform geometric split of the total bound over K blocks.
double block_lipschitz(double lipschitz_total, std::size_t blocks);

Model make_model(const BlockShape& shape, std::size_t block_count, double lipschitz_total,
                 const std::vector<ActivationSpec>& activations, std::uint64_t seed);

struct MaterializedModel {
  std::vector<MaterializedBlock> blocks;
  double lipschitz_total = 1.0;

  std::size_t state_dim() const { return blocks.empty() ? 0 : blocks.front().shape.state_dim; }
};

MaterializedModel materialize(const Model& model, const MaterializeConfig& config = {});

// Pre-activations z_l = C_l w_{l-1} + b_l and outputs w_l = s_l(z_l) of one block.
struct LayerTrace {
  Vector pre;
  Vector post;
};

Vector block_forward(const MaterializedBlock& block, std::span<const double> x,
                     std::vector<LayerTrace>* trace = nullptr);
Vector model_forward(const MaterializedModel& model, std::span<const double> x);

struct PairSampler {
  double lo = -10.0;
  double hi = 10.0;
  std::size_t pairs = 10000;
  std::uint64_t seed = 42;
  // The first min(d_x, pairs) pairs differ along a single coordinate.
  bool axis_aligned = true;
};

// max ||f(x) - f(x')|| / ||x - x'|| over the sampled pairs; pairs closer than
// 1e-12 are skipped. Throws std::invalid_argument when pairs == 0 or lo >= hi.
double empirical_lipschitz(const MaterializedModel& model, const PairSampler& sampler);

// ---------------------------------------------------------------------------
// Persistence

class ModelFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kModelFormatVersion = 1;

std::string model_to_json(const Model& model);
Model model_from_json(std::string_view text);
void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

// Materialized dump: A, B, C_l, Lambda_l, biases as plain numbers. Used by
// the `materialize` command and, read back, to verify hand-edited blocks.
std::string materialized_to_json(const MaterializedModel& model);
MaterializedModel materialized_from_json(std::string_view text);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace gresnet
