#include "gresnet/network.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "gresnet/simd/kernels.hpp"

namespace gresnet {

std::size_t Model::state_dim() const { return blocks.empty() ? 0 : blocks.front().shape.state_dim; }

std::size_t Model::parameter_count() const {
  std::size_t count = 0;
  for (const auto& b : blocks) count += b.parameter_count();
  return count;
}

void Model::validate() const {
  if (blocks.empty()) throw ConstraintError("model: at least one block is required");
  if (!(lipschitz_total > 0.0) || !std::isfinite(lipschitz_total)) {
    throw ConstraintError("model: total Lipschitz bound must be positive and finite");
  }
  double product = 1.0;
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    blocks[k].validate();
    if (blocks[k].shape.state_dim != state_dim()) {
      throw ConstraintError("model: block " + std::to_string(k) + " has a different state dimension");
    }
    product *= blocks[k].lipschitz;
  }
  if (std::fabs(product - lipschitz_total) > 1e-12 * lipschitz_total) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "model: product of block bounds " << product << " differs from lipschitz_total "
        << lipschitz_total;
    throw ConstraintError(msg.str());
  }
}

double block_lipschitz(double lipschitz_total, std::size_t blocks) {
  if (blocks == 0) throw std::invalid_argument("block_lipschitz: block count must be positive");
  if (!(lipschitz_total > 0.0) || !std::isfinite(lipschitz_total)) {
    throw std::invalid_argument("block_lipschitz: total bound must be positive and finite");
  }
  if (blocks == 1) return lipschitz_total;
  return std::pow(lipschitz_total, 1.0 / static_cast<double>(blocks));
}

Model make_model(const BlockShape& shape, std::size_t block_count, double lipschitz_total,
                 const std::vector<ActivationSpec>& activations, std::uint64_t seed) {
  Model model;
  model.lipschitz_total = lipschitz_total;
  const double per_block = block_lipschitz(lipschitz_total, block_count);
  for (std::size_t k = 0; k < block_count; ++k) {
    model.blocks.push_back(init_raw(shape, per_block, activations, seed + k));
  }
  model.validate();
  return model;
}

MaterializedModel materialize(const Model& model, const MaterializeConfig& config) {
  model.validate();
  MaterializedModel out;
  out.lipschitz_total = model.lipschitz_total;
  out.blocks.reserve(model.blocks.size());
  for (const auto& raw : model.blocks) out.blocks.push_back(backward_pass(raw, config));
  return out;
}

Vector block_forward(const MaterializedBlock& block, std::span<const double> x,
                     std::vector<LayerTrace>* trace) {
  const std::size_t dx = block.shape.state_dim;
  if (x.size() != dx) {
    throw std::invalid_argument("block_forward: input has " + std::to_string(x.size()) +
                                " entries, expected " + std::to_string(dx));
  }
  const auto& k = simd::active();
  if (trace) trace->assign(block.shape.depth(), {});

  Vector w(x.begin(), x.end());
  for (std::size_t l = 0; l < block.shape.depth(); ++l) {
    const Matrix& c = block.weights[l];
    Vector z(c.rows());
    const double* bias = block.biases.empty() ? nullptr : block.biases[l].data();
    k.gemv(c.flat().data(), c.rows(), c.cols(), w.data(), bias, z.data());
    Vector next(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) next[i] = activation_eval(block.activations[l], z[i]);
    if (trace) {
      (*trace)[l].pre = std::move(z);
      (*trace)[l].post = next;
    }
    w = std::move(next);
  }

  Vector out(dx);
  for (std::size_t i = 0; i < dx; ++i) out[i] = block.a[i] * x[i] + block.b[i] * w[i];
  return out;
}

Vector model_forward(const MaterializedModel& model, std::span<const double> x) {
  Vector state(x.begin(), x.end());
  for (const auto& block : model.blocks) state = block_forward(block, state);
  return state;
}

double empirical_lipschitz(const MaterializedModel& model, const PairSampler& sampler) {
  if (sampler.pairs == 0) throw std::invalid_argument("empirical_lipschitz: at least one pair is required");
  if (!(sampler.lo < sampler.hi)) throw std::invalid_argument("empirical_lipschitz: empty sampling domain");
  const std::size_t dx = model.state_dim();
  if (dx == 0) throw std::invalid_argument("empirical_lipschitz: model has no blocks");

  std::mt19937_64 rng(sampler.seed);
  std::uniform_real_distribution<double> uniform(sampler.lo, sampler.hi);
  Vector x(dx), y(dx);
  double best = 0.0;
  for (std::size_t p = 0; p < sampler.pairs; ++p) {
    for (double& v : x) v = uniform(rng);
    if (sampler.axis_aligned && p < dx) {
      y = x;
      y[p] = uniform(rng);
    } else {
      for (double& v : y) v = uniform(rng);
    }
    double in = 0.0;
    for (std::size_t i = 0; i < dx; ++i) in += (x[i] - y[i]) * (x[i] - y[i]);
    in = std::sqrt(in);
    if (in < 1e-12) continue;
    const Vector fx = model_forward(model, x);
    const Vector fy = model_forward(model, y);
    double out = 0.0;
    for (std::size_t i = 0; i < dx; ++i) out += (fx[i] - fy[i]) * (fx[i] - fy[i]);
    best = std::max(best, std::sqrt(out) / in);
  }
  return best;
}

}  // namespace gresnet
