#include "gresnet/param.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace gresnet {

std::size_t BlockShape::lmi_size() const {
  std::size_t total = state_dim;
  for (std::size_t d : dims) total += d;
  return total;
}

void BlockShape::validate() const {
  if (state_dim == 0) throw ConstraintError("block shape: state dimension must be positive");
  if (dims.empty()) throw ConstraintError("block shape: at least one inner layer is required");
  for (std::size_t d : dims) {
    if (d == 0) throw ConstraintError("block shape: layer widths must be positive");
  }
  if (dims.back() != state_dim) {
    std::ostringstream msg;
    msg << "block shape: last layer width " << dims.back() << " must equal the state dimension "
        << state_dim << " (B is diagonal)";
    throw ConstraintError(msg.str());
  }
}

void RawBlock::validate() const {
  shape.validate();
  const std::size_t n = shape.depth();
  if (!(lipschitz > 0.0) || !std::isfinite(lipschitz)) {
    throw ConstraintError("raw block: Lipschitz bound must be positive and finite");
  }
  if (activations.size() != n) throw ConstraintError("raw block: one activation per layer required");
  const ActivationSpec& first = activations.front();
  if (first.P > 0.0) {
    std::ostringstream msg;
    msg << "raw block: first-layer activation '" << first.name << "' has P = L*m = " << first.P
        << " > 0; the first layer requires L*m <= 0";
    throw ConstraintError(msg.str());
  }
  if (first.S == 0.0) {
    throw ConstraintError("raw block: first-layer activation '" + first.name +
                          "' has S = L + m = 0, which forces C_1 = 0");
  }
  if (weights_raw.size() != n || biases.size() != n) {
    throw ConstraintError("raw block: one weight matrix and bias vector per layer required");
  }
  auto all_finite = [](std::span<const double> v) {
    for (double x : v) {
      if (!std::isfinite(x)) return false;
    }
    return true;
  };
  for (std::size_t l = 0; l < n; ++l) {
    const Matrix& w = weights_raw[l];
    if (w.rows() != shape.output_dim(l) || w.cols() != shape.input_dim(l)) {
      std::ostringstream msg;
      msg << "raw block: layer " << l + 1 << " weights are " << w.rows() << "x" << w.cols()
          << ", expected " << shape.output_dim(l) << "x" << shape.input_dim(l);
      throw ConstraintError(msg.str());
    }
    if (biases[l].size() != shape.output_dim(l)) {
      throw ConstraintError("raw block: bias " + std::to_string(l + 1) + " has the wrong length");
    }
    if (!all_finite(w.flat()) || !all_finite(biases[l])) {
      throw ConstraintError("raw block: non-finite raw parameter");
    }
  }
  if (a_raw.size() != shape.state_dim || b_raw.size() != shape.state_dim) {
    throw ConstraintError("raw block: a_raw and b_raw must have the state dimension");
  }
  if (!all_finite(a_raw) || !all_finite(b_raw)) throw ConstraintError("raw block: non-finite raw parameter");
}

std::size_t RawBlock::parameter_count() const {
  std::size_t count = a_raw.size() + b_raw.size();
  for (const auto& w : weights_raw) count += w.size();
  for (const auto& b : biases) count += b.size();
  return count;
}

template <class Real>
BasicMaterializedBlock<Real> backward_pass(const BlockShape& shape, double lipschitz,
                                           std::span<const ActivationSpec> activations,
                                           std::span<const BasicMatrix<Real>> weights_raw,
                                           std::span<const Real> a_raw,
                                           std::span<const Real> b_raw,
                                           const MaterializeConfig& config) {
  shape.validate();
  const std::size_t n = shape.depth();
  if (activations.size() != n || weights_raw.size() != n) {
    throw ConstraintError("backward_pass: one activation and weight matrix per layer required");
  }
  if (a_raw.size() != shape.state_dim || b_raw.size() != shape.state_dim) {
    throw ConstraintError("backward_pass: a_raw/b_raw must have the state dimension");
  }

  BasicMaterializedBlock<Real> out;
  out.shape = shape;
  out.lipschitz = lipschitz;
  out.activations.assign(activations.begin(), activations.end());
  out.weights.resize(n);
  out.lambdas.resize(n);

  for (std::size_t l = n; l-- > 1;) {
    out.weights[l] = materialize_C_inner(weights_raw[l], activations[l].S, config.margin,
                                         config.zero_s_cap);
  }
  out.a = materialize_A<Real>(a_raw, lipschitz, config.a_fraction);
  out.b = materialize_B<Real>(b_raw, out.a, lipschitz, config.margin);

  const ActivationSpec& first = activations[0];
  if (n == 1) {
    out.lambdas[0] = compute_lambda_single<Real>(out.a, out.b, config.lambda_floor, config.lambda_slack);
  } else {
    out.lambdas[n - 1] = compute_lambda_last<Real>(out.a, out.b, activations[n - 1].S,
                                                   out.weights[n - 1], config.lambda_floor,
                                                   config.lambda_slack);
    for (std::size_t l = n - 1; l-- > 0;) {
      const ActivationSpec& next = activations[l + 1];
      GVector<Real> g = compute_G<Real>(out.lambdas[l + 1], out.weights[l + 1], next.S, next.P);
      out.negative_g_entries += g.negative_entries;
      if (l == 0) {
        out.lambdas[0] = compute_lambda_first<Real>(g.values, config.lambda_floor, config.lambda_slack);
      } else {
        out.lambdas[l] = compute_lambda_mid<Real>(g.values, out.weights[l], activations[l].S,
                                                  config.lambda_floor, config.lambda_slack);
      }
    }
  }
  out.weights[0] = materialize_C1<Real>(weights_raw[0], first.S, first.P, out.lambdas[0], out.a,
                                        out.b, lipschitz, config.margin);
  return out;
}

template BasicMaterializedBlock<double> backward_pass<double>(
    const BlockShape&, double, std::span<const ActivationSpec>, std::span<const Matrix>,
    std::span<const double>, std::span<const double>, const MaterializeConfig&);
template BasicMaterializedBlock<ad::Var> backward_pass<ad::Var>(
    const BlockShape&, double, std::span<const ActivationSpec>,
    std::span<const BasicMatrix<ad::Var>>, std::span<const ad::Var>, std::span<const ad::Var>,
    const MaterializeConfig&);

MaterializedBlock backward_pass(const RawBlock& raw, const MaterializeConfig& config) {
  raw.validate();
  MaterializedBlock out = backward_pass<double>(raw.shape, raw.lipschitz, raw.activations,
                                                raw.weights_raw, raw.a_raw, raw.b_raw, config);
  out.biases = raw.biases;
  return out;
}

RawBlock init_raw(const BlockShape& shape, double lipschitz,
                  std::vector<ActivationSpec> activations, std::uint64_t seed) {
  RawBlock raw;
  raw.shape = shape;
  raw.lipschitz = lipschitz;
  raw.activations = std::move(activations);

  shape.validate();
  std::mt19937_64 rng(seed);
  auto uniform = [&rng](double bound) {
    return std::uniform_real_distribution<double>(-bound, bound)(rng);
  };
  for (std::size_t l = 0; l < shape.depth(); ++l) {
    const std::size_t fan_in = shape.input_dim(l);
    const double w_bound = std::sqrt(3.0 / static_cast<double>(fan_in));
    const double b_bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Matrix w(shape.output_dim(l), fan_in);
    for (double& v : w.flat()) v = uniform(w_bound);
    Vector bias(shape.output_dim(l));
    for (double& v : bias) v = uniform(b_bound);
    raw.weights_raw.push_back(std::move(w));
    raw.biases.push_back(std::move(bias));
  }
  raw.a_raw.resize(shape.state_dim);
  raw.b_raw.resize(shape.state_dim);
  for (double& v : raw.a_raw) v = uniform(1.0);
  for (double& v : raw.b_raw) v = uniform(1.0);
  raw.validate();
  return raw;
}

}  // namespace gresnet
