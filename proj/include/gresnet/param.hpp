#pragma once

// Closed-form constraint engine for one residual block
//
//   x+ = A x + B w_n,   w_l = s_l(C_l w_{l-1} + b_l),   w_0 = x,
//
// with A, B diagonal. Unconstrained raw parameters are mapped to (A, B, C_l,
// Lambda_l) such that every Gershgorin disc of the block LMI lies in the
// closed left half-plane, which certifies ||x+ - x'+|| <= Lip ||x - x'||.
//
// Layers are 0-based in code: weights[0] is the first layer (d_1 x d_x) and
// weights[n-1] the last (d_x x d_{n-1}).
//
// Everything is templated on the scalar so the same code runs on double and
// on ad::Var when gradients through the materialization are needed.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gresnet/activations.hpp"
#include "gresnet/ad.hpp"
#include "gresnet/matrix.hpp"

namespace gresnet {

// A raw block or a requested materialization violates a structural rule
// (shape, activation placement).
class ConstraintError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct BlockShape {
  std::size_t state_dim = 0;       // d_x
  std::vector<std::size_t> dims;   // d_1 .. d_n; d_n must equal d_x

  std::size_t depth() const noexcept { return dims.size(); }
  std::size_t input_dim(std::size_t layer) const { return layer == 0 ? state_dim : dims[layer - 1]; }
  std::size_t output_dim(std::size_t layer) const { return dims[layer]; }
  // d_x + d_1 + ... + d_n
  std::size_t lmi_size() const;
  void validate() const;

  friend bool operator==(const BlockShape&, const BlockShape&) = default;
};

struct MaterializeConfig {
  double margin = 1e-6;        // multiplicative shrink on open-interval budgets
  double a_fraction = 1e-3;    // |a_i| kept in [f Lip, (1 - f) Lip]
  double lambda_floor = 1e-8;
  double zero_s_cap = 1e4;     // element cap for inner layers with S = 0
  // Relative lift of every lambda bound. At the bound the row's disc touches
  // zero exactly, and rounding at large lambda would leave it a few ulps positive.
  double lambda_slack = 1e-6;
};

struct RawBlock {
  BlockShape shape;
  double lipschitz = 1.0;
  std::vector<ActivationSpec> activations;
  std::vector<Matrix> weights_raw;
  Vector a_raw;
  Vector b_raw;
  std::vector<Vector> biases;

  // Throws ConstraintError on any shape or activation-placement problem.
  void validate() const;
  std::size_t parameter_count() const;

  friend bool operator==(const RawBlock&, const RawBlock&) = default;
};

template <class Real>
struct BasicMaterializedBlock {
  BlockShape shape;
  double lipschitz = 1.0;
  std::vector<ActivationSpec> activations;
  std::vector<Real> a;
  std::vector<Real> b;
  std::vector<BasicMatrix<Real>> weights;
  std::vector<std::vector<Real>> lambdas;
  std::vector<Vector> biases;
  // Entries of any G numerator that were negative before the clamp at zero.
  std::size_t negative_g_entries = 0;
};

using MaterializedBlock = BasicMaterializedBlock<double>;

template <class Real>
struct GVector {
  std::vector<Real> values;
  std::size_t negative_entries = 0;
};

// ---------------------------------------------------------------------------
// Elementary maps

template <class Real>
Real row_abs_sum(std::span<const Real> row) {
  using std::abs;
  Real acc = 0.0;
  for (const Real& v : row) acc = acc + abs(v);
  return acc;
}

// x_ij = budget / cols * tanh(raw_ij) / weights_j, so sum_j weights_j |x_ij| < budget.
template <class Real>
BasicMatrix<Real> weighted_norm_rows(const BasicMatrix<Real>& raw, double budget,
                                     std::span<const double> weights) {
  using std::tanh;
  if (!(budget > 0.0) || !std::isfinite(budget)) {
    throw std::invalid_argument("weighted_norm_rows: budget must be positive and finite");
  }
  if (weights.size() != raw.cols()) {
    throw std::invalid_argument("weighted_norm_rows: one weight per column required");
  }
  for (double w : weights) {
    if (!(w > 0.0)) throw std::invalid_argument("weighted_norm_rows: weights must be positive");
  }
  BasicMatrix<Real> out(raw.rows(), raw.cols());
  if (raw.cols() == 0) return out;
  const double share = budget / static_cast<double>(raw.cols());
  for (std::size_t r = 0; r < raw.rows(); ++r) {
    for (std::size_t c = 0; c < raw.cols(); ++c) {
      out(r, c) = tanh(raw(r, c)) * (share / weights[c]);
    }
  }
  return out;
}

template <class Real>
BasicMatrix<Real> weighted_norm_rows(const BasicMatrix<Real>& raw, double budget) {
  const std::vector<double> ones(raw.cols(), 1.0);
  return weighted_norm_rows(raw, budget, std::span<const double>(ones));
}

// a_i = sign(t) Lip clamp(|t|, f, 1 - f), t = tanh(a_raw_i), sign(0) = +1.
template <class Real>
std::vector<Real> materialize_A(std::span<const Real> a_raw, double lipschitz,
                                double fraction) {
  using std::abs;
  using std::tanh;
  if (!(lipschitz > 0.0)) throw std::invalid_argument("materialize_A: Lipschitz bound must be positive");
  if (!(fraction > 0.0 && fraction < 0.5)) {
    throw std::invalid_argument("materialize_A: clamp fraction must lie in (0, 0.5)");
  }
  std::vector<Real> a;
  a.reserve(a_raw.size());
  for (const Real& r : a_raw) {
    const Real t = tanh(r);
    const double sign = value_of(t) >= 0.0 ? 1.0 : -1.0;
    const Real mag = std::max(std::min(abs(t), Real(1.0 - fraction)), Real(fraction));
    a.push_back(mag * (sign * lipschitz));
  }
  return a;
}

// b_i = tanh(b_raw_i) (1 - margin) (Lip^2 - a_i^2) / |a_i|
template <class Real>
std::vector<Real> materialize_B(std::span<const Real> b_raw, std::span<const Real> a,
                                double lipschitz, double margin) {
  using std::abs;
  using std::tanh;
  if (b_raw.size() != a.size()) throw std::invalid_argument("materialize_B: size mismatch");
  std::vector<Real> b;
  b.reserve(b_raw.size());
  const double l2 = lipschitz * lipschitz;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (value_of(a[i]) == 0.0) throw std::invalid_argument("materialize_B: a_i must be nonzero");
    const Real bound = (Real(l2) - a[i] * a[i]) / abs(a[i]) * (1.0 - margin);
    b.push_back(tanh(b_raw[i]) * bound);
  }
  return b;
}

// Layers 2..n: rows held strictly inside the l1 ball of radius 2 / |S|.
template <class Real>
BasicMatrix<Real> materialize_C_inner(const BasicMatrix<Real>& raw, double s, double margin,
                                      double zero_s_cap) {
  using std::tanh;
  if (s == 0.0) {
    BasicMatrix<Real> out(raw.rows(), raw.cols());
    for (std::size_t k = 0; k < raw.size(); ++k) out.flat()[k] = tanh(raw.flat()[k]) * zero_s_cap;
    return out;
  }
  return weighted_norm_rows(raw, (1.0 - margin) * 2.0 / std::fabs(s));
}

// Last layer (n >= 2): lambda_i = max(floor, (b_i^2 + |a_i||b_i|) / (2 - |S| ||C_i||_1)).
// Every lambda rule multiplies its bound by (1 + slack) before the floor.
template <class Real>
std::vector<Real> compute_lambda_last(std::span<const Real> a, std::span<const Real> b, double s,
                                      const BasicMatrix<Real>& c_last, double lambda_floor,
                                      double slack = 0.0) {
  using std::abs;
  if (c_last.rows() != a.size() || b.size() != a.size()) {
    throw std::invalid_argument("compute_lambda_last: dimension mismatch");
  }
  std::vector<Real> lambda;
  lambda.reserve(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Real numer = b[i] * b[i] + abs(a[i]) * abs(b[i]);
    const Real denom = Real(2.0) - row_abs_sum(c_last.row(i)) * std::fabs(s);
    if (!(value_of(denom) > 0.0)) {
      throw std::logic_error("compute_lambda_last: row norm reached 2/|S|");
    }
    lambda.push_back(std::max(numer / denom * (1.0 + slack), Real(lambda_floor)));
  }
  return lambda;
}

// Single inner layer: the first and last layer coincide. With |S| ||C_i||_1 <= 1
// the true denominator is >= 1, so the numerator alone is a valid bound.
template <class Real>
std::vector<Real> compute_lambda_single(std::span<const Real> a, std::span<const Real> b,
                                        double lambda_floor, double slack = 0.0) {
  using std::abs;
  std::vector<Real> lambda;
  lambda.reserve(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Real numer = b[i] * b[i] + abs(a[i]) * abs(b[i]);
    lambda.push_back(std::max(numer * (1.0 + slack), Real(lambda_floor)));
  }
  return lambda;
}

// Numerator of the lambda bound for the layer feeding `c_next`:
//   G_i = sum_j lambda_j (|S| |c_ji| - 2 P c_ji^2) + 2 |P| sum_{z != i} |Q_iz|,
//   Q = C^T diag(lambda) C.
// Entries are clamped at zero; the count of negative entries is reported.
template <class Real>
GVector<Real> compute_G(std::span<const Real> lambda_next, const BasicMatrix<Real>& c_next,
                        double s_next, double p_next) {
  using std::abs;
  if (lambda_next.size() != c_next.rows()) {
    throw std::invalid_argument("compute_G: lambda/C dimension mismatch");
  }
  const std::size_t rows = c_next.rows();
  const std::size_t width = c_next.cols();
  const double abs_s = std::fabs(s_next);
  std::vector<Real> g(width, Real(0.0));

  BasicMatrix<Real> weighted(rows, width);  // lambda_j c_ji
  for (std::size_t j = 0; j < rows; ++j) {
    for (std::size_t i = 0; i < width; ++i) {
      const Real& c = c_next(j, i);
      weighted(j, i) = lambda_next[j] * c;
      g[i] = g[i] + lambda_next[j] * (abs(c) * abs_s - c * c * (2.0 * p_next));
    }
  }
  if (p_next != 0.0) {
    const double two_abs_p = 2.0 * std::fabs(p_next);
    for (std::size_t i = 0; i < width; ++i) {
      for (std::size_t z = i + 1; z < width; ++z) {
        Real q = 0.0;
        for (std::size_t j = 0; j < rows; ++j) q = q + weighted(j, i) * c_next(j, z);
        const Real term = abs(q) * two_abs_p;
        g[i] = g[i] + term;
        g[z] = g[z] + term;
      }
    }
  }

  GVector<Real> out;
  out.values.reserve(width);
  for (const Real& v : g) {
    if (value_of(v) < 0.0) ++out.negative_entries;
    out.values.push_back(std::max(v, Real(0.0)));
  }
  return out;
}

// Middle layers: lambda_i = max(floor, G_i / (2 - |S| ||C_i||_1)).
template <class Real>
std::vector<Real> compute_lambda_mid(std::span<const Real> g, const BasicMatrix<Real>& c_layer,
                                     double s, double lambda_floor, double slack = 0.0) {
  if (g.size() != c_layer.rows()) throw std::invalid_argument("compute_lambda_mid: dimension mismatch");
  std::vector<Real> lambda;
  lambda.reserve(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Real denom = Real(2.0) - row_abs_sum(c_layer.row(i)) * std::fabs(s);
    if (!(value_of(denom) > 0.0)) {
      throw std::logic_error("compute_lambda_mid: row norm reached 2/|S|");
    }
    lambda.push_back(std::max(g[i] / denom * (1.0 + slack), Real(lambda_floor)));
  }
  return lambda;
}

// First layer: the extra row constraint |S_1| ||C_1,i||_1 <= 1 keeps the
// denominator >= 1, so lambda_1 = G_2 satisfies the bound for any admissible C_1.
template <class Real>
std::vector<Real> compute_lambda_first(std::span<const Real> g2, double lambda_floor,
                                       double slack = 0.0) {
  std::vector<Real> lambda;
  lambda.reserve(g2.size());
  for (const Real& g : g2) lambda.push_back(std::max(g * (1.0 + slack), Real(lambda_floor)));
  return lambda;
}

// c_ji = u_ji tanh(raw_ji) with
//   u_ji = min((1 - margin) / (|S_1| d_x),
//              (Lip^2 - a_i^2 - |a_i||b_i|) |S_1| / (d_1 lambda_j (S_1^2 + 4 |P_1|))).
// Row j uses lambda_1,j; column i uses a_i, b_i.
template <class Real>
BasicMatrix<Real> materialize_C1(const BasicMatrix<Real>& raw, double s1, double p1,
                                 std::span<const Real> lambda1, std::span<const Real> a,
                                 std::span<const Real> b, double lipschitz, double margin) {
  using std::abs;
  using std::tanh;
  if (s1 == 0.0) throw ConstraintError("materialize_C1: first-layer S = L + m must be nonzero");
  if (p1 > 0.0) throw ConstraintError("materialize_C1: first-layer P = L * m must be <= 0");
  const std::size_t d1 = raw.rows();
  const std::size_t dx = raw.cols();
  if (lambda1.size() != d1 || a.size() != dx || b.size() != dx) {
    throw std::invalid_argument("materialize_C1: dimension mismatch");
  }
  const double abs_s = std::fabs(s1);
  const double row_share = (1.0 - margin) / (abs_s * static_cast<double>(dx));
  const double factor = abs_s / (static_cast<double>(d1) * (s1 * s1 + 4.0 * std::fabs(p1)));
  const double l2 = lipschitz * lipschitz;

  std::vector<Real> budget;
  budget.reserve(dx);
  for (std::size_t i = 0; i < dx; ++i) {
    budget.push_back(std::max(Real(l2) - a[i] * a[i] - abs(a[i]) * abs(b[i]), Real(0.0)));
  }
  BasicMatrix<Real> out(d1, dx);
  for (std::size_t j = 0; j < d1; ++j) {
    for (std::size_t i = 0; i < dx; ++i) {
      const Real elem = budget[i] * factor / lambda1[j];
      const Real bound = std::min(elem, Real(row_share));
      out(j, i) = bound * tanh(raw(j, i));
    }
  }
  return out;
}

// The full constraint sweep, last layer first:
//   C_n .. C_2, then A, B, Lambda_n, Lambda_{n-1} .. Lambda_2, Lambda_1 = G_2, C_1.
template <class Real>
BasicMaterializedBlock<Real> backward_pass(const BlockShape& shape, double lipschitz,
                                           std::span<const ActivationSpec> activations,
                                           std::span<const BasicMatrix<Real>> weights_raw,
                                           std::span<const Real> a_raw,
                                           std::span<const Real> b_raw,
                                           const MaterializeConfig& config);

MaterializedBlock backward_pass(const RawBlock& raw, const MaterializeConfig& config = {});

extern template BasicMaterializedBlock<double> backward_pass<double>(
    const BlockShape&, double, std::span<const ActivationSpec>, std::span<const Matrix>,
    std::span<const double>, std::span<const double>, const MaterializeConfig&);
extern template BasicMaterializedBlock<ad::Var> backward_pass<ad::Var>(
    const BlockShape&, double, std::span<const ActivationSpec>,
    std::span<const BasicMatrix<ad::Var>>, std::span<const ad::Var>, std::span<const ad::Var>,
    const MaterializeConfig&);

// Kaiming-uniform initialization with gain 1: weights in +-sqrt(3 / fan_in),
// biases in +-1/sqrt(fan_in), a_raw and b_raw in (-1, 1). Deterministic in seed.
RawBlock init_raw(const BlockShape& shape, double lipschitz,
                  std::vector<ActivationSpec> activations, std::uint64_t seed);

}  // namespace gresnet
