#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gresnet {

// Raised for activations whose slope envelope is unbounded (hardshrink is
// discontinuous, rrelu is stochastic). They cannot appear in a block.
class InfiniteConstantsError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class UnknownActivationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class ActivationKind {
  elu,
  hardsigmoid,
  hardtanh,
  hardswish,
  leaky_relu,
  logsigmoid,
  prelu,
  relu,
  relu6,
  selu,
  celu,
  gelu,
  sigmoid,
  silu,
  softplus,
  mish,
  softshrink,
  softsign,
  tanh,
  tanhshrink,
  threshold,
};

using ActivationParams = std::map<std::string, double>;

// Slope envelope of an element-wise activation: every difference quotient
// (s(v) - s(v')) / (v - v') lies in [m, L]. S = L + m and P = L * m are the
// combinations that appear in the quadratic constraint.
struct SlopeConstants {
  double L = 0.0;
  double m = 0.0;
  double S = 0.0;
  double P = 0.0;
};

struct ActivationSpec {
  std::string name;
  ActivationKind kind = ActivationKind::relu;
  ActivationParams params;  // fully populated with defaults
  double L = 0.0;
  double m = 0.0;
  double S = 0.0;
  double P = 0.0;

  SlopeConstants constants() const { return {L, m, S, P}; }
  friend bool operator==(const ActivationSpec& a, const ActivationSpec& b) {
    return a.name == b.name && a.params == b.params;
  }
};

// Builds a spec; missing params take the PyTorch defaults. Throws
// UnknownActivationError / InfiniteConstantsError / std::invalid_argument.
ActivationSpec make_activation(std::string_view name, const ActivationParams& params = {});

SlopeConstants activation_constants(std::string_view name, const ActivationParams& params = {});

double activation_eval(const ActivationSpec& spec, double x);

// Analytic derivative. At kinks the right-continuous branch used by PyTorch
// autograd is returned (relu'(0) = 0).
double activation_derivative(const ActivationSpec& spec, double x);

// Every activation with finite constants, default parameters.
std::vector<ActivationSpec> activation_catalog();

// Names that exist but are rejected for infinite constants.
std::vector<std::string> rejected_activation_names();

// Reference values printed alongside the catalog where the stored constants
// differ from the reference row (documented discrepancy only).
struct CatalogNote {
  std::string name;
  std::string text;
};
std::vector<CatalogNote> catalog_notes();

struct SlopeReport {
  std::size_t pairs = 0;
  std::size_t violations = 0;
  double min_quotient = 0.0;
  double max_quotient = 0.0;
};

// Samples pairs uniformly from [lo, hi] and checks every difference quotient
// against [m - tol, L + tol].
SlopeReport verify_slope_restriction(const ActivationSpec& spec, std::size_t sample_count,
                                     double lo, double hi, std::uint64_t seed,
                                     double tol = 1e-6);

struct NumericConstants {
  double L_hat = 0.0;
  double m_hat = 0.0;
};

// Extremes of central-difference slopes on the grid lo, lo + step, ..., hi.
NumericConstants numeric_constants(const ActivationSpec& spec, double lo, double hi,
                                   double step);

}  // namespace gresnet
