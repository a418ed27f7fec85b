#include "gresnet/activations.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

namespace gresnet {
namespace {

constexpr double kSeluAlpha = 1.6732632423543772848170429916717;
constexpr double kSeluScale = 1.0507009873554804934193349852946;

// Slope extremes of the exact (erf) GELU, attained at x = -sqrt(2) and
// x = sqrt(2): (1 + erf(1)) / 2 + 1 / (e sqrt(pi)) and erfc(1) / 2 - 1 / (e sqrt(pi)).
double gelu_max_slope() {
  return 0.5 * (1.0 + std::erf(1.0)) + 1.0 / (std::numbers::e * std::sqrt(std::numbers::pi));
}
double gelu_min_slope() {
  return 0.5 * std::erfc(1.0) - 1.0 / (std::numbers::e * std::sqrt(std::numbers::pi));
}

struct KindInfo {
  std::string_view name;
  ActivationKind kind;
  ActivationParams defaults;
};

const std::vector<KindInfo>& kinds() {
  static const std::vector<KindInfo> table{
      {"elu", ActivationKind::elu, {{"alpha", 1.0}}},
      {"hardsigmoid", ActivationKind::hardsigmoid, {}},
      {"hardtanh", ActivationKind::hardtanh, {{"min_val", -1.0}, {"max_val", 1.0}}},
      {"hardswish", ActivationKind::hardswish, {}},
      {"leaky_relu", ActivationKind::leaky_relu, {{"negative_slope", 0.01}}},
      {"logsigmoid", ActivationKind::logsigmoid, {}},
      {"prelu", ActivationKind::prelu, {{"weight", 0.25}}},
      {"relu", ActivationKind::relu, {}},
      {"relu6", ActivationKind::relu6, {}},
      {"selu", ActivationKind::selu, {}},
      {"celu", ActivationKind::celu, {{"alpha", 1.0}}},
      {"gelu", ActivationKind::gelu, {}},
      {"sigmoid", ActivationKind::sigmoid, {}},
      {"silu", ActivationKind::silu, {}},
      {"softplus", ActivationKind::softplus, {{"beta", 1.0}, {"threshold", 20.0}}},
      {"mish", ActivationKind::mish, {}},
      {"softshrink", ActivationKind::softshrink, {{"lambd", 0.5}}},
      {"softsign", ActivationKind::softsign, {}},
      {"tanh", ActivationKind::tanh, {}},
      {"tanhshrink", ActivationKind::tanhshrink, {}},
      {"threshold", ActivationKind::threshold, {{"threshold", 0.0}, {"value", 0.0}}},
  };
  return table;
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::fabs(x))); }

SlopeConstants slope_envelope(ActivationKind kind, const ActivationParams& p) {
  switch (kind) {
    case ActivationKind::elu:
      return {std::max(1.0, p.at("alpha")), 0.0};
    case ActivationKind::hardsigmoid:
      return {1.0 / 6.0, 0.0};
    case ActivationKind::hardswish:
      return {1.5, -0.5};
    case ActivationKind::leaky_relu: {
      const double a = p.at("negative_slope");
      return {std::max(1.0, a), std::min(1.0, a)};
    }
    case ActivationKind::prelu: {
      const double a = p.at("weight");
      return {std::max(1.0, a), std::min(1.0, a)};
    }
    case ActivationKind::selu:
      return {kSeluAlpha * kSeluScale, 0.0};
    case ActivationKind::gelu:
      return {gelu_max_slope(), gelu_min_slope()};
    case ActivationKind::silu:
      return {1.099839320, -0.09983932013};
    case ActivationKind::mish:
      return {1.199678640, -0.2157287822};
    case ActivationKind::hardtanh:
    case ActivationKind::logsigmoid:
    case ActivationKind::relu:
    case ActivationKind::relu6:
    case ActivationKind::celu:
    case ActivationKind::sigmoid:
    case ActivationKind::softplus:
    case ActivationKind::softshrink:
    case ActivationKind::softsign:
    case ActivationKind::tanh:
    case ActivationKind::tanhshrink:
    case ActivationKind::threshold:
      return {1.0, 0.0};
  }
  return {};
}

void check_params(std::string_view name, ActivationKind kind, const ActivationParams& p) {
  auto require = [&](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string(name) + ": " + what);
  };
  for (const auto& [key, value] : p) {
    require(std::isfinite(value), "parameters must be finite");
    (void)key;
  }
  switch (kind) {
    case ActivationKind::elu:
      require(p.at("alpha") >= 0.0, "alpha must be non-negative");
      break;
    case ActivationKind::celu:
      require(p.at("alpha") > 0.0, "alpha must be positive");
      break;
    case ActivationKind::hardtanh:
      require(p.at("min_val") < p.at("max_val"), "min_val must be below max_val");
      break;
    case ActivationKind::softplus:
      require(p.at("beta") > 0.0, "beta must be positive");
      break;
    case ActivationKind::softshrink:
      require(p.at("lambd") >= 0.0, "lambd must be non-negative");
      break;
    case ActivationKind::threshold:
      // y = x for x > threshold, else value: a jump unless value == threshold.
      if (p.at("value") != p.at("threshold")) {
        throw InfiniteConstantsError(
            "threshold: value != threshold makes the activation discontinuous "
            "(infinite slope constants)");
      }
      break;
    default:
      break;
  }
}

}  // namespace

ActivationSpec make_activation(std::string_view name, const ActivationParams& params) {
  if (name == "hardshrink") {
    throw InfiniteConstantsError(
        "hardshrink has infinite slope constants (discontinuous) and cannot be used");
  }
  if (name == "rrelu") {
    throw InfiniteConstantsError(
        "rrelu has infinite slope constants (stochastic slope) and cannot be used");
  }
  const auto& table = kinds();
  const auto it = std::find_if(table.begin(), table.end(),
                               [&](const KindInfo& k) { return k.name == name; });
  if (it == table.end()) {
    throw UnknownActivationError("unknown activation '" + std::string(name) + "'");
  }
  ActivationParams full = it->defaults;
  for (const auto& [key, value] : params) {
    if (!full.contains(key)) {
      throw std::invalid_argument(std::string(name) + ": unknown parameter '" + key + "'");
    }
    full[key] = value;
  }
  check_params(name, it->kind, full);

  const SlopeConstants env = slope_envelope(it->kind, full);
  ActivationSpec spec;
  spec.name = std::string(name);
  spec.kind = it->kind;
  spec.params = std::move(full);
  spec.L = env.L;
  spec.m = env.m;
  spec.S = env.L + env.m;
  spec.P = env.L * env.m;
  return spec;
}

SlopeConstants activation_constants(std::string_view name, const ActivationParams& params) {
  return make_activation(name, params).constants();
}

double activation_eval(const ActivationSpec& spec, double x) {
  const auto& p = spec.params;
  switch (spec.kind) {
    case ActivationKind::elu:
      return x > 0.0 ? x : p.at("alpha") * std::expm1(x);
    case ActivationKind::hardsigmoid:
      return std::clamp(x + 3.0, 0.0, 6.0) / 6.0;
    case ActivationKind::hardtanh:
      return std::clamp(x, p.at("min_val"), p.at("max_val"));
    case ActivationKind::hardswish:
      return x * std::clamp(x + 3.0, 0.0, 6.0) / 6.0;
    case ActivationKind::leaky_relu:
      return x > 0.0 ? x : p.at("negative_slope") * x;
    case ActivationKind::logsigmoid:
      return -softplus(-x);
    case ActivationKind::prelu:
      return x > 0.0 ? x : p.at("weight") * x;
    case ActivationKind::relu:
      return x > 0.0 ? x : 0.0;
    case ActivationKind::relu6:
      return std::clamp(x, 0.0, 6.0);
    case ActivationKind::selu:
      return kSeluScale * (x > 0.0 ? x : kSeluAlpha * std::expm1(x));
    case ActivationKind::celu: {
      const double a = p.at("alpha");
      return std::max(0.0, x) + std::min(0.0, a * std::expm1(x / a));
    }
    case ActivationKind::gelu:
      return 0.5 * x * std::erfc(-x / std::numbers::sqrt2);
    case ActivationKind::sigmoid:
      return sigmoid(x);
    case ActivationKind::silu:
      return x * sigmoid(x);
    case ActivationKind::softplus: {
      const double beta = p.at("beta");
      if (beta * x > p.at("threshold")) return x;
      return softplus(beta * x) / beta;
    }
    case ActivationKind::mish:
      return x * std::tanh(softplus(x));
    case ActivationKind::softshrink: {
      const double l = p.at("lambd");
      if (x > l) return x - l;
      if (x < -l) return x + l;
      return 0.0;
    }
    case ActivationKind::softsign:
      return x / (1.0 + std::fabs(x));
    case ActivationKind::tanh:
      return std::tanh(x);
    case ActivationKind::tanhshrink:
      return x - std::tanh(x);
    case ActivationKind::threshold:
      return x > p.at("threshold") ? x : p.at("value");
  }
  return 0.0;
}

double activation_derivative(const ActivationSpec& spec, double x) {
  const auto& p = spec.params;
  switch (spec.kind) {
    case ActivationKind::elu:
      return x > 0.0 ? 1.0 : p.at("alpha") * std::exp(x);
    case ActivationKind::hardsigmoid:
      return (x > -3.0 && x < 3.0) ? 1.0 / 6.0 : 0.0;
    case ActivationKind::hardtanh:
      return (x > p.at("min_val") && x < p.at("max_val")) ? 1.0 : 0.0;
    case ActivationKind::hardswish:
      if (x < -3.0) return 0.0;
      if (x > 3.0) return 1.0;
      return (2.0 * x + 3.0) / 6.0;
    case ActivationKind::leaky_relu:
      return x > 0.0 ? 1.0 : p.at("negative_slope");
    case ActivationKind::logsigmoid:
      return sigmoid(-x);
    case ActivationKind::prelu:
      return x > 0.0 ? 1.0 : p.at("weight");
    case ActivationKind::relu:
      return x > 0.0 ? 1.0 : 0.0;
    case ActivationKind::relu6:
      return (x > 0.0 && x < 6.0) ? 1.0 : 0.0;
    case ActivationKind::selu:
      return x > 0.0 ? kSeluScale : kSeluScale * kSeluAlpha * std::exp(x);
    case ActivationKind::celu:
      return x > 0.0 ? 1.0 : std::exp(x / p.at("alpha"));
    case ActivationKind::gelu: {
      const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
      return 0.5 * std::erfc(-x / std::numbers::sqrt2) + x * pdf;
    }
    case ActivationKind::sigmoid: {
      const double s = sigmoid(x);
      return s * (1.0 - s);
    }
    case ActivationKind::silu: {
      const double s = sigmoid(x);
      return s + x * s * (1.0 - s);
    }
    case ActivationKind::softplus: {
      const double beta = p.at("beta");
      return beta * x > p.at("threshold") ? 1.0 : sigmoid(beta * x);
    }
    case ActivationKind::mish: {
      const double t = std::tanh(softplus(x));
      return t + x * (1.0 - t * t) * sigmoid(x);
    }
    case ActivationKind::softshrink: {
      const double l = p.at("lambd");
      return (x > l || x < -l) ? 1.0 : 0.0;
    }
    case ActivationKind::softsign: {
      const double d = 1.0 + std::fabs(x);
      return 1.0 / (d * d);
    }
    case ActivationKind::tanh: {
      const double t = std::tanh(x);
      return 1.0 - t * t;
    }
    case ActivationKind::tanhshrink: {
      const double t = std::tanh(x);
      return t * t;
    }
    case ActivationKind::threshold:
      return x > p.at("threshold") ? 1.0 : 0.0;
  }
  return 0.0;
}

std::vector<ActivationSpec> activation_catalog() {
  std::vector<ActivationSpec> out;
  for (const auto& k : kinds()) out.push_back(make_activation(k.name));
  return out;
}

std::vector<std::string> rejected_activation_names() { return {"hardshrink", "rrelu"}; }

std::vector<CatalogNote> catalog_notes() {
  return {
      {"mish",
       "reference S = 0.8060623125, P = -0.2204297485 do not equal L + m, L * m of the same "
       "row; S and P here are recomputed from L and m"},
      {"mish",
       "stored L, m are a valid but loose envelope: the sharp slope range of x*tanh(softplus(x)) "
       "is about [-0.1125, 1.0885]"},
      {"sigmoid", "stored L = 1 is a loose envelope; sup of the derivative is 1/4"},
      {"gelu",
       "L = (1 + erf(1))/2 + 1/(e sqrt(pi)) ~ 1.1289041452, m = erfc(1)/2 - 1/(e sqrt(pi)) ~ "
       "-0.1289041452"},
      {"threshold", "defaults threshold = 0, value = 0 (continuous, equal to relu)"},
  };
}

SlopeReport verify_slope_restriction(const ActivationSpec& spec, std::size_t sample_count,
                                     double lo, double hi, std::uint64_t seed, double tol) {
  if (sample_count < 2) throw std::invalid_argument("verify_slope_restriction: need >= 2 samples");
  if (!(std::isfinite(lo) && std::isfinite(hi) && lo < hi)) {
    throw std::invalid_argument("verify_slope_restriction: domain must be a finite interval");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  SlopeReport report;
  report.min_quotient = std::numeric_limits<double>::infinity();
  report.max_quotient = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < sample_count; ++k) {
    const double v = dist(rng);
    const double w = dist(rng);
    if (v == w) continue;
    const double q = (activation_eval(spec, v) - activation_eval(spec, w)) / (v - w);
    ++report.pairs;
    report.min_quotient = std::min(report.min_quotient, q);
    report.max_quotient = std::max(report.max_quotient, q);
    if (q < spec.m - tol || q > spec.L + tol) ++report.violations;
  }
  return report;
}

NumericConstants numeric_constants(const ActivationSpec& spec, double lo, double hi,
                                   double step) {
  if (!(step > 0.0) || !(lo < hi)) {
    throw std::invalid_argument("numeric_constants: need lo < hi and step > 0");
  }
  const auto points = static_cast<std::size_t>(std::llround((hi - lo) / step)) + 1;
  if (points < 3) throw std::invalid_argument("numeric_constants: grid too coarse");
  std::vector<double> values(points);
  for (std::size_t k = 0; k < points; ++k) {
    values[k] = activation_eval(spec, lo + static_cast<double>(k) * step);
  }
  NumericConstants out{-std::numeric_limits<double>::infinity(),
                       std::numeric_limits<double>::infinity()};
  for (std::size_t k = 1; k + 1 < points; ++k) {
    const double slope = (values[k + 1] - values[k - 1]) / (2.0 * step);
    out.L_hat = std::max(out.L_hat, slope);
    out.m_hat = std::min(out.m_hat, slope);
  }
  return out;
}

}  // namespace gresnet
