#include "gresnet/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "gresnet/lmi.hpp"
#include "gresnet/simd/kernels.hpp"

namespace gresnet {
namespace {

void check_batch(const std::vector<Vector>& inputs, const std::vector<Vector>& targets,
                 std::size_t dx) {
  if (inputs.empty()) throw std::invalid_argument("batch must not be empty");
  if (inputs.size() != targets.size()) throw std::invalid_argument("inputs and targets differ in count");
  for (std::size_t s = 0; s < inputs.size(); ++s) {
    if (inputs[s].size() != dx || targets[s].size() != dx) {
      throw std::invalid_argument("sample " + std::to_string(s) + " does not have the state dimension");
    }
  }
}

struct BlockGrad {
  Vector a, b;
  std::vector<Matrix> c;
  std::vector<Vector> bias;

  explicit BlockGrad(const MaterializedBlock& block)
      : a(block.shape.state_dim, 0.0), b(block.shape.state_dim, 0.0) {
    for (std::size_t l = 0; l < block.shape.depth(); ++l) {
      c.emplace_back(block.weights[l].rows(), block.weights[l].cols(), 0.0);
      bias.emplace_back(block.weights[l].rows(), 0.0);
    }
  }
};

// Accumulates parameter gradients of one sample and returns d loss / d x.
Vector block_backward(const MaterializedBlock& block, std::span<const double> x,
                      const std::vector<LayerTrace>& trace, std::span<const double> g_out,
                      BlockGrad& grad) {
  const auto& k = simd::active();
  const std::size_t dx = block.shape.state_dim;
  const std::size_t n = block.shape.depth();
  Vector g_x(dx);
  Vector g_w(dx);
  for (std::size_t i = 0; i < dx; ++i) {
    grad.a[i] += g_out[i] * x[i];
    grad.b[i] += g_out[i] * trace[n - 1].post[i];
    g_x[i] = g_out[i] * block.a[i];
    g_w[i] = g_out[i] * block.b[i];
  }
  for (std::size_t l = n; l-- > 0;) {
    const Matrix& c = block.weights[l];
    Vector g_z(c.rows());
    for (std::size_t j = 0; j < c.rows(); ++j) {
      g_z[j] = g_w[j] * activation_derivative(block.activations[l], trace[l].pre[j]);
      grad.bias[l][j] += g_z[j];
    }
    const double* input = l == 0 ? x.data() : trace[l - 1].post.data();
    for (std::size_t j = 0; j < c.rows(); ++j) {
      if (g_z[j] != 0.0) k.axpy(g_z[j], input, grad.c[l].row(j).data(), c.cols());
    }
    Vector g_in(c.cols());
    k.gemv_t(c.flat().data(), c.rows(), c.cols(), g_z.data(), g_in.data());
    if (l == 0) {
      for (std::size_t i = 0; i < dx; ++i) g_x[i] += g_in[i];
    } else {
      g_w = std::move(g_in);
    }
  }
  return g_x;
}

void seed(std::vector<double>& adjoint, const ad::Var& v, double g) {
  if (!v.is_constant()) adjoint[static_cast<std::size_t>(v.index())] += g;
}

double adjoint_of(const std::vector<double>& adjoint, const ad::Var& leaf) {
  return adjoint[static_cast<std::size_t>(leaf.index())];
}

}  // namespace

Dataset make_sine_dataset(std::size_t n, double lo, double hi, double amplitude,
                          std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("make_sine_dataset: at least two points are required");
  if (!(lo < hi)) throw std::invalid_argument("make_sine_dataset: empty domain");
  Dataset data;
  data.lo = lo;
  data.hi = hi;
  data.amplitude = amplitude;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(lo, hi);
  for (std::size_t i = 0; i < n; ++i) {
    double x = uniform(rng);
    while (x <= lo) x = uniform(rng);  // open interval
    data.inputs.push_back({x});
    data.targets.push_back({amplitude * std::sin(x)});
  }
  return data;
}

double mse_loss(std::span<const double> pred, std::span<const double> target) {
  if (pred.size() != target.size()) throw std::invalid_argument("mse_loss: length mismatch");
  if (pred.empty()) throw std::invalid_argument("mse_loss: empty input");
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) acc += (pred[i] - target[i]) * (pred[i] - target[i]);
  return acc / static_cast<double>(pred.size());
}

double dataset_loss(const MaterializedModel& model, const std::vector<Vector>& inputs,
                    const std::vector<Vector>& targets) {
  check_batch(inputs, targets, model.state_dim());
  double acc = 0.0;
  for (std::size_t s = 0; s < inputs.size(); ++s) {
    const Vector out = model_forward(model, inputs[s]);
    for (std::size_t i = 0; i < out.size(); ++i) acc += (out[i] - targets[s][i]) * (out[i] - targets[s][i]);
  }
  return acc / static_cast<double>(inputs.size() * model.state_dim());
}

Vector flatten_parameters(const Model& model) {
  Vector flat;
  flat.reserve(model.parameter_count());
  for (const auto& b : model.blocks) {
    for (const auto& w : b.weights_raw) flat.insert(flat.end(), w.flat().begin(), w.flat().end());
    flat.insert(flat.end(), b.a_raw.begin(), b.a_raw.end());
    flat.insert(flat.end(), b.b_raw.begin(), b.b_raw.end());
    for (const auto& v : b.biases) flat.insert(flat.end(), v.begin(), v.end());
  }
  return flat;
}

void assign_parameters(Model& model, std::span<const double> flat) {
  if (flat.size() != model.parameter_count()) {
    throw std::invalid_argument("assign_parameters: expected " +
                                std::to_string(model.parameter_count()) + " values, got " +
                                std::to_string(flat.size()));
  }
  std::size_t pos = 0;
  auto take = [&](std::span<double> dst) {
    std::copy(flat.begin() + static_cast<std::ptrdiff_t>(pos),
              flat.begin() + static_cast<std::ptrdiff_t>(pos + dst.size()), dst.begin());
    pos += dst.size();
  };
  for (auto& b : model.blocks) {
    for (auto& w : b.weights_raw) take(w.flat());
    take(b.a_raw);
    take(b.b_raw);
    for (auto& v : b.biases) take(v);
  }
}

std::string parameter_name(const Model& model, std::size_t index) {
  std::size_t pos = 0;
  for (std::size_t k = 0; k < model.blocks.size(); ++k) {
    const RawBlock& b = model.blocks[k];
    const std::string prefix = "block" + std::to_string(k) + ".";
    for (std::size_t l = 0; l < b.weights_raw.size(); ++l) {
      const Matrix& w = b.weights_raw[l];
      if (index < pos + w.size()) {
        const std::size_t off = index - pos;
        return prefix + "W_raw" + std::to_string(l + 1) + "[" + std::to_string(off / w.cols()) + "," +
               std::to_string(off % w.cols()) + "]";
      }
      pos += w.size();
    }
    if (index < pos + b.a_raw.size()) return prefix + "a_raw[" + std::to_string(index - pos) + "]";
    pos += b.a_raw.size();
    if (index < pos + b.b_raw.size()) return prefix + "b_raw[" + std::to_string(index - pos) + "]";
    pos += b.b_raw.size();
    for (std::size_t l = 0; l < b.biases.size(); ++l) {
      if (index < pos + b.biases[l].size()) {
        return prefix + "bias" + std::to_string(l + 1) + "[" + std::to_string(index - pos) + "]";
      }
      pos += b.biases[l].size();
    }
  }
  return "out-of-range[" + std::to_string(index) + "]";
}

LossGradient loss_and_gradient(const Model& model, const std::vector<Vector>& inputs,
                               const std::vector<Vector>& targets, const MaterializeConfig& config) {
  model.validate();
  const std::size_t dx = model.state_dim();
  check_batch(inputs, targets, dx);
  const std::size_t K = model.blocks.size();

  // 1. Materialize every block on the tape.
  ad::Tape tape;
  std::vector<std::vector<BasicMatrix<ad::Var>>> w_leaves(K);
  std::vector<std::vector<ad::Var>> a_leaves(K), b_leaves(K);
  std::vector<BasicMaterializedBlock<ad::Var>> taped;
  MaterializedModel mat;
  mat.lipschitz_total = model.lipschitz_total;
  for (std::size_t k = 0; k < K; ++k) {
    const RawBlock& raw = model.blocks[k];
    for (const auto& w : raw.weights_raw) {
      BasicMatrix<ad::Var> leaf(w.rows(), w.cols());
      for (std::size_t i = 0; i < w.size(); ++i) leaf.flat()[i] = ad::Var(tape, w.flat()[i]);
      w_leaves[k].push_back(std::move(leaf));
    }
    for (double v : raw.a_raw) a_leaves[k].emplace_back(tape, v);
    for (double v : raw.b_raw) b_leaves[k].emplace_back(tape, v);
    taped.push_back(backward_pass<ad::Var>(raw.shape, raw.lipschitz, raw.activations, w_leaves[k],
                                           a_leaves[k], b_leaves[k], config));
    MaterializedBlock block;
    block.shape = raw.shape;
    block.lipschitz = raw.lipschitz;
    block.activations = raw.activations;
    block.a = values_of(taped.back().a);
    block.b = values_of(taped.back().b);
    for (const auto& w : taped.back().weights) block.weights.push_back(values_of(w));
    for (const auto& v : taped.back().lambdas) block.lambdas.push_back(values_of(v));
    block.biases = raw.biases;
    mat.blocks.push_back(std::move(block));
  }

  // 2. Forward and hand-written backward over the batch in doubles.
  std::vector<BlockGrad> grads;
  for (const auto& b : mat.blocks) grads.emplace_back(b);
  const double scale = 2.0 / static_cast<double>(inputs.size() * dx);
  double loss = 0.0;
  std::vector<Vector> states(K + 1);
  std::vector<std::vector<LayerTrace>> traces(K);
  for (std::size_t s = 0; s < inputs.size(); ++s) {
    states[0] = inputs[s];
    for (std::size_t k = 0; k < K; ++k) states[k + 1] = block_forward(mat.blocks[k], states[k], &traces[k]);
    Vector g(dx);
    for (std::size_t i = 0; i < dx; ++i) {
      const double diff = states[K][i] - targets[s][i];
      loss += diff * diff;
      g[i] = scale * diff;
    }
    for (std::size_t k = K; k-- > 0;) g = block_backward(mat.blocks[k], states[k], traces[k], g, grads[k]);
  }
  loss /= static_cast<double>(inputs.size() * dx);

  // 3. Push the materialized-parameter gradients back to the raw leaves.
  std::vector<double> adjoint(tape.size(), 0.0);
  for (std::size_t k = 0; k < K; ++k) {
    const auto& t = taped[k];
    for (std::size_t i = 0; i < dx; ++i) {
      seed(adjoint, t.a[i], grads[k].a[i]);
      seed(adjoint, t.b[i], grads[k].b[i]);
    }
    for (std::size_t l = 0; l < t.weights.size(); ++l) {
      for (std::size_t e = 0; e < t.weights[l].size(); ++e) {
        seed(adjoint, t.weights[l].flat()[e], grads[k].c[l].flat()[e]);
      }
    }
  }
  tape.backward(adjoint);

  LossGradient out;
  out.loss = loss;
  out.gradient.reserve(model.parameter_count());
  for (std::size_t k = 0; k < K; ++k) {
    for (const auto& w : w_leaves[k]) {
      for (const auto& leaf : w.flat()) out.gradient.push_back(adjoint_of(adjoint, leaf));
    }
    for (const auto& leaf : a_leaves[k]) out.gradient.push_back(adjoint_of(adjoint, leaf));
    for (const auto& leaf : b_leaves[k]) out.gradient.push_back(adjoint_of(adjoint, leaf));
    for (const auto& v : grads[k].bias) out.gradient.insert(out.gradient.end(), v.begin(), v.end());
  }
  for (std::size_t i = 0; i < out.gradient.size(); ++i) {
    if (!std::isfinite(out.gradient[i])) throw NonFiniteGradientError(i, parameter_name(model, i));
  }
  return out;
}

void OptimizerConfig::validate() const {
  if (name != "adam" && name != "sgd") {
    throw std::invalid_argument("optimizer must be 'adam' or 'sgd', got '" + name + "'");
  }
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw std::invalid_argument("learning rate must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(eps > 0.0)) {
    throw std::invalid_argument("Adam hyperparameters out of range");
  }
}

TrainingHistory train(Model& model, const Dataset& data, const OptimizerConfig& config,
                      const MaterializeConfig& materialize_config) {
  config.validate();
  model.validate();
  check_batch(data.inputs, data.targets, model.state_dim());

  TrainingHistory history;
  history.optimizer = config.name;
  const std::size_t n = data.size();
  const std::size_t batch = config.batch == 0 ? n : std::min(config.batch, n);
  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  Vector params = flatten_parameters(model);
  Vector m1(params.size(), 0.0), m2(params.size(), 0.0);
  std::size_t step = 0;
  std::vector<Vector> xb, yb;

  for (std::size_t epoch = 0; epoch < config.epochs && !history.diverged; ++epoch) {
    if (batch < n) std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t end = std::min(n, start + batch);
      xb.clear();
      yb.clear();
      for (std::size_t i = start; i < end; ++i) {
        xb.push_back(data.inputs[order[i]]);
        yb.push_back(data.targets[order[i]]);
      }
      LossGradient lg;
      try {
        lg = loss_and_gradient(model, xb, yb, materialize_config);
      } catch (const NonFiniteGradientError& e) {
        history.diverged = true;
        history.divergence_reason = e.what();
        break;
      }
      if (!std::isfinite(lg.loss)) {
        history.diverged = true;
        history.divergence_reason = "non-finite loss in epoch " + std::to_string(epoch);
        break;
      }
      epoch_loss += lg.loss * static_cast<double>(end - start);

      Vector next = params;
      ++step;
      if (config.name == "sgd") {
        for (std::size_t i = 0; i < next.size(); ++i) next[i] -= config.lr * lg.gradient[i];
      } else {
        const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
        const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
        for (std::size_t i = 0; i < next.size(); ++i) {
          const double g = lg.gradient[i];
          m1[i] = config.beta1 * m1[i] + (1.0 - config.beta1) * g;
          m2[i] = config.beta2 * m2[i] + (1.0 - config.beta2) * g * g;
          next[i] -= config.lr * (m1[i] / c1) / (std::sqrt(m2[i] / c2) + config.eps);
        }
      }
      if (!std::all_of(next.begin(), next.end(), [](double v) { return std::isfinite(v); })) {
        history.diverged = true;
        history.divergence_reason = "non-finite parameter update in epoch " + std::to_string(epoch);
        break;
      }
      params = std::move(next);
      assign_parameters(model, params);
    }
    if (history.diverged) break;
    history.losses.push_back(epoch_loss / static_cast<double>(n));

    const bool last = epoch + 1 == config.epochs;
    if (config.certify_every > 0 && ((epoch + 1) % config.certify_every == 0 || last)) {
      const MaterializedModel mat = materialize(model, materialize_config);
      for (const auto& block : mat.blocks) {
        ++history.certification_checks;
        if (!verify_block(block).pass()) ++history.certification_failures;
      }
    }
  }

  const MaterializedModel mat = materialize(model, materialize_config);
  history.final_mse = dataset_loss(mat, data.inputs, data.targets);
  if (mat.state_dim() == 1) history.collapse = collapse_metric(mat, data.lo, data.hi, 512);
  return history;
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("fit_line: length mismatch");
  if (x.size() < 2) throw std::invalid_argument("fit_line: at least two points are required");
  const double count = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / count;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / count;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_line: degenerate abscissae");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (fit.slope * x[i] + fit.intercept);
    ss_res += r * r;
    fit.max_residual = std::max(fit.max_residual, std::fabs(r));
  }
  fit.r2 = syy == 0.0 ? 1.0 : 1.0 - ss_res / syy;
  return fit;
}

LineFit collapse_metric(const MaterializedModel& model, double lo, double hi, std::size_t points) {
  if (points < 3) throw std::invalid_argument("collapse_metric: at least three grid points are required");
  if (!(lo < hi)) throw std::invalid_argument("collapse_metric: degenerate grid");
  if (model.state_dim() != 1) throw std::invalid_argument("collapse_metric: scalar model required");
  Vector xs(points), ys(points);
  for (std::size_t i = 0; i < points; ++i) {
    xs[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
    ys[i] = model_forward(model, std::span<const double>(&xs[i], 1))[0];
  }
  return fit_line(xs, ys);
}

LinearOracle linear_fit_oracle(double lo, double hi, double amplitude) {
  if (!(lo < hi)) throw std::invalid_argument("linear_fit_oracle: empty domain");
  const double w = hi - lo;
  // Means under the uniform measure on [lo, hi].
  const double ex = (hi * hi - lo * lo) / (2.0 * w);
  const double exx = (hi * hi * hi - lo * lo * lo) / (3.0 * w);
  const double es = (std::cos(lo) - std::cos(hi)) / w;
  const double exs = ((std::sin(hi) - hi * std::cos(hi)) - (std::sin(lo) - lo * std::cos(lo))) / w;
  const double ess = ((hi / 2.0 - std::sin(2.0 * hi) / 4.0) - (lo / 2.0 - std::sin(2.0 * lo) / 4.0)) / w;

  const double ey = amplitude * es;
  const double exy = amplitude * exs;
  const double eyy = amplitude * amplitude * ess;
  const double var_x = exx - ex * ex;
  LinearOracle out;
  out.slope = (exy - ex * ey) / var_x;
  out.intercept = ey - out.slope * ex;
  const double a = out.slope, b = out.intercept;
  out.loss = eyy - 2.0 * a * exy - 2.0 * b * ey + a * a * exx + 2.0 * a * b * ex + b * b;
  // Symmetric domains: the odd moments vanish analytically.
  if (lo == -hi) {
    out.intercept = 0.0;
    out.slope = exy / exx;
    out.loss = eyy - exy * exy / exx;
  }
  return out;
}

}  // namespace gresnet
