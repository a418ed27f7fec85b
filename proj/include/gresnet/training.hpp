#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gresnet/network.hpp"

namespace gresnet {

struct Dataset {
  std::vector<Vector> inputs;   // each of length d_x
  std::vector<Vector> targets;
  double lo = 0.0;
  double hi = 0.0;
  double amplitude = 0.0;

  std::size_t size() const noexcept { return inputs.size(); }
};

// N inputs drawn uniformly from (lo, hi), targets amplitude * sin(x). d_x = 1.
Dataset make_sine_dataset(std::size_t n, double lo, double hi, double amplitude,
                          std::uint64_t seed);

double mse_loss(std::span<const double> pred, std::span<const double> target);

// Mean over samples and components of the squared error of the model output.
double dataset_loss(const MaterializedModel& model, const std::vector<Vector>& inputs,
                    const std::vector<Vector>& targets);

// Flat parameter layout, block by block: W_raw for every layer (row-major),
// a_raw, b_raw, then the biases for every layer.
Vector flatten_parameters(const Model& model);
void assign_parameters(Model& model, std::span<const double> flat);
std::string parameter_name(const Model& model, std::size_t index);

class NonFiniteGradientError : public std::runtime_error {
 public:
  NonFiniteGradientError(std::size_t index, const std::string& name)
      : std::runtime_error("non-finite gradient at parameter " + std::to_string(index) + " (" +
                           name + ")"),
        index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

struct LossGradient {
  double loss = 0.0;
  Vector gradient;  // flat layout, see flatten_parameters
};

// MSE and its gradient with respect to every raw parameter, differentiating
// through the whole materialization (Lambda recursion, clamps, row budgets).
LossGradient loss_and_gradient(const Model& model, const std::vector<Vector>& inputs,
                               const std::vector<Vector>& targets,
                               const MaterializeConfig& config = {});

struct OptimizerConfig {
  std::string name = "adam";  // "adam" or "sgd"
  double lr = 1e-2;
  std::size_t epochs = 2000;
  std::size_t batch = 0;  // 0 = full batch
  std::uint64_t seed = 42;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t certify_every = 100;  // 0 disables the spot check

  void validate() const;
};

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 1.0;
  double max_residual = 0.0;
};

struct TrainingHistory {
  std::string optimizer;
  Vector losses;  // mean training loss of each epoch, before its updates
  bool diverged = false;
  std::string divergence_reason;
  std::size_t certification_checks = 0;
  std::size_t certification_failures = 0;
  double final_mse = 0.0;
  LineFit collapse;
};

// Updates `model` in place. Deterministic in config.seed. On divergence the
// model keeps the last parameters with a finite loss.
TrainingHistory train(Model& model, const Dataset& data, const OptimizerConfig& config,
                      const MaterializeConfig& materialize_config = {});

// Least-squares line through (x, y); R^2 = 1 when y is constant.
LineFit fit_line(std::span<const double> x, std::span<const double> y);

// Line fit of a scalar model over M uniformly spaced points of [lo, hi].
LineFit collapse_metric(const MaterializedModel& model, double lo, double hi, std::size_t points);

struct LinearOracle {
  double slope = 0.0;
  double intercept = 0.0;
  double loss = 0.0;
};

// Best line against amplitude * sin(x) in mean square over the interval,
// from closed-form integrals.
LinearOracle linear_fit_oracle(double lo, double hi, double amplitude);

}  // namespace gresnet
