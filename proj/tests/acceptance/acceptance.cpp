// One PASS/FAIL line per criterion. Exit status 0 only when every selected
// criterion passes.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "gresnet/lmi.hpp"
#include "gresnet/network.hpp"
#include "gresnet/training.hpp"
#include "oracles.hpp"
#include "random_blocks.hpp"

using namespace gresnet;
using std::numbers::pi;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

constexpr std::uint64_t kConfigs = 100;

// 1. Every disc upper bound <= 1e-9 and every eigenvalue <= 1e-8.
Outcome certification() {
  double worst_disc = -INFINITY, worst_eig = -INFINITY;
  std::size_t failures = 0;
  for (std::uint64_t seed = 0; seed < kConfigs; ++seed) {
    const LmiReport r = verify_block(backward_pass(testing::random_raw_block(seed)));
    worst_disc = std::max(worst_disc, r.max_disc_upper);
    worst_eig = std::max(worst_eig, r.max_eig);
    if (!(r.max_disc_upper <= 1e-9 && r.max_eig <= 1e-8 && r.eig_converged)) ++failures;
  }
  return {failures == 0, "max disc upper " + fmt(worst_disc) + ", max eigenvalue " + fmt(worst_eig) + ", " +
                             std::to_string(failures) + "/" + std::to_string(kConfigs) + " blocks failing"};
}

// 2. Each eigenvalue inside some disc interval, tolerance 1e-9.
Outcome containment() {
  std::size_t outside = 0, total = 0;
  for (std::uint64_t seed = 0; seed < kConfigs; ++seed) {
    const Matrix m = assemble_lmi(backward_pass(testing::random_raw_block(seed))).values;
    const auto discs = gershgorin_discs(m);
    for (double ev : eigenvalues_symmetric(m).values) {
      ++total;
      const bool inside = std::any_of(discs.begin(), discs.end(), [ev](const GershgorinDisc& d) {
        return ev >= d.lower() - 1e-9 && ev <= d.upper() + 1e-9;
      });
      if (!inside) ++outside;
    }
  }
  return {outside == 0, std::to_string(total) + " eigenvalues, " + std::to_string(outside) + " outside every disc"};
}

// 3. Empirical ratio over 1e4 pairs <= Lip (1 + 1e-6) on 20 models.
Outcome empirical() {
  double worst_ratio = 0.0;
  std::size_t failures = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto cfg = testing::random_block_config(seed);
    const Model model = make_model(cfg.shape, 1 + seed % 3, cfg.lipschitz, cfg.activations, seed);
    PairSampler sampler;
    sampler.pairs = 10000;
    sampler.seed = seed;
    const double est = empirical_lipschitz(materialize(model), sampler);
    worst_ratio = std::max(worst_ratio, est / cfg.lipschitz);
    if (!(est <= cfg.lipschitz * (1 + 1e-6))) ++failures;
  }
  return {failures == 0, "worst estimate/bound " + fmt(worst_ratio) + ", " + std::to_string(failures) + "/20 over"};
}

// 4. Default sine experiment collapses to a line.
Outcome collapse() {
  const double lo = -2 * pi, hi = 2 * pi;
  const Dataset data = make_sine_dataset(1024, lo, hi, 0.5, 42);
  const std::vector<ActivationSpec> acts{make_activation("relu"), make_activation("relu")};
  const LinearOracle half = linear_fit_oracle(lo, hi, 0.5);
  const LinearOracle full = linear_fit_oracle(lo, hi, 1.0);
  const double closed_form_loss = 0.5 - 3.0 / (4 * pi * pi);

  auto run = [&](const std::string& name) {
    Model model = make_model(BlockShape{1, {32, 1}}, 1, 1.0, acts, 42);
    OptimizerConfig cfg;
    cfg.name = name;
    return train(model, data, cfg);
  };
  const TrainingHistory adam = run("adam");
  const TrainingHistory sgd = run("sgd");

  const bool a = adam.collapse.r2 >= 0.99;
  const bool b = adam.final_mse >= 0.95 * half.loss;
  const bool c = std::fabs(full.loss - closed_form_loss) <= 1e-12;
  const bool certified = adam.certification_failures == 0 && !adam.diverged;
  std::string detail = "(a) R^2 " + fmt(adam.collapse.r2) + (a ? " ok" : " < 0.99") + "; (b) MSE " +
                       fmt(adam.final_mse) + " vs 0.95 x " + fmt(half.loss) + (b ? " ok" : " below") +
                       "; (c) oracle " + fmt(full.loss) + (c ? " ok" : " off") + "; certification failures " +
                       std::to_string(adam.certification_failures) + "; sgd for reference: R^2 " +
                       fmt(sgd.collapse.r2) + ", MSE " + fmt(sgd.final_mse);
  return {a && b && c && certified, detail};
}

// 5. Finite-difference agreement on >= 95% of 200 coordinates.
Outcome gradients() {
  constexpr std::size_t kModels = 5, kPerModel = 40;
  std::size_t agree = 0, compared = 0, resampled = 0;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < kModels; ++seed) {
    const auto cfg = testing::random_block_config(1000 + seed);
    const Model model = make_model(cfg.shape, 1 + seed % 2, cfg.lipschitz, cfg.activations, seed);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.5);
    std::vector<Vector> xs(8, Vector(cfg.shape.state_dim)), ys(8, Vector(cfg.shape.state_dim));
    for (auto& x : xs) std::generate(x.begin(), x.end(), [&] { return normal(rng); });
    for (auto& y : ys) std::generate(y.begin(), y.end(), [&] { return normal(rng); });

    const LossGradient lg = loss_and_gradient(model, xs, ys);
    const Vector flat = flatten_parameters(model);
    auto loss_at = [&](const std::vector<double>& p) {
      Model m = model;
      assign_parameters(m, p);
      return dataset_loss(materialize(m), xs, ys);
    };
    std::uniform_int_distribution<std::size_t> pick(0, flat.size() - 1);
    std::size_t taken = 0;
    for (std::size_t attempt = 0; taken < kPerModel && attempt < 50 * kPerModel; ++attempt) {
      const std::size_t i = pick(rng);
      const auto fd = testing::central_difference(loss_at, flat, i, 1e-5);
      if (fd.kink) {
        ++resampled;
        continue;
      }
      ++taken;
      ++compared;
      const double err = std::fabs(fd.value - lg.gradient[i]);
      const double scale = std::max(std::fabs(fd.value), std::fabs(lg.gradient[i]));
      worst = std::max(worst, err / std::max(scale, 1e-300));
      if (err <= 1e-4 * scale + 1e-9) ++agree;
    }
  }
  const double frac = compared ? static_cast<double>(agree) / static_cast<double>(compared) : 0.0;
  return {compared == kModels * kPerModel && frac >= 0.95,
          std::to_string(agree) + "/" + std::to_string(compared) + " agree (" + std::to_string(resampled) +
              " kink samples redrawn), worst relative error " + fmt(worst)};
}

// 6. Numeric slope extremes against the reference (L, m) rows.
Outcome table_constants() {
  const std::map<std::string, std::pair<double, double>> reference{
      {"elu", {1, 0}},          {"hardsigmoid", {1.0 / 6.0, 0}},
      {"hardtanh", {1, 0}},     {"hardswish", {1.5, -0.5}},
      {"leaky_relu", {1, 0.01}}, {"logsigmoid", {1, 0}},
      {"prelu", {1, 0.25}},     {"relu", {1, 0}},
      {"relu6", {1, 0}},        {"selu", {1.758099341, 0}},
      {"celu", {1, 0}},         {"gelu", {1.128904145, -0.1289041452}},
      {"sigmoid", {1, 0}},      {"silu", {1.099839320, -0.09983932013}},
      {"softplus", {1, 0}},     {"mish", {1.199678640, -0.2157287822}},
      {"softshrink", {1, 0}},   {"softsign", {1, 0}},
      {"tanh", {1, 0}},         {"tanhshrink", {1, 0}},
      {"threshold", {1, 0}},
  };
  std::vector<std::string> off;
  std::string notes;
  std::size_t checked = 0;
  for (const auto& spec : activation_catalog()) {
    const auto it = reference.find(spec.name);
    if (it == reference.end()) {
      off.push_back(spec.name + " (no reference row)");
      continue;
    }
    ++checked;
    const NumericConstants nc = numeric_constants(spec, -50.0, 50.0, 1e-4);
    const double dl = std::fabs(nc.L_hat - it->second.first), dm = std::fabs(nc.m_hat - it->second.second);
    if (dl > 1e-3 || dm > 1e-3) {
      off.push_back(spec.name + " (L_hat " + fmt(nc.L_hat) + " vs " + fmt(it->second.first) + ", m_hat " +
                    fmt(nc.m_hat) + " vs " + fmt(it->second.second) + ")");
    }
  }
  std::string detail = std::to_string(checked) + " rows checked";
  if (!off.empty()) {
    detail += "; mismatched:";
    for (const auto& o : off) detail += " " + o;
  }
  return {off.empty() && checked == reference.size(), detail};
}

// 7. Every parameter inequality holds after materialization.
Outcome checklist() {
  std::size_t violations = 0, checks = 0;
  std::map<std::string, std::size_t> by_name;
  for (std::uint64_t seed = 0; seed < kConfigs; ++seed) {
    for (const auto& c : check_constraints(backward_pass(testing::random_raw_block(seed)))) {
      checks += c.checked;
      violations += c.violations;
      if (c.violations) by_name[c.name] += c.violations;
    }
  }
  std::string detail = std::to_string(checks) + " inequalities, " + std::to_string(violations) + " violated";
  for (const auto& [name, n] : by_name) detail += " " + name + "=" + std::to_string(n);
  return {violations == 0 && checks > 0, detail};
}

// 8. Row bound below the element bound for P > 0 activations.
Outcome dominance() {
  std::size_t checked = 0, failed = 0;
  std::string names;
  for (const auto& spec : activation_catalog()) {
    if (!(spec.P > 0.0)) continue;
    names += (names.empty() ? "" : ", ") + spec.name;
    const double abs_s = std::fabs(spec.S);
    const double element = (spec.S * spec.S + 4 * std::fabs(spec.P)) / (2 * (std::fabs(spec.P) + spec.P) * abs_s);
    for (int d = 1; d <= 64; ++d, ++checked) {
      if (!(2.0 / (abs_s * d) <= element)) ++failed;
    }
  }
  return {checked > 0 && failed == 0,
          std::to_string(checked) + " cases over " + names + ", " + std::to_string(failed) + " failed"};
}

// 9. Jacobi against the Sturm-sequence oracle.
Outcome eigensolver() {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> size(1, 8);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = size(rng);
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i; j < n; ++j) m(i, j) = m(j, i) = u(rng);
    }
    const auto jac = eigenvalues_symmetric(m).values;
    const auto ref = testing::sturm_eigenvalues(m);
    for (std::size_t k = 0; k < n; ++k) worst = std::max(worst, std::fabs(jac[k] - ref[k]));
  }
  return {worst <= 1e-9, "1000 matrices, max abs difference " + fmt(worst)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  std::vector<int> selected;
  app.add_option("--criterion", selected, "Criterion number(s) to run (default: all)")->check(CLI::Range(1, 9));
  CLI11_PARSE(app, argc, argv);
  if (selected.empty()) selected = {1, 2, 3, 4, 5, 6, 7, 8, 9};

  const std::map<int, std::pair<const char*, std::function<Outcome()>>> criteria{
      {1, {"certification soundness", certification}},
      {2, {"eigenvalue/disc containment", containment}},
      {3, {"empirical Lipschitz", empirical}},
      {4, {"collapse reproduction", collapse}},
      {5, {"gradient correctness", gradients}},
      {6, {"activation constants", table_constants}},
      {7, {"constraint checklist", checklist}},
      {8, {"dominance inequality", dominance}},
      {9, {"eigensolver oracle", eigensolver}},
  };
  bool all = true;
  for (int n : selected) {
    const auto& [name, fn] = criteria.at(n);
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %d %s: %s (%s; %.1fs)\n", n, name, o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs);
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
